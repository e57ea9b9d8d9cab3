#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sodkit/grid.hpp"
#include "sodkit/nn.hpp"

namespace sodkit {

// Scaled-down stand-in for the full backbone: encoder level i carries
// base_channels * 2^i channels at stride 2^i. The reference column in the
// shape table maps those counts onto the full-size backbone (base 64).
struct TopologyConfig {
  int input_height = 64;
  int input_width = 64;
  int base_channels = 8;
  uint64_t seed = 0;

  void validate() const;  // dims >= 32 and divisible by 32; base >= 4, divisible by 4

  int encoder_channels(int level) const { return base_channels << level; }
  int decoder_channels() const { return base_channels * 4; }
};

struct FeaturePyramid {
  Tensor3 f2, f3, f4, f5;  // strides 4, 8, 16, 32
};

struct ShapeRow {
  std::string name;
  int channels = 0;
  int height = 0;
  int width = 0;
  int reference_channels = 0;

  bool operator==(const ShapeRow&) const = default;
};

// The expected shape of every named intermediate for a given configuration.
std::vector<ShapeRow> contract_table(const TopologyConfig& cfg);

// Forward-only network with randomly initialized weights. Construction is
// deterministic in the seed; a forward pass is deterministic in the input.
class Network {
 public:
  struct TsResult {
    Tensor3 f_e4, f_e3, f_e2;
    GrayMap pred;
  };
  struct OsResult {
    GrayMap p5, p4, p3, p2;
  };
  struct Outputs {
    GrayMap ts_pred;
    GrayMap p5, p4, p3, p2;
    // Level order expected by the multi-level loss.
    std::vector<GrayMap> levels_2_to_5() const { return {p2, p3, p4, p5}; }
  };
  using Recorder = std::vector<ShapeRow>;

  explicit Network(const TopologyConfig& cfg);

  const TopologyConfig& config() const { return cfg_; }

  FeaturePyramid encoder(const Tensor3& image, Recorder* rec = nullptr) const;
  TsResult ts_branch(const FeaturePyramid& pyr, Recorder* rec = nullptr) const;

  // Context feature block at the coarsest stride (the level-5 decoder input).
  Tensor3 context_features(const Tensor3& f5) const;
  // Globally gated context tensor shared by every aggregation stage.
  Tensor3 global_context(const Tensor3& f5) const;

  OsResult os_branch(const FeaturePyramid& pyr, const TsResult& ts, Recorder* rec = nullptr) const;

  Outputs forward(const Tensor3& image, Recorder* rec = nullptr) const;

  // Shapes of every named intermediate during an actual forward pass.
  std::vector<ShapeRow> audit(const Tensor3& image) const;

 private:
  struct ConvBnRelu {
    nn::ConvLayer conv;
    nn::BatchNorm bn;
    Tensor3 apply(const Tensor3& x) const;
    static ConvBnRelu make(Rng& rng, int in_c, int out_c, int kernel, int stride = 1,
                           int dilation = 1);
  };

  // Parallel 3x3 branches at dilations 1/2/4 plus a pooled branch,
  // concatenated and mixed down with a 1x1 convolution.
  struct Aspp {
    ConvBnRelu d1, d2, d4;
    nn::Dense pool_fc;
    ConvBnRelu mix;
    Tensor3 apply(const Tensor3& x) const;
    static Aspp make(Rng& rng, int in_c, int out_c);
  };

  // Three 3x3 branches with dilation 1/2/3, concatenated, mixed with a 1x1
  // convolution and joined by a linear 1x1 residual path.
  struct Rfb {
    ConvBnRelu d1, d2, d3;
    nn::ConvLayer mix, residual;
    Tensor3 apply(const Tensor3& x) const;
    static Rfb make(Rng& rng, int in_c, int out_c);
  };

  // 1x1 -> ReLU -> 3x3 -> ReLU -> 1x1 bottleneck, linear output.
  struct ThetaStack {
    nn::ConvLayer c_in, c_mid, c_out;
    Tensor3 apply(const Tensor3& x) const;
    static ThetaStack make(Rng& rng, int channels, int inner);
  };

  // 3x3 -> ReLU -> 1x1, linear output.
  struct ThetaStar {
    nn::ConvLayer c_mid, c_out;
    Tensor3 apply(const Tensor3& x) const;
    static ThetaStar make(Rng& rng, int channels, int inner);
  };

  // Squeeze-excitation channel gate with reduction 4.
  struct ChannelAttention {
    nn::Dense fc1, fc2;
    Tensor3 apply(const Tensor3& x) const;
    static ChannelAttention make(Rng& rng, int channels);
  };

  // Directional attention: pooled row/column strips share a reduction
  // convolution, then per-axis gates rescale the tensor.
  struct CoordinateAttention {
    nn::ConvLayer reduce;
    nn::BatchNorm reduce_bn;
    nn::ConvLayer gate_h, gate_w;
    Tensor3 apply(const Tensor3& x) const;
    static CoordinateAttention make(Rng& rng, int channels);
  };

  // Aggregation stage: low-level lateral features are modulated by the
  // upsampled global context and the higher decoder feature, concatenated
  // with their plain form and mixed down.
  struct FaModule {
    ConvBnRelu low, gc, high, mix;
    Tensor3 apply(const Tensor3& f_low, const Tensor3& f_gc, const Tensor3& f_high) const;
    static FaModule make(Rng& rng, int low_c, int dec_c);
  };

  // Interaction stage followed by two-path self refinement.
  struct FiModule {
    ConvBnRelu fe;
    CoordinateAttention coa;
    ConvBnRelu refine_in;
    nn::ConvLayer refine_w, refine_b;
    Tensor3 interact(const Tensor3& f_e, const Tensor3& f_fa) const;
    Tensor3 refine(const Tensor3& f_i) const;
    static FiModule make(Rng& rng, int dec_c);
  };

  GrayMap head(const nn::ConvLayer& conv, const Tensor3& x) const;

  TopologyConfig cfg_;

  // Encoder stub.
  ConvBnRelu stem_, enc2_, enc3_, enc4_, enc5_;

  // Boundary-expansion branch.
  nn::ConvLayer ts_c5_, ts_c4_, ts_c3_, ts_c2_;
  Aspp ts_aspp5_, ts_aspp4_;
  Rfb ts_rfb3_, ts_rfb2_;
  ThetaStack theta5_, theta4_, theta3_a_, theta3_b_;
  nn::ConvLayer e4_lateral_, e3_lateral_a_, e3_lateral_b_, a_lateral_;
  ThetaStar tstar2_;
  ChannelAttention ca4_, ca3_, ca2_;
  nn::ConvLayer ts_head_;

  // Global context.
  nn::ConvLayer ctx_compress_;
  Aspp ctx_aspp_;
  nn::ConvLayer gate_conv_;
  nn::BatchNorm gate_bn_;
  nn::Dense gc_fc1_, gc_fc2_;

  // Aggregation/interaction cascade and output heads.
  FaModule fa4_, fa3_, fa2_;
  FiModule fi4_, fi3_, fi2_;
  nn::ConvLayer head5_, head4_, head3_, head2_;
};

}  // namespace sodkit
