#pragma once

#include <vector>

#include "sodkit/grid.hpp"
#include "sodkit/rng.hpp"

namespace sodkit::nn {

// Square-kernel 2-D convolution. Padding is dilation*(kernel-1)/2, so
// stride 1 preserves the spatial size and stride 2 halves even inputs
// exactly. Weights are laid out out_c x in_c x k x k.
struct ConvLayer {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  int stride = 1;
  int dilation = 1;
  std::vector<double> weights;
  std::vector<double> bias;

  // Uniform fan-in initialization: U(-1/sqrt(in*k*k), +1/sqrt(in*k*k)),
  // biases zero. Draw order is fixed, so a given rng state fixes the layer.
  static ConvLayer make(Rng& rng, int in_c, int out_c, int kernel, int stride = 1,
                        int dilation = 1);
};

Tensor3 conv2d(const Tensor3& x, const ConvLayer& layer);

// Inference-mode batch normalization with stored statistics.
struct BatchNorm {
  int channels = 0;
  std::vector<double> gamma, beta, mean, var;
  double eps = 1e-5;

  static BatchNorm identity(int channels);
};

Tensor3 batch_norm(const Tensor3& x, const BatchNorm& bn);
Tensor3 relu(const Tensor3& x);
Tensor3 add(const Tensor3& a, const Tensor3& b);
Tensor3 mul(const Tensor3& a, const Tensor3& b);

// Multiplies each channel plane by a scalar gate.
Tensor3 scale_channels(const Tensor3& x, const std::vector<double>& gates);

std::vector<double> global_avg_pool(const Tensor3& x);

// Bilinear upsampling with half-pixel centers (align_corners=false).
Tensor3 upsample_bilinear(const Tensor3& x, int out_h, int out_w);

Tensor3 concat(const std::vector<const Tensor3*>& parts);

// Fully connected layer for attention blocks.
struct Dense {
  int in_dim = 0;
  int out_dim = 0;
  std::vector<double> weights, bias;

  static Dense make(Rng& rng, int in_dim, int out_dim);
  std::vector<double> apply(const std::vector<double>& v) const;
};

// Overflow-safe logistic function.
double sigmoid_scalar(double z);

Tensor3 sigmoid(const Tensor3& x);

}  // namespace sodkit::nn
