#include "sodkit/topology.hpp"

#include <algorithm>
#include <cmath>

namespace sodkit {

void TopologyConfig::validate() const {
  if (input_height < 32 || input_height % 32 != 0 || input_width < 32 ||
      input_width % 32 != 0) {
    throw ContractError("TopologyConfig: input dims must be >= 32 and divisible by 32, got " +
                        std::to_string(input_height) + "x" + std::to_string(input_width));
  }
  if (base_channels < 4 || base_channels % 4 != 0) {
    throw ContractError("TopologyConfig: base_channels must be >= 4 and divisible by 4, got " +
                        std::to_string(base_channels));
  }
}

namespace {

int reference_channels_for(int channels, int base) {
  return (channels == 1 || channels == 3) ? channels : channels * 64 / base;
}

void note(Network::Recorder* rec, const char* name, const Tensor3& t, int base) {
  if (!rec) return;
  rec->push_back({name, t.channels, t.height, t.width,
                  reference_channels_for(t.channels, base)});
}

void note_map(Network::Recorder* rec, const char* name, const GrayMap& m) {
  if (!rec) return;
  rec->push_back({name, 1, m.height, m.width, 1});
}

constexpr double kOpenLow = 0x1.0p-53;

}  // namespace

std::vector<ShapeRow> contract_table(const TopologyConfig& cfg) {
  cfg.validate();
  const int b = cfg.base_channels;
  const int dec = cfg.decoder_channels();
  const int h = cfg.input_height, w = cfg.input_width;
  const auto ref = [b](int c) { return reference_channels_for(c, b); };
  const auto row = [&](const char* name, int c, int div) {
    return ShapeRow{name, c, h / div, w / div, ref(c)};
  };

  std::vector<ShapeRow> rows;
  rows.push_back(row("input", 3, 1));
  rows.push_back(row("stem", 2 * b, 2));
  rows.push_back(row("f2", cfg.encoder_channels(2), 4));
  rows.push_back(row("f3", cfg.encoder_channels(3), 8));
  rows.push_back(row("f4", cfg.encoder_channels(4), 16));
  rows.push_back(row("f5", cfg.encoder_channels(5), 32));
  rows.push_back(row("ts_a5", dec, 32));
  rows.push_back(row("ts_a4", dec, 16));
  rows.push_back(row("ts_rfb3", dec, 8));
  rows.push_back(row("ts_rfb2", dec, 4));
  rows.push_back(row("f_e4", dec, 16));
  rows.push_back(row("f_e3", dec, 8));
  rows.push_back(row("f_e2", dec, 4));
  rows.push_back(row("ts_pred", 1, 1));
  rows.push_back(row("f_h5", dec, 32));
  rows.push_back(row("f_gc", dec, 32));
  rows.push_back(row("f_fa4", dec, 16));
  rows.push_back(row("f_i4", dec, 16));
  rows.push_back(row("f_h4", dec, 16));
  rows.push_back(row("f_fa3", dec, 8));
  rows.push_back(row("f_i3", dec, 8));
  rows.push_back(row("f_h3", dec, 8));
  rows.push_back(row("f_fa2", dec, 4));
  rows.push_back(row("f_i2", dec, 4));
  rows.push_back(row("f_h2", dec, 4));
  rows.push_back(row("p5", 1, 1));
  rows.push_back(row("p4", 1, 1));
  rows.push_back(row("p3", 1, 1));
  rows.push_back(row("p2", 1, 1));
  return rows;
}

Tensor3 Network::ConvBnRelu::apply(const Tensor3& x) const {
  return nn::relu(nn::batch_norm(nn::conv2d(x, conv), bn));
}

Network::ConvBnRelu Network::ConvBnRelu::make(Rng& rng, int in_c, int out_c, int kernel,
                                              int stride, int dilation) {
  ConvBnRelu block;
  block.conv = nn::ConvLayer::make(rng, in_c, out_c, kernel, stride, dilation);
  block.bn = nn::BatchNorm::identity(out_c);
  return block;
}

Tensor3 Network::Aspp::apply(const Tensor3& x) const {
  const Tensor3 b1 = d1.apply(x);
  const Tensor3 b2 = d2.apply(x);
  const Tensor3 b4 = d4.apply(x);

  std::vector<double> pooled = pool_fc.apply(nn::global_avg_pool(x));
  for (double& v : pooled) v = v > 0.0 ? v : 0.0;
  Tensor3 pool_plane(b1.channels, b1.height, b1.width);
  for (int c = 0; c < pool_plane.channels; ++c) {
    double* p = pool_plane.plane(c);
    std::fill(p, p + static_cast<size_t>(b1.height) * b1.width, pooled[c]);
  }

  return mix.apply(nn::concat({&b1, &b2, &b4, &pool_plane}));
}

Network::Aspp Network::Aspp::make(Rng& rng, int in_c, int out_c) {
  Aspp a;
  a.d1 = ConvBnRelu::make(rng, in_c, out_c, 3, 1, 1);
  a.d2 = ConvBnRelu::make(rng, in_c, out_c, 3, 1, 2);
  a.d4 = ConvBnRelu::make(rng, in_c, out_c, 3, 1, 4);
  a.pool_fc = nn::Dense::make(rng, in_c, out_c);
  a.mix = ConvBnRelu::make(rng, 4 * out_c, out_c, 1);
  return a;
}

Tensor3 Network::Rfb::apply(const Tensor3& x) const {
  const Tensor3 b1 = d1.apply(x);
  const Tensor3 b2 = d2.apply(x);
  const Tensor3 b3 = d3.apply(x);
  const Tensor3 mixed = nn::conv2d(nn::concat({&b1, &b2, &b3}), mix);
  return nn::relu(nn::add(mixed, nn::conv2d(x, residual)));
}

Network::Rfb Network::Rfb::make(Rng& rng, int in_c, int out_c) {
  Rfb r;
  r.d1 = ConvBnRelu::make(rng, in_c, out_c, 3, 1, 1);
  r.d2 = ConvBnRelu::make(rng, in_c, out_c, 3, 1, 2);
  r.d3 = ConvBnRelu::make(rng, in_c, out_c, 3, 1, 3);
  r.mix = nn::ConvLayer::make(rng, 3 * out_c, out_c, 1);
  r.residual = nn::ConvLayer::make(rng, in_c, out_c, 1);
  return r;
}

Tensor3 Network::ThetaStack::apply(const Tensor3& x) const {
  Tensor3 t = nn::relu(nn::conv2d(x, c_in));
  t = nn::relu(nn::conv2d(t, c_mid));
  return nn::conv2d(t, c_out);
}

Network::ThetaStack Network::ThetaStack::make(Rng& rng, int channels, int inner) {
  ThetaStack t;
  t.c_in = nn::ConvLayer::make(rng, channels, inner, 1);
  t.c_mid = nn::ConvLayer::make(rng, inner, inner, 3);
  t.c_out = nn::ConvLayer::make(rng, inner, channels, 1);
  return t;
}

Tensor3 Network::ThetaStar::apply(const Tensor3& x) const {
  return nn::conv2d(nn::relu(nn::conv2d(x, c_mid)), c_out);
}

Network::ThetaStar Network::ThetaStar::make(Rng& rng, int channels, int inner) {
  ThetaStar t;
  t.c_mid = nn::ConvLayer::make(rng, channels, inner, 3);
  t.c_out = nn::ConvLayer::make(rng, inner, channels, 1);
  return t;
}

Tensor3 Network::ChannelAttention::apply(const Tensor3& x) const {
  std::vector<double> gates = fc1.apply(nn::global_avg_pool(x));
  for (double& v : gates) v = v > 0.0 ? v : 0.0;
  gates = fc2.apply(gates);
  for (double& v : gates) v = nn::sigmoid_scalar(v);
  return nn::scale_channels(x, gates);
}

Network::ChannelAttention Network::ChannelAttention::make(Rng& rng, int channels) {
  if (channels % 4 != 0) throw ContractError("ChannelAttention: channels must divide by 4");
  ChannelAttention ca;
  ca.fc1 = nn::Dense::make(rng, channels, channels / 4);
  ca.fc2 = nn::Dense::make(rng, channels / 4, channels);
  return ca;
}

Tensor3 Network::CoordinateAttention::apply(const Tensor3& x) const {
  const int c_in = x.channels, h = x.height, w = x.width;

  // Row and column means stacked into one C x (H+W) x 1 strip.
  Tensor3 strip(c_in, h + w, 1);
  for (int c = 0; c < c_in; ++c) {
    const double* plane = x.plane(c);
    for (int y = 0; y < h; ++y) {
      double acc = 0.0;
      for (int xx = 0; xx < w; ++xx) acc += plane[static_cast<size_t>(y) * w + xx];
      strip.at(c, y, 0) = acc / w;
    }
    for (int xx = 0; xx < w; ++xx) {
      double acc = 0.0;
      for (int y = 0; y < h; ++y) acc += plane[static_cast<size_t>(y) * w + xx];
      strip.at(c, h + xx, 0) = acc / h;
    }
  }

  const Tensor3 red = nn::relu(nn::batch_norm(nn::conv2d(strip, reduce), reduce_bn));
  Tensor3 red_h(red.channels, h, 1), red_w(red.channels, w, 1);
  for (int c = 0; c < red.channels; ++c) {
    for (int y = 0; y < h; ++y) red_h.at(c, y, 0) = red.at(c, y, 0);
    for (int xx = 0; xx < w; ++xx) red_w.at(c, xx, 0) = red.at(c, h + xx, 0);
  }
  const Tensor3 gh = nn::sigmoid(nn::conv2d(red_h, gate_h));
  const Tensor3 gw = nn::sigmoid(nn::conv2d(red_w, gate_w));

  Tensor3 out = x;
  for (int c = 0; c < c_in; ++c) {
    double* plane = out.plane(c);
    for (int y = 0; y < h; ++y) {
      const double gy = gh.at(c, y, 0);
      double* row = plane + static_cast<size_t>(y) * w;
      for (int xx = 0; xx < w; ++xx) row[xx] *= gy * gw.at(c, xx, 0);
    }
  }
  return out;
}

Network::CoordinateAttention Network::CoordinateAttention::make(Rng& rng, int channels) {
  if (channels % 4 != 0) throw ContractError("CoordinateAttention: channels must divide by 4");
  CoordinateAttention coa;
  coa.reduce = nn::ConvLayer::make(rng, channels, channels / 4, 1);
  coa.reduce_bn = nn::BatchNorm::identity(channels / 4);
  coa.gate_h = nn::ConvLayer::make(rng, channels / 4, channels, 1);
  coa.gate_w = nn::ConvLayer::make(rng, channels / 4, channels, 1);
  return coa;
}

Tensor3 Network::FaModule::apply(const Tensor3& f_low, const Tensor3& f_gc,
                                 const Tensor3& f_high) const {
  const Tensor3 lowf = low.apply(f_low);
  const Tensor3 gcf = nn::upsample_bilinear(gc.apply(f_gc), lowf.height, lowf.width);
  const Tensor3 highf = nn::upsample_bilinear(high.apply(f_high), lowf.height, lowf.width);
  const Tensor3 part_gc = nn::mul(lowf, gcf);
  const Tensor3 part_high = nn::mul(lowf, highf);
  return mix.apply(nn::concat({&part_gc, &part_high, &lowf}));
}

Network::FaModule Network::FaModule::make(Rng& rng, int low_c, int dec_c) {
  FaModule fa;
  fa.low = ConvBnRelu::make(rng, low_c, dec_c, 3);
  fa.gc = ConvBnRelu::make(rng, dec_c, dec_c, 3);
  fa.high = ConvBnRelu::make(rng, dec_c, dec_c, 3);
  fa.mix = ConvBnRelu::make(rng, 3 * dec_c, dec_c, 3);
  return fa;
}

Tensor3 Network::FiModule::interact(const Tensor3& f_e, const Tensor3& f_fa) const {
  const Tensor3 gate = coa.apply(fe.apply(f_e));
  return nn::add(nn::mul(gate, f_fa), f_fa);
}

Tensor3 Network::FiModule::refine(const Tensor3& f_i) const {
  const Tensor3 x = refine_in.apply(f_i);
  return nn::relu(nn::add(nn::mul(nn::conv2d(x, refine_w), x), nn::conv2d(x, refine_b)));
}

Network::FiModule Network::FiModule::make(Rng& rng, int dec_c) {
  FiModule fi;
  fi.fe = ConvBnRelu::make(rng, dec_c, dec_c, 3);
  fi.coa = CoordinateAttention::make(rng, dec_c);
  fi.refine_in = ConvBnRelu::make(rng, dec_c, dec_c, 3);
  fi.refine_w = nn::ConvLayer::make(rng, dec_c, dec_c, 3);
  fi.refine_b = nn::ConvLayer::make(rng, dec_c, dec_c, 3);
  return fi;
}

Network::Network(const TopologyConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(cfg_.seed);

  const int b = cfg_.base_channels;
  const int dec = cfg_.decoder_channels();
  const int c2 = cfg_.encoder_channels(2);
  const int c3 = cfg_.encoder_channels(3);
  const int c4 = cfg_.encoder_channels(4);
  const int c5 = cfg_.encoder_channels(5);

  stem_ = ConvBnRelu::make(rng, 3, 2 * b, 3, 2);
  enc2_ = ConvBnRelu::make(rng, 2 * b, c2, 3, 2);
  enc3_ = ConvBnRelu::make(rng, c2, c3, 3, 2);
  enc4_ = ConvBnRelu::make(rng, c3, c4, 3, 2);
  enc5_ = ConvBnRelu::make(rng, c4, c5, 3, 2);

  ts_c5_ = nn::ConvLayer::make(rng, c5, dec, 1);
  ts_c4_ = nn::ConvLayer::make(rng, c4, dec, 1);
  ts_c3_ = nn::ConvLayer::make(rng, c3, dec, 1);
  ts_c2_ = nn::ConvLayer::make(rng, c2, dec, 1);
  ts_aspp5_ = Aspp::make(rng, dec, dec);
  ts_aspp4_ = Aspp::make(rng, dec, dec);
  ts_rfb3_ = Rfb::make(rng, dec, dec);
  ts_rfb2_ = Rfb::make(rng, dec, dec);
  theta5_ = ThetaStack::make(rng, dec, b);
  theta4_ = ThetaStack::make(rng, dec, b);
  theta3_a_ = ThetaStack::make(rng, dec, b);
  theta3_b_ = ThetaStack::make(rng, dec, b);
  e4_lateral_ = nn::ConvLayer::make(rng, dec, dec, 1);
  e3_lateral_a_ = nn::ConvLayer::make(rng, dec, dec, 1);
  e3_lateral_b_ = nn::ConvLayer::make(rng, dec, dec, 1);
  a_lateral_ = nn::ConvLayer::make(rng, dec, dec, 1);
  tstar2_ = ThetaStar::make(rng, dec, b);
  ca4_ = ChannelAttention::make(rng, dec);
  ca3_ = ChannelAttention::make(rng, dec);
  ca2_ = ChannelAttention::make(rng, dec);
  ts_head_ = nn::ConvLayer::make(rng, dec, 1, 3);

  ctx_compress_ = nn::ConvLayer::make(rng, c5, dec, 1);
  ctx_aspp_ = Aspp::make(rng, dec, dec);
  gate_conv_ = nn::ConvLayer::make(rng, dec, dec, 1);
  gate_bn_ = nn::BatchNorm::identity(dec);
  gc_fc1_ = nn::Dense::make(rng, c5, dec / 4);
  gc_fc2_ = nn::Dense::make(rng, dec / 4, dec);

  fa4_ = FaModule::make(rng, c4, dec);
  fa3_ = FaModule::make(rng, c3, dec);
  fa2_ = FaModule::make(rng, c2, dec);
  fi4_ = FiModule::make(rng, dec);
  fi3_ = FiModule::make(rng, dec);
  fi2_ = FiModule::make(rng, dec);
  head5_ = nn::ConvLayer::make(rng, dec, 1, 3);
  head4_ = nn::ConvLayer::make(rng, dec, 1, 3);
  head3_ = nn::ConvLayer::make(rng, dec, 1, 3);
  head2_ = nn::ConvLayer::make(rng, dec, 1, 3);
}

GrayMap Network::head(const nn::ConvLayer& conv, const Tensor3& x) const {
  Tensor3 logits = nn::conv2d(x, conv);
  logits = nn::upsample_bilinear(logits, cfg_.input_height, cfg_.input_width);
  GrayMap out(cfg_.input_height, cfg_.input_width);
  const double hi = 1.0 - kOpenLow;
  for (size_t i = 0; i < logits.values.size(); ++i) {
    // Clamp into the open interval: extreme logits would otherwise round
    // the mathematical value onto 0 or 1 exactly.
    out.values[i] = std::clamp(nn::sigmoid_scalar(logits.values[i]), kOpenLow, hi);
  }
  return out;
}

FeaturePyramid Network::encoder(const Tensor3& image, Recorder* rec) const {
  if (image.channels != 3 || image.height != cfg_.input_height ||
      image.width != cfg_.input_width) {
    throw ContractError("encoder: expected 3x" + std::to_string(cfg_.input_height) + "x" +
                        std::to_string(cfg_.input_width) + " input");
  }
  image.check_finite("encoder input");

  note(rec, "input", image, cfg_.base_channels);
  const Tensor3 stem = stem_.apply(image);
  note(rec, "stem", stem, cfg_.base_channels);

  FeaturePyramid pyr;
  pyr.f2 = enc2_.apply(stem);
  note(rec, "f2", pyr.f2, cfg_.base_channels);
  pyr.f3 = enc3_.apply(pyr.f2);
  note(rec, "f3", pyr.f3, cfg_.base_channels);
  pyr.f4 = enc4_.apply(pyr.f3);
  note(rec, "f4", pyr.f4, cfg_.base_channels);
  pyr.f5 = enc5_.apply(pyr.f4);
  note(rec, "f5", pyr.f5, cfg_.base_channels);
  return pyr;
}

Network::TsResult Network::ts_branch(const FeaturePyramid& pyr, Recorder* rec) const {
  const int base = cfg_.base_channels;

  const Tensor3 a5 = ts_aspp5_.apply(nn::conv2d(pyr.f5, ts_c5_));
  note(rec, "ts_a5", a5, base);
  const Tensor3 a4 = ts_aspp4_.apply(nn::conv2d(pyr.f4, ts_c4_));
  note(rec, "ts_a4", a4, base);
  const Tensor3 r3 = ts_rfb3_.apply(nn::conv2d(pyr.f3, ts_c3_));
  note(rec, "ts_rfb3", r3, base);
  const Tensor3 r2 = ts_rfb2_.apply(nn::conv2d(pyr.f2, ts_c2_));
  note(rec, "ts_rfb2", r2, base);

  TsResult ts;

  const Tensor3 up5 = nn::upsample_bilinear(theta5_.apply(a5), a4.height, a4.width);
  ts.f_e4 = ca4_.apply(nn::relu(nn::add(up5, a4)));
  note(rec, "f_e4", ts.f_e4, base);

  const Tensor3 inner4 = nn::add(theta4_.apply(ts.f_e4), nn::conv2d(ts.f_e4, e4_lateral_));
  ts.f_e3 = ca3_.apply(
      nn::relu(nn::add(nn::upsample_bilinear(inner4, r3.height, r3.width), r3)));
  note(rec, "f_e3", ts.f_e3, base);

  // Double fusion at the finest level: the refined feature runs through the
  // bottleneck/lateral pair twice before joining the lateral stream.
  const Tensor3 a =
      nn::relu(nn::add(theta3_a_.apply(ts.f_e3), nn::conv2d(ts.f_e3, e3_lateral_a_)));
  const Tensor3 inner3 = nn::add(nn::add(theta3_b_.apply(a), nn::conv2d(a, a_lateral_)),
                                 nn::conv2d(ts.f_e3, e3_lateral_b_));
  const Tensor3 low2 = tstar2_.apply(r2);
  ts.f_e2 = ca2_.apply(
      nn::relu(nn::add(nn::upsample_bilinear(inner3, low2.height, low2.width), low2)));
  note(rec, "f_e2", ts.f_e2, base);

  ts.pred = head(ts_head_, ts.f_e2);
  note_map(rec, "ts_pred", ts.pred);
  return ts;
}

Tensor3 Network::context_features(const Tensor3& f5) const {
  return ctx_aspp_.apply(nn::relu(nn::conv2d(f5, ctx_compress_)));
}

Tensor3 Network::global_context(const Tensor3& f5) const {
  const Tensor3 f_h5 = context_features(f5);

  const Tensor3 gate = nn::sigmoid(nn::batch_norm(nn::conv2d(f_h5, gate_conv_), gate_bn_));
  const Tensor3 f_s = nn::add(f_h5, nn::mul(f_h5, gate));

  std::vector<double> hidden = gc_fc1_.apply(nn::global_avg_pool(f5));
  for (double& v : hidden) v = v > 0.0 ? v : 0.0;
  std::vector<double> gates = gc_fc2_.apply(hidden);
  for (double& v : gates) v = nn::sigmoid_scalar(v);
  return nn::scale_channels(f_s, gates);
}

Network::OsResult Network::os_branch(const FeaturePyramid& pyr, const TsResult& ts,
                                     Recorder* rec) const {
  const int base = cfg_.base_channels;

  const Tensor3 f_h5 = context_features(pyr.f5);
  note(rec, "f_h5", f_h5, base);
  const Tensor3 f_gc = global_context(pyr.f5);
  note(rec, "f_gc", f_gc, base);

  const Tensor3 fa4 = fa4_.apply(pyr.f4, f_gc, f_h5);
  note(rec, "f_fa4", fa4, base);
  const Tensor3 i4 = fi4_.interact(ts.f_e4, fa4);
  note(rec, "f_i4", i4, base);
  const Tensor3 h4 = fi4_.refine(i4);
  note(rec, "f_h4", h4, base);

  const Tensor3 fa3 = fa3_.apply(pyr.f3, f_gc, h4);
  note(rec, "f_fa3", fa3, base);
  const Tensor3 i3 = fi3_.interact(ts.f_e3, fa3);
  note(rec, "f_i3", i3, base);
  const Tensor3 h3 = fi3_.refine(i3);
  note(rec, "f_h3", h3, base);

  const Tensor3 fa2 = fa2_.apply(pyr.f2, f_gc, h3);
  note(rec, "f_fa2", fa2, base);
  const Tensor3 i2 = fi2_.interact(ts.f_e2, fa2);
  note(rec, "f_i2", i2, base);
  const Tensor3 h2 = fi2_.refine(i2);
  note(rec, "f_h2", h2, base);

  OsResult os;
  os.p5 = head(head5_, f_h5);
  note_map(rec, "p5", os.p5);
  os.p4 = head(head4_, h4);
  note_map(rec, "p4", os.p4);
  os.p3 = head(head3_, h3);
  note_map(rec, "p3", os.p3);
  os.p2 = head(head2_, h2);
  note_map(rec, "p2", os.p2);
  return os;
}

Network::Outputs Network::forward(const Tensor3& image, Recorder* rec) const {
  const FeaturePyramid pyr = encoder(image, rec);
  const TsResult ts = ts_branch(pyr, rec);
  const OsResult os = os_branch(pyr, ts, rec);

  Outputs out;
  out.ts_pred = ts.pred;
  out.p5 = os.p5;
  out.p4 = os.p4;
  out.p3 = os.p3;
  out.p2 = os.p2;
  return out;
}

std::vector<ShapeRow> Network::audit(const Tensor3& image) const {
  Recorder rows;
  forward(image, &rows);
  return rows;
}

}  // namespace sodkit
