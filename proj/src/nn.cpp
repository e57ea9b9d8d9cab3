#include "sodkit/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sodkit::nn {

namespace {

int floor_div(int a, int b) {
  const int q = a / b;
  const int r = a % b;
  return (r != 0 && (r < 0) != (b < 0)) ? q - 1 : q;
}

int ceil_div(int a, int b) { return -floor_div(-a, b); }

}  // namespace

ConvLayer ConvLayer::make(Rng& rng, int in_c, int out_c, int kernel, int stride, int dilation) {
  if (in_c <= 0 || out_c <= 0) throw ContractError("ConvLayer: channel counts must be positive");
  if (kernel <= 0 || kernel % 2 == 0) throw ContractError("ConvLayer: kernel must be odd");
  if (stride < 1 || dilation < 1) throw ContractError("ConvLayer: stride/dilation must be >= 1");

  ConvLayer layer;
  layer.in_channels = in_c;
  layer.out_channels = out_c;
  layer.kernel = kernel;
  layer.stride = stride;
  layer.dilation = dilation;

  const double bound = 1.0 / std::sqrt(static_cast<double>(in_c) * kernel * kernel);
  layer.weights.resize(static_cast<size_t>(out_c) * in_c * kernel * kernel);
  for (double& w : layer.weights) w = rng.uniform(-bound, bound);
  layer.bias.assign(out_c, 0.0);
  return layer;
}

Tensor3 conv2d(const Tensor3& x, const ConvLayer& L) {
  if (x.channels != L.in_channels) {
    throw ContractError("conv2d: input has " + std::to_string(x.channels) +
                        " channels, layer expects " + std::to_string(L.in_channels));
  }
  const int k = L.kernel, s = L.stride, d = L.dilation;
  const int pad = d * (k - 1) / 2;
  const int span = d * (k - 1) + 1;
  const int oh = (x.height + 2 * pad - span) / s + 1;
  const int ow = (x.width + 2 * pad - span) / s + 1;
  if (oh <= 0 || ow <= 0) throw ContractError("conv2d: input too small for kernel");

  Tensor3 out(L.out_channels, oh, ow);
  for (int oc = 0; oc < L.out_channels; ++oc) {
    double* plane = out.plane(oc);
    std::fill(plane, plane + static_cast<size_t>(oh) * ow, L.bias[oc]);
  }

  for (int oc = 0; oc < L.out_channels; ++oc) {
    double* o = out.plane(oc);
    for (int ic = 0; ic < L.in_channels; ++ic) {
      const double* xin = x.plane(ic);
      const double* wk = L.weights.data() + (static_cast<size_t>(oc) * L.in_channels + ic) * k * k;
      for (int ky = 0; ky < k; ++ky) {
        const int off_y = ky * d - pad;
        const int oy_lo = std::max(0, ceil_div(-off_y, s));
        const int oy_hi = std::min(oh - 1, floor_div(x.height - 1 - off_y, s));
        for (int kx = 0; kx < k; ++kx) {
          const double w = wk[ky * k + kx];
          const int off_x = kx * d - pad;
          const int ox_lo = std::max(0, ceil_div(-off_x, s));
          const int ox_hi = std::min(ow - 1, floor_div(x.width - 1 - off_x, s));
          if (s == 1) {
            for (int oy = oy_lo; oy <= oy_hi; ++oy) {
              const double* xrow = xin + static_cast<size_t>(oy + off_y) * x.width + off_x;
              double* orow = o + static_cast<size_t>(oy) * ow;
              for (int ox = ox_lo; ox <= ox_hi; ++ox) orow[ox] += w * xrow[ox];
            }
          } else {
            for (int oy = oy_lo; oy <= oy_hi; ++oy) {
              const double* xrow = xin + static_cast<size_t>(oy * s + off_y) * x.width + off_x;
              double* orow = o + static_cast<size_t>(oy) * ow;
              for (int ox = ox_lo; ox <= ox_hi; ++ox) orow[ox] += w * xrow[ox * s];
            }
          }
        }
      }
    }
  }
  return out;
}

BatchNorm BatchNorm::identity(int channels) {
  BatchNorm bn;
  bn.channels = channels;
  bn.gamma.assign(channels, 1.0);
  bn.beta.assign(channels, 0.0);
  bn.mean.assign(channels, 0.0);
  bn.var.assign(channels, 1.0);
  return bn;
}

Tensor3 batch_norm(const Tensor3& x, const BatchNorm& bn) {
  if (x.channels != bn.channels) throw ContractError("batch_norm: channel mismatch");
  Tensor3 out = x;
  const size_t plane = static_cast<size_t>(x.height) * x.width;
  for (int c = 0; c < x.channels; ++c) {
    const double scale = bn.gamma[c] / std::sqrt(bn.var[c] + bn.eps);
    const double shift = bn.beta[c] - bn.mean[c] * scale;
    double* p = out.plane(c);
    for (size_t i = 0; i < plane; ++i) p[i] = p[i] * scale + shift;
  }
  return out;
}

Tensor3 relu(const Tensor3& x) {
  Tensor3 out = x;
  for (double& v : out.values) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor3 add(const Tensor3& a, const Tensor3& b) {
  if (a.channels != b.channels || a.height != b.height || a.width != b.width) {
    throw ContractError("add: tensor shape mismatch");
  }
  Tensor3 out = a;
  for (size_t i = 0; i < out.values.size(); ++i) out.values[i] += b.values[i];
  return out;
}

Tensor3 mul(const Tensor3& a, const Tensor3& b) {
  if (a.channels != b.channels || a.height != b.height || a.width != b.width) {
    throw ContractError("mul: tensor shape mismatch");
  }
  Tensor3 out = a;
  for (size_t i = 0; i < out.values.size(); ++i) out.values[i] *= b.values[i];
  return out;
}

Tensor3 scale_channels(const Tensor3& x, const std::vector<double>& gates) {
  if (gates.size() != static_cast<size_t>(x.channels)) {
    throw ContractError("scale_channels: gate count mismatch");
  }
  Tensor3 out = x;
  const size_t plane = static_cast<size_t>(x.height) * x.width;
  for (int c = 0; c < x.channels; ++c) {
    double* p = out.plane(c);
    for (size_t i = 0; i < plane; ++i) p[i] *= gates[c];
  }
  return out;
}

std::vector<double> global_avg_pool(const Tensor3& x) {
  std::vector<double> out(x.channels);
  const size_t plane = static_cast<size_t>(x.height) * x.width;
  for (int c = 0; c < x.channels; ++c) {
    const double* p = x.plane(c);
    double acc = 0.0;
    for (size_t i = 0; i < plane; ++i) acc += p[i];
    out[c] = acc / static_cast<double>(plane);
  }
  return out;
}

Tensor3 upsample_bilinear(const Tensor3& x, int out_h, int out_w) {
  if (out_h < x.height || out_w < x.width) {
    throw ContractError("upsample_bilinear: target must not shrink the input");
  }
  if (out_h == x.height && out_w == x.width) return x;

  Tensor3 out(x.channels, out_h, out_w);
  const double sy = static_cast<double>(x.height) / out_h;
  const double sx = static_cast<double>(x.width) / out_w;

  std::vector<int> x0(out_w), x1(out_w);
  std::vector<double> fx(out_w);
  for (int ox = 0; ox < out_w; ++ox) {
    double src = (ox + 0.5) * sx - 0.5;
    if (src < 0.0) src = 0.0;
    const int i0 = static_cast<int>(std::floor(src));
    x0[ox] = std::min(i0, x.width - 1);
    x1[ox] = std::min(i0 + 1, x.width - 1);
    fx[ox] = src - i0;
  }

  for (int c = 0; c < x.channels; ++c) {
    const double* in = x.plane(c);
    double* o = out.plane(c);
    for (int oy = 0; oy < out_h; ++oy) {
      double src = (oy + 0.5) * sy - 0.5;
      if (src < 0.0) src = 0.0;
      const int y0 = std::min(static_cast<int>(std::floor(src)), x.height - 1);
      const int y1 = std::min(y0 + 1, x.height - 1);
      const double fy = src - y0;
      const double* row0 = in + static_cast<size_t>(y0) * x.width;
      const double* row1 = in + static_cast<size_t>(y1) * x.width;
      double* orow = o + static_cast<size_t>(oy) * out_w;
      for (int ox = 0; ox < out_w; ++ox) {
        const double top = row0[x0[ox]] + (row0[x1[ox]] - row0[x0[ox]]) * fx[ox];
        const double bot = row1[x0[ox]] + (row1[x1[ox]] - row1[x0[ox]]) * fx[ox];
        orow[ox] = top + (bot - top) * fy;
      }
    }
  }
  return out;
}

Tensor3 concat(const std::vector<const Tensor3*>& parts) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  int channels = 0;
  for (const Tensor3* p : parts) {
    if (p->height != parts[0]->height || p->width != parts[0]->width) {
      throw ContractError("concat: spatial shape mismatch");
    }
    channels += p->channels;
  }
  Tensor3 out(channels, parts[0]->height, parts[0]->width);
  size_t offset = 0;
  for (const Tensor3* p : parts) {
    std::copy(p->values.begin(), p->values.end(), out.values.begin() + offset);
    offset += p->values.size();
  }
  return out;
}

Dense Dense::make(Rng& rng, int in_dim, int out_dim) {
  if (in_dim <= 0 || out_dim <= 0) throw ContractError("Dense: dimensions must be positive");
  Dense d;
  d.in_dim = in_dim;
  d.out_dim = out_dim;
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
  d.weights.resize(static_cast<size_t>(out_dim) * in_dim);
  for (double& w : d.weights) w = rng.uniform(-bound, bound);
  d.bias.assign(out_dim, 0.0);
  return d;
}

std::vector<double> Dense::apply(const std::vector<double>& v) const {
  if (v.size() != static_cast<size_t>(in_dim)) throw ContractError("Dense: input size mismatch");
  std::vector<double> out(out_dim);
  for (int o = 0; o < out_dim; ++o) {
    double acc = bias[o];
    const double* w = weights.data() + static_cast<size_t>(o) * in_dim;
    for (int i = 0; i < in_dim; ++i) acc += w[i] * v[i];
    out[o] = acc;
  }
  return out;
}

double sigmoid_scalar(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Tensor3 sigmoid(const Tensor3& x) {
  Tensor3 out = x;
  for (double& v : out.values) v = sigmoid_scalar(v);
  return out;
}

}  // namespace sodkit::nn
