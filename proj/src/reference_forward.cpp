#include "vinevi/reference_forward.hpp"

#include <cmath>
#include <stdexcept>

namespace vinevi::nn::reference {
namespace {

// Reads with zero padding outside the tensor.
double padded(const Tensor3& t, int c, int y, int x) {
  if (y < 0 || y >= t.h || x < 0 || x >= t.w) return 0.0;
  return t.at(c, y, x);
}

}  // namespace

Tensor3 apply_layer_naive(const Layer& l, const Tensor3& in) {
  switch (l.kind) {
    case LayerKind::conv2d: {
      const int oh = (in.h + 2 * l.padding - l.kernel_h) / l.stride + 1;
      const int ow = (in.w + 2 * l.padding - l.kernel_w) / l.stride + 1;
      Tensor3 out(l.out_channels, oh, ow);
      for (int o = 0; o < l.out_channels; ++o)
        for (int y = 0; y < oh; ++y)
          for (int x = 0; x < ow; ++x) {
            double sum = l.has_bias ? double(l.bias[o]) : 0.0;
            for (int i = 0; i < l.in_channels; ++i)
              for (int ky = 0; ky < l.kernel_h; ++ky)
                for (int kx = 0; kx < l.kernel_w; ++kx) {
                  const double wv =
                      l.weights[((size_t(o) * l.in_channels + i) * l.kernel_h + ky) *
                                    l.kernel_w +
                                kx];
                  sum += wv * padded(in, i, y * l.stride - l.padding + ky,
                                     x * l.stride - l.padding + kx);
                }
            out.at(o, y, x) = float(sum);
          }
      return out;
    }
    case LayerKind::depthwise_conv2d: {
      const int oh = (in.h + 2 * l.padding - l.kernel_h) / l.stride + 1;
      const int ow = (in.w + 2 * l.padding - l.kernel_w) / l.stride + 1;
      Tensor3 out(in.c, oh, ow);
      for (int c = 0; c < in.c; ++c)
        for (int y = 0; y < oh; ++y)
          for (int x = 0; x < ow; ++x) {
            double sum = l.has_bias ? double(l.bias[c]) : 0.0;
            for (int ky = 0; ky < l.kernel_h; ++ky)
              for (int kx = 0; kx < l.kernel_w; ++kx)
                sum += double(l.weights[(size_t(c) * l.kernel_h + ky) * l.kernel_w + kx]) *
                       padded(in, c, y * l.stride - l.padding + ky,
                              x * l.stride - l.padding + kx);
            out.at(c, y, x) = float(sum);
          }
      return out;
    }
    case LayerKind::relu: {
      Tensor3 out = in;
      for (float& v : out.v) v = v > 0.0f ? v : 0.0f;
      return out;
    }
    case LayerKind::maxpool2d: {
      const int oh = (in.h - l.kernel_h) / l.stride + 1;
      const int ow = (in.w - l.kernel_w) / l.stride + 1;
      Tensor3 out(in.c, oh, ow);
      for (int c = 0; c < in.c; ++c)
        for (int y = 0; y < oh; ++y)
          for (int x = 0; x < ow; ++x) {
            float best = -INFINITY;
            for (int ky = 0; ky < l.kernel_h; ++ky)
              for (int kx = 0; kx < l.kernel_w; ++kx)
                best = std::max(best,
                                in.at(c, y * l.stride + ky, x * l.stride + kx));
            out.at(c, y, x) = best;
          }
      return out;
    }
    case LayerKind::global_avg_pool: {
      Tensor3 out(in.c, 1, 1);
      for (int c = 0; c < in.c; ++c) {
        double sum = 0.0;
        for (int y = 0; y < in.h; ++y)
          for (int x = 0; x < in.w; ++x) sum += in.at(c, y, x);
        out.at(c, 0, 0) = float(sum / (double(in.h) * in.w));
      }
      return out;
    }
    case LayerKind::dense: {
      Tensor3 out(l.out_features, 1, 1);
      for (int j = 0; j < l.out_features; ++j) {
        double sum = l.has_bias ? double(l.bias[j]) : 0.0;
        for (int i = 0; i < l.in_features; ++i)
          sum += double(l.weights[size_t(j) * l.in_features + i]) * double(in.v[i]);
        out.v[j] = float(sum);
      }
      return out;
    }
    case LayerKind::residual_block: {
      Tensor3 t = in;
      for (const Layer& il : l.inner) t = apply_layer_naive(il, t);
      for (size_t i = 0; i < t.v.size(); ++i) t.v[i] += in.v[i];
      return t;
    }
    case LayerKind::softmax:
      throw std::logic_error("softmax handled by forward_naive");
  }
  throw std::logic_error("unreachable");
}

std::vector<double> forward_naive(const Model& model, const Tensor3& input) {
  Tensor3 t = input;
  for (size_t i = 0; i + 1 < model.layers.size(); ++i)
    t = apply_layer_naive(model.layers[i], t);

  std::vector<double> z(t.v.begin(), t.v.end());
  double m = z[0];
  for (double v : z) m = std::max(m, v);
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return z;
}

}  // namespace vinevi::nn::reference
