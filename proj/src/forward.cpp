#include "vinevi/forward.hpp"

#include <algorithm>
#include <cmath>

namespace vinevi::nn {
namespace {

// Work sizes below this run serially; spawning threads costs more than
// the loop for small tensors.
constexpr long long kParallelCutoff = 1 << 14;

Tensor3 conv2d(const Layer& l, const Tensor3& in) {
  const int oc_n = l.out_channels, ic_n = l.in_channels;
  const int kh = l.kernel_h, kw = l.kernel_w, s = l.stride, p = l.padding;
  const int oh = (in.h + 2 * p - kh) / s + 1;
  const int ow = (in.w + 2 * p - kw) / s + 1;
  Tensor3 out(oc_n, oh, ow);
  const float* w = l.weights.data();
  const long long work = (long long)oc_n * oh * ow * ic_n * kh * kw;

#pragma omp parallel for collapse(2) schedule(static) if (work > kParallelCutoff)
  for (int oc = 0; oc < oc_n; ++oc) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double acc = l.has_bias ? l.bias[oc] : 0.0;
        for (int ic = 0; ic < ic_n; ++ic) {
          for (int ky = 0; ky < kh; ++ky) {
            const int iy = oy * s - p + ky;
            if (iy < 0 || iy >= in.h) continue;
            const float* wrow = w + ((size_t(oc) * ic_n + ic) * kh + ky) * kw;
            const float* irow = &in.v[(size_t(ic) * in.h + iy) * in.w];
            for (int kx = 0; kx < kw; ++kx) {
              const int ix = ox * s - p + kx;
              if (ix < 0 || ix >= in.w) continue;
              acc += double(wrow[kx]) * double(irow[ix]);
            }
          }
        }
        out.at(oc, oy, ox) = float(acc);
      }
    }
  }
  return out;
}

Tensor3 depthwise_conv2d(const Layer& l, const Tensor3& in) {
  const int kh = l.kernel_h, kw = l.kernel_w, s = l.stride, p = l.padding;
  const int oh = (in.h + 2 * p - kh) / s + 1;
  const int ow = (in.w + 2 * p - kw) / s + 1;
  Tensor3 out(in.c, oh, ow);
  const float* w = l.weights.data();
  const long long work = (long long)in.c * oh * ow * kh * kw;

#pragma omp parallel for collapse(2) schedule(static) if (work > kParallelCutoff)
  for (int c = 0; c < in.c; ++c) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double acc = l.has_bias ? l.bias[c] : 0.0;
        for (int ky = 0; ky < kh; ++ky) {
          const int iy = oy * s - p + ky;
          if (iy < 0 || iy >= in.h) continue;
          const float* wrow = w + (size_t(c) * kh + ky) * kw;
          const float* irow = &in.v[(size_t(c) * in.h + iy) * in.w];
          for (int kx = 0; kx < kw; ++kx) {
            const int ix = ox * s - p + kx;
            if (ix < 0 || ix >= in.w) continue;
            acc += double(wrow[kx]) * double(irow[ix]);
          }
        }
        out.at(c, oy, ox) = float(acc);
      }
    }
  }
  return out;
}

Tensor3 relu(const Tensor3& in) {
  Tensor3 out = in;
  const long long n = (long long)out.v.size();
#pragma omp parallel for schedule(static) if (n > kParallelCutoff)
  for (long long i = 0; i < n; ++i) out.v[i] = std::max(0.0f, out.v[i]);
  return out;
}

Tensor3 maxpool2d(const Layer& l, const Tensor3& in) {
  const int kh = l.kernel_h, kw = l.kernel_w, s = l.stride;
  const int oh = (in.h - kh) / s + 1;
  const int ow = (in.w - kw) / s + 1;
  Tensor3 out(in.c, oh, ow);
  const long long work = (long long)in.c * oh * ow * kh * kw;

#pragma omp parallel for collapse(2) schedule(static) if (work > kParallelCutoff)
  for (int c = 0; c < in.c; ++c) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        float best = in.at(c, oy * s, ox * s);
        for (int ky = 0; ky < kh; ++ky)
          for (int kx = 0; kx < kw; ++kx)
            best = std::max(best, in.at(c, oy * s + ky, ox * s + kx));
        out.at(c, oy, ox) = best;
      }
    }
  }
  return out;
}

Tensor3 global_avg_pool(const Tensor3& in) {
  Tensor3 out(in.c, 1, 1);
  const long long area = (long long)in.h * in.w;
#pragma omp parallel for schedule(static) if ((long long)in.c* area > kParallelCutoff)
  for (int c = 0; c < in.c; ++c) {
    double acc = 0.0;
    const float* base = &in.v[size_t(c) * area];
    for (long long i = 0; i < area; ++i) acc += base[i];
    out.at(c, 0, 0) = float(acc / double(area));
  }
  return out;
}

Tensor3 dense(const Layer& l, const Tensor3& in) {
  Tensor3 out(l.out_features, 1, 1);
  const float* w = l.weights.data();
  const int n_in = l.in_features;
  const long long work = (long long)n_in * l.out_features;

#pragma omp parallel for schedule(static) if (work > kParallelCutoff)
  for (int j = 0; j < l.out_features; ++j) {
    double acc = l.has_bias ? l.bias[j] : 0.0;
    const float* wrow = w + size_t(j) * n_in;
    for (int i = 0; i < n_in; ++i) acc += double(wrow[i]) * double(in.v[i]);
    out.v[j] = float(acc);
  }
  return out;
}

Tensor3 residual_block(const Layer& l, const Tensor3& in) {
  Tensor3 t = in;
  for (const Layer& il : l.inner) t = apply_layer(il, t);
  if (t.shape() != in.shape())
    throw ShapeError("residual inner chain changed the tensor shape");
  const long long n = (long long)t.v.size();
#pragma omp parallel for schedule(static) if (n > kParallelCutoff)
  for (long long i = 0; i < n; ++i) t.v[i] += in.v[i];
  return t;
}

}  // namespace

Tensor3 apply_layer(const Layer& layer, const Tensor3& input) {
  switch (layer.kind) {
    case LayerKind::conv2d:
      if (layer.in_channels != input.c) throw ShapeError("conv2d channel mismatch");
      return conv2d(layer, input);
    case LayerKind::depthwise_conv2d:
      if (layer.in_channels != input.c) throw ShapeError("depthwise channel mismatch");
      return depthwise_conv2d(layer, input);
    case LayerKind::relu:
      return relu(input);
    case LayerKind::maxpool2d:
      return maxpool2d(layer, input);
    case LayerKind::global_avg_pool:
      return global_avg_pool(input);
    case LayerKind::dense:
      if (layer.in_features != input.shape().elems())
        throw ShapeError("dense input width mismatch");
      return dense(layer, input);
    case LayerKind::residual_block:
      return residual_block(layer, input);
    case LayerKind::softmax:
      throw ShapeError("softmax is applied by forward(), not as a tensor layer");
  }
  throw ShapeError("unreachable layer kind");
}

ClassScores softmax(const std::vector<double>& logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  ClassScores scores(logits.size());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    scores[i] = std::exp(logits[i] - m);
    sum += scores[i];
  }
  for (double& s : scores) s /= sum;
  return scores;
}

ClassScores forward(const Model& model, const Tensor3& input) {
  if (input.shape() != Shape3{kInputChannels, kInputSide, kInputSide})
    throw ShapeError("forward expects a 3x224x224 input tensor");

  Tensor3 t = input;
  for (size_t i = 0; i + 1 < model.layers.size(); ++i)
    t = apply_layer(model.layers[i], t);

  std::vector<double> logits(t.v.begin(), t.v.end());
  return softmax(logits);
}

Prediction argmax_class(const ClassScores& scores,
                        const std::vector<std::string>& labels) {
  if (scores.empty()) throw ShapeError("argmax over empty scores");
  size_t best = 0;
  for (size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  Prediction p;
  p.index = int(best);
  p.label = best < labels.size() ? labels[best] : std::to_string(best);
  return p;
}

}  // namespace vinevi::nn
