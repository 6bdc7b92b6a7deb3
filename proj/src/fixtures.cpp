#include "vinevi/fixtures.hpp"

#include <cmath>

#include "vinevi/traffic_class.hpp"

namespace vinevi::nn {
namespace {

std::vector<std::string> fixture_labels() {
  std::vector<std::string> labels;
  for (auto name : kTrafficClassNames) labels.emplace_back(name);
  return labels;
}

Layer conv(int in_c, int out_c, int k, int stride, int padding) {
  Layer l;
  l.kind = LayerKind::conv2d;
  l.in_channels = in_c;
  l.out_channels = out_c;
  l.kernel_h = l.kernel_w = k;
  l.stride = stride;
  l.padding = padding;
  l.has_bias = true;
  return l;
}

Layer depthwise(int channels, int k, int stride, int padding) {
  Layer l;
  l.kind = LayerKind::depthwise_conv2d;
  l.in_channels = l.out_channels = channels;
  l.kernel_h = l.kernel_w = k;
  l.stride = stride;
  l.padding = padding;
  l.has_bias = true;
  return l;
}

Layer relu() {
  Layer l;
  l.kind = LayerKind::relu;
  return l;
}

Layer maxpool(int k, int stride) {
  Layer l;
  l.kind = LayerKind::maxpool2d;
  l.kernel_h = l.kernel_w = k;
  l.stride = stride;
  return l;
}

Layer gap() {
  Layer l;
  l.kind = LayerKind::global_avg_pool;
  return l;
}

Layer dense(int in_f, int out_f) {
  Layer l;
  l.kind = LayerKind::dense;
  l.in_features = in_f;
  l.out_features = out_f;
  l.has_bias = true;
  return l;
}

Layer softmax() {
  Layer l;
  l.kind = LayerKind::softmax;
  return l;
}

Layer residual(std::vector<Layer> inner) {
  Layer l;
  l.kind = LayerKind::residual_block;
  l.inner = std::move(inner);
  return l;
}

double fan_in(const Layer& l) {
  switch (l.kind) {
    case LayerKind::conv2d: return double(l.kernel_h) * l.kernel_w * l.in_channels;
    case LayerKind::depthwise_conv2d: return double(l.kernel_h) * l.kernel_w;
    case LayerKind::dense: return double(l.in_features);
    default: return 1.0;
  }
}

long long weight_len(const Layer& l) {
  switch (l.kind) {
    case LayerKind::conv2d:
      return (long long)l.kernel_h * l.kernel_w * l.in_channels * l.out_channels;
    case LayerKind::depthwise_conv2d:
      return (long long)l.kernel_h * l.kernel_w * l.in_channels;
    case LayerKind::dense:
      return (long long)l.in_features * l.out_features;
    default:
      return 0;
  }
}

long long bias_len(const Layer& l) {
  if (!l.has_bias) return 0;
  switch (l.kind) {
    case LayerKind::conv2d:
    case LayerKind::depthwise_conv2d: return l.out_channels;
    case LayerKind::dense: return l.out_features;
    default: return 0;
  }
}

void fill_weights(Layer& l, SplitMix64& rng) {
  const double scale = std::sqrt(1.0 / fan_in(l));
  l.weights.resize(size_t(weight_len(l)));
  for (float& w : l.weights) w = rng.weight(scale);
  l.bias.resize(size_t(bias_len(l)));
  for (float& b : l.bias) b = rng.weight(0.05);
  for (Layer& il : l.inner) fill_weights(il, rng);
}

Model finish(std::string name, std::vector<Layer> layers, uint64_t seed) {
  Model m;
  m.name = std::move(name);
  m.class_labels = fixture_labels();
  m.layers = std::move(layers);
  SplitMix64 rng(seed);
  for (Layer& l : m.layers) fill_weights(l, rng);
  validate_model(m);
  return m;
}

}  // namespace

Model make_tiny_squeeze() {
  // Squeeze to few channels with 1x1, expand back with 3x3.
  std::vector<Layer> layers;
  layers.push_back(conv(3, 8, 3, 2, 1));  // 8x112x112
  layers.push_back(relu());
  layers.push_back(maxpool(2, 2));  // 8x56x56
  layers.push_back(conv(8, 4, 1, 1, 0));  // squeeze
  layers.push_back(relu());
  layers.push_back(conv(4, 8, 3, 1, 1));  // expand
  layers.push_back(relu());
  layers.push_back(maxpool(2, 2));  // 8x28x28
  layers.push_back(gap());
  layers.push_back(dense(8, 7));
  layers.push_back(softmax());
  return finish("tiny-squeeze", std::move(layers), 0x5153u);
}

Model make_tiny_mobile() {
  // Depthwise 3x3 followed by a 1x1 pointwise expansion.
  std::vector<Layer> layers;
  layers.push_back(conv(3, 8, 3, 2, 1));  // 8x112x112
  layers.push_back(relu());
  layers.push_back(maxpool(2, 2));  // 8x56x56
  layers.push_back(depthwise(8, 3, 1, 1));
  layers.push_back(relu());
  layers.push_back(conv(8, 16, 1, 1, 0));  // pointwise
  layers.push_back(relu());
  layers.push_back(maxpool(2, 2));  // 16x28x28
  layers.push_back(gap());
  layers.push_back(dense(16, 7));
  layers.push_back(softmax());
  return finish("tiny-mobile", std::move(layers), 0x4d4fu);
}

Model make_tiny_res() {
  std::vector<Layer> layers;
  layers.push_back(conv(3, 8, 3, 2, 1));  // 8x112x112
  layers.push_back(relu());
  layers.push_back(maxpool(2, 2));  // 8x56x56
  layers.push_back(residual({conv(8, 8, 3, 1, 1), relu(), conv(8, 8, 3, 1, 1)}));
  layers.push_back(relu());
  layers.push_back(gap());
  layers.push_back(dense(8, 7));
  layers.push_back(softmax());
  return finish("tiny-res", std::move(layers), 0x5245u);
}

std::vector<std::pair<std::string, Model>> make_fixture_models() {
  std::vector<std::pair<std::string, Model>> out;
  out.emplace_back("tiny-squeeze", make_tiny_squeeze());
  out.emplace_back("tiny-mobile", make_tiny_mobile());
  out.emplace_back("tiny-res", make_tiny_res());
  return out;
}

std::vector<std::filesystem::path> write_fixture_models(
    const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths;
  for (const auto& [name, model] : make_fixture_models()) {
    const auto path = dir / (name + ".vnn");
    save_model(model, path);
    paths.push_back(path);
  }
  return paths;
}

}  // namespace vinevi::nn
