#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "vinevi/errors.hpp"
#include "vinevi/tensor.hpp"

namespace vinevi::nn {

enum class LayerKind {
  conv2d,
  depthwise_conv2d,
  relu,
  maxpool2d,
  global_avg_pool,
  dense,
  softmax,
  residual_block,
};

const char* to_string(LayerKind kind);

struct Layer {
  LayerKind kind = LayerKind::relu;

  // conv2d / depthwise_conv2d / maxpool2d
  int kernel_h = 0, kernel_w = 0;
  int stride = 1;
  int padding = 0;
  int in_channels = 0, out_channels = 0;

  // dense
  int in_features = 0, out_features = 0;

  bool has_bias = false;
  std::vector<float> weights;
  std::vector<float> bias;

  // residual_block: inner chain, applied then summed with the input
  std::vector<Layer> inner;

  // Filled in by validate_model().
  Shape3 in_shape{}, out_shape{};
};

struct Model {
  std::string name;
  std::vector<std::string> class_labels;
  std::array<double, 3> norm_mean{0.5, 0.5, 0.5};
  std::array<double, 3> norm_std{0.5, 0.5, 0.5};
  std::vector<Layer> layers;
};

inline constexpr int kInputChannels = 3;
inline constexpr int kInputSide = 224;
inline constexpr char kModelMagic[4] = {'V', 'N', 'N', '1'};

// Shape-checks the whole layer chain starting from a 3x224x224 input and
// records per-layer shapes. Throws SchemaError for weight-count problems
// and ShapeError for an inconsistent chain.
void validate_model(Model& model);

// File layout: magic "VNN1", u32 little-endian header length, UTF-8 JSON
// header, then the weight blob as little-endian float32 in layer order
// (each layer: weights then bias). Loading is the only I/O the engine does.
Model load_model(const std::filesystem::path& path);
Model parse_model(std::istream& in);
void save_model(const Model& model, const std::filesystem::path& path);
void serialize_model(const Model& model, std::ostream& out);

// Output shape a layer produces for a given input shape (no validation).
Shape3 output_shape(const Layer& layer, const Shape3& input);

// Weight + bias element counts.
long long count_params(const Layer& layer);
long long count_params(const Model& model);

// Multiply-accumulate convention: one MAC = 2 FLOPs; pooling, activations
// and biases count zero.
long long layer_flops(const Layer& layer, const Shape3& input);
long long flops_total(const Model& model);

// Share of the model's FLOPs spent in the dense layer feeding the softmax.
double last_layer_share_percent(long long last_dense_flops, long long total_flops);
double last_layer_complexity(const Model& model);

}  // namespace vinevi::nn
