#include "vinevi/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace vinevi::nn {

using nlohmann::json;

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::depthwise_conv2d: return "depthwise_conv2d";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool2d: return "maxpool2d";
    case LayerKind::global_avg_pool: return "global_avg_pool";
    case LayerKind::dense: return "dense";
    case LayerKind::softmax: return "softmax";
    case LayerKind::residual_block: return "residual_block";
  }
  return "?";
}

namespace {

LayerKind kind_from_string(const std::string& s) {
  if (s == "conv2d") return LayerKind::conv2d;
  if (s == "depthwise_conv2d") return LayerKind::depthwise_conv2d;
  if (s == "relu") return LayerKind::relu;
  if (s == "maxpool2d") return LayerKind::maxpool2d;
  if (s == "global_avg_pool") return LayerKind::global_avg_pool;
  if (s == "dense") return LayerKind::dense;
  if (s == "softmax") return LayerKind::softmax;
  if (s == "residual_block") return LayerKind::residual_block;
  throw SchemaError("unknown layer kind: " + s);
}

long long weight_count(const Layer& l) {
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

long long bias_count(const Layer& l) {
  if (!l.has_bias) return 0;
  switch (l.kind) {
    case LayerKind::conv2d: return l.out_channels;
    case LayerKind::depthwise_conv2d: return l.out_channels;
    case LayerKind::dense: return l.out_features;
    default: return 0;
  }
}

// Chain position matters only for softmax; `last` marks the model's final slot.
Shape3 infer_shape(const Layer& l, const Shape3& in, bool allow_softmax) {
  auto require = [](bool ok, const std::string& why) {
    if (!ok) throw ShapeError(why);
  };
  switch (l.kind) {
    case LayerKind::conv2d: {
      require(l.in_channels == in.c, "conv2d expects " + std::to_string(l.in_channels) +
                                         " channels, input has " + std::to_string(in.c));
      require(l.kernel_h >= 1 && l.kernel_w >= 1 && l.stride >= 1 && l.padding >= 0,
              "conv2d geometry invalid");
      const int oh = (in.h + 2 * l.padding - l.kernel_h) / l.stride + 1;
      const int ow = (in.w + 2 * l.padding - l.kernel_w) / l.stride + 1;
      require(oh >= 1 && ow >= 1, "conv2d output collapses to zero size");
      return {l.out_channels, oh, ow};
    }
    case LayerKind::depthwise_conv2d: {
      require(l.in_channels == in.c && l.out_channels == in.c,
              "depthwise conv must preserve the channel count");
      const int oh = (in.h + 2 * l.padding - l.kernel_h) / l.stride + 1;
      const int ow = (in.w + 2 * l.padding - l.kernel_w) / l.stride + 1;
      require(oh >= 1 && ow >= 1, "depthwise output collapses to zero size");
      return {in.c, oh, ow};
    }
    case LayerKind::relu:
      return in;
    case LayerKind::maxpool2d: {
      require(l.kernel_h >= 1 && l.kernel_w >= 1 && l.stride >= 1, "maxpool geometry invalid");
      const int oh = (in.h - l.kernel_h) / l.stride + 1;
      const int ow = (in.w - l.kernel_w) / l.stride + 1;
      require(oh >= 1 && ow >= 1, "maxpool output collapses to zero size");
      return {in.c, oh, ow};
    }
    case LayerKind::global_avg_pool:
      return {in.c, 1, 1};
    case LayerKind::dense:
      require(l.in_features == in.elems(),
              "dense expects " + std::to_string(l.in_features) + " inputs, tensor has " +
                  std::to_string(in.elems()));
      return {l.out_features, 1, 1};
    case LayerKind::softmax:
      require(allow_softmax, "softmax is only valid as the final layer");
      return in;
    case LayerKind::residual_block:
      // caller validates the inner chain
      return in;
  }
  throw ShapeError("unreachable layer kind");
}

void validate_chain(std::vector<Layer>& layers, Shape3 shape, bool top_level);

void validate_layer(Layer& l, const Shape3& shape, bool is_last, bool top_level) {
  l.in_shape = shape;
  if (l.kind == LayerKind::residual_block) {
    if (l.inner.empty()) throw ShapeError("residual_block has no inner layers");
    validate_chain(l.inner, shape, /*top_level=*/false);
    const Shape3 inner_out = l.inner.back().out_shape;
    if (!(inner_out == shape))
      throw ShapeError("residual_block inner chain must preserve the tensor shape");
    l.out_shape = shape;
  } else {
    l.out_shape = infer_shape(l, shape, is_last && top_level);
  }

  if ((long long)l.weights.size() != weight_count(l))
    throw SchemaError(std::string(to_string(l.kind)) + " carries " +
                      std::to_string(l.weights.size()) + " weights, expected " +
                      std::to_string(weight_count(l)));
  if ((long long)l.bias.size() != bias_count(l))
    throw SchemaError(std::string(to_string(l.kind)) + " bias length mismatch");
  for (float v : l.weights)
    if (!std::isfinite(v)) throw SchemaError("non-finite weight value");
  for (float v : l.bias)
    if (!std::isfinite(v)) throw SchemaError("non-finite bias value");
}

void validate_chain(std::vector<Layer>& layers, Shape3 shape, bool top_level) {
  for (size_t i = 0; i < layers.size(); ++i) {
    validate_layer(layers[i], shape, i + 1 == layers.size(), top_level);
    shape = layers[i].out_shape;
  }
}

}  // namespace

void validate_model(Model& model) {
  if (model.class_labels.empty()) throw SchemaError("model declares no class labels");
  for (double s : model.norm_std)
    if (s == 0.0) throw SchemaError("model normalization std must be non-zero");
  if (model.layers.size() < 2)
    throw ShapeError("model needs at least a dense layer and a softmax");

  validate_chain(model.layers, {kInputChannels, kInputSide, kInputSide},
                 /*top_level=*/true);

  const Layer& last = model.layers.back();
  if (last.kind != LayerKind::softmax)
    throw ShapeError("final layer must be softmax");
  const Layer& scorer = model.layers[model.layers.size() - 2];
  if (scorer.kind != LayerKind::dense)
    throw ShapeError("layer before softmax must be dense");
  if (scorer.out_features != (int)model.class_labels.size())
    throw ShapeError("dense output width " + std::to_string(scorer.out_features) +
                     " does not match " + std::to_string(model.class_labels.size()) +
                     " class labels");
}

namespace {

json layer_to_json(const Layer& l) {
  json j;
  j["kind"] = to_string(l.kind);
  switch (l.kind) {
    case LayerKind::conv2d:
      j["in_channels"] = l.in_channels;
      j["out_channels"] = l.out_channels;
      j["kernel"] = {l.kernel_h, l.kernel_w};
      j["stride"] = l.stride;
      j["padding"] = l.padding;
      j["bias"] = l.has_bias;
      break;
    case LayerKind::depthwise_conv2d:
      j["channels"] = l.in_channels;
      j["kernel"] = {l.kernel_h, l.kernel_w};
      j["stride"] = l.stride;
      j["padding"] = l.padding;
      j["bias"] = l.has_bias;
      break;
    case LayerKind::maxpool2d:
      j["kernel"] = {l.kernel_h, l.kernel_w};
      j["stride"] = l.stride;
      break;
    case LayerKind::dense:
      j["in_features"] = l.in_features;
      j["out_features"] = l.out_features;
      j["bias"] = l.has_bias;
      break;
    case LayerKind::residual_block: {
      json inner = json::array();
      for (const Layer& il : l.inner) inner.push_back(layer_to_json(il));
      j["layers"] = std::move(inner);
      break;
    }
    default:
      break;
  }
  return j;
}

Layer layer_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw SchemaError("layer entry must be an object with a \"kind\"");
  Layer l;
  l.kind = kind_from_string(j["kind"].get<std::string>());

  auto get_int = [&](const char* key, int lo) {
    if (!j.contains(key) || !j[key].is_number_integer())
      throw SchemaError(std::string("layer missing integer field \"") + key + "\"");
    const int v = j[key].get<int>();
    if (v < lo) throw SchemaError(std::string("field \"") + key + "\" out of range");
    return v;
  };
  auto get_kernel = [&] {
    if (!j.contains("kernel") || !j["kernel"].is_array() || j["kernel"].size() != 2)
      throw SchemaError("layer missing kernel [h, w]");
    l.kernel_h = j["kernel"][0].get<int>();
    l.kernel_w = j["kernel"][1].get<int>();
    if (l.kernel_h < 1 || l.kernel_w < 1) throw SchemaError("kernel size out of range");
  };

  switch (l.kind) {
    case LayerKind::conv2d:
      l.in_channels = get_int("in_channels", 1);
      l.out_channels = get_int("out_channels", 1);
      get_kernel();
      l.stride = get_int("stride", 1);
      l.padding = get_int("padding", 0);
      l.has_bias = j.value("bias", true);
      break;
    case LayerKind::depthwise_conv2d:
      l.in_channels = l.out_channels = get_int("channels", 1);
      get_kernel();
      l.stride = get_int("stride", 1);
      l.padding = get_int("padding", 0);
      l.has_bias = j.value("bias", true);
      break;
    case LayerKind::maxpool2d:
      get_kernel();
      l.stride = get_int("stride", 1);
      break;
    case LayerKind::dense:
      l.in_features = get_int("in_features", 1);
      l.out_features = get_int("out_features", 1);
      l.has_bias = j.value("bias", true);
      break;
    case LayerKind::residual_block: {
      if (!j.contains("layers") || !j["layers"].is_array())
        throw SchemaError("residual_block missing inner layer list");
      for (const json& ij : j["layers"]) l.inner.push_back(layer_from_json(ij));
      break;
    }
    default:
      break;
  }
  return l;
}

void collect_weight_slots(Layer& l, std::vector<Layer*>& out) {
  out.push_back(&l);
  for (Layer& il : l.inner) collect_weight_slots(il, out);
}

uint32_t read_u32_le(std::istream& in) {
  uint8_t b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) throw SchemaError("model file ends inside the header");
  return uint32_t(b[0]) | (uint32_t(b[1]) << 8) | (uint32_t(b[2]) << 16) |
         (uint32_t(b[3]) << 24);
}

}  // namespace

Model parse_model(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kModelMagic, 4) != 0)
    throw BadMagic("not a model file (bad magic)");

  const uint32_t header_len = read_u32_le(in);
  if (header_len == 0 || header_len > (64u << 20))
    throw SchemaError("implausible header length");
  std::string header(header_len, '\0');
  in.read(header.data(), header_len);
  if (size_t(in.gcount()) != header_len)
    throw SchemaError("model file ends inside the header");

  json j;
  try {
    j = json::parse(header);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model header is not valid JSON: ") + e.what());
  }

  Model model;
  try {
    model.name = j.at("name").get<std::string>();
    model.class_labels = j.at("class_labels").get<std::vector<std::string>>();
    if (j.contains("normalization")) {
      const json& n = j["normalization"];
      for (int c = 0; c < 3; ++c) {
        model.norm_mean[c] = n.at("mean").at(c).get<double>();
        model.norm_std[c] = n.at("std").at(c).get<double>();
      }
    }
    for (const json& lj : j.at("layers")) model.layers.push_back(layer_from_json(lj));
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model header malformed: ") + e.what());
  }

  // Weight blob: must hold exactly the declared number of floats.
  std::vector<Layer*> slots;
  for (Layer& l : model.layers) collect_weight_slots(l, slots);
  long long expected = 0;
  for (Layer* l : slots) expected += weight_count(*l) + bias_count(*l);

  std::vector<char> blob((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  if ((long long)blob.size() != expected * 4)
    throw SchemaError("weight blob holds " + std::to_string(blob.size() / 4) +
                      " floats, header declares " + std::to_string(expected));

  static_assert(sizeof(float) == 4 && std::endian::native == std::endian::little,
                "weight blob loading assumes little-endian float32");
  size_t off = 0;
  for (Layer* l : slots) {
    const size_t nw = size_t(weight_count(*l));
    const size_t nb = size_t(bias_count(*l));
    l->weights.resize(nw);
    std::memcpy(l->weights.data(), blob.data() + off, nw * 4);
    off += nw * 4;
    l->bias.resize(nb);
    std::memcpy(l->bias.data(), blob.data() + off, nb * 4);
    off += nb * 4;
  }

  validate_model(model);
  return model;
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open model file: " + path.string());
  return parse_model(f);
}

void serialize_model(const Model& model, std::ostream& out) {
  json j;
  j["name"] = model.name;
  j["class_labels"] = model.class_labels;
  j["normalization"]["mean"] = model.norm_mean;
  j["normalization"]["std"] = model.norm_std;
  json layers = json::array();
  for (const Layer& l : model.layers) layers.push_back(layer_to_json(l));
  j["layers"] = std::move(layers);

  const std::string header = j.dump();
  out.write(kModelMagic, 4);
  const uint32_t len = uint32_t(header.size());
  const uint8_t lb[4] = {uint8_t(len), uint8_t(len >> 8), uint8_t(len >> 16),
                         uint8_t(len >> 24)};
  out.write(reinterpret_cast<const char*>(lb), 4);
  out.write(header.data(), std::streamsize(header.size()));

  std::vector<Layer*> slots;
  for (const Layer& l : model.layers)
    collect_weight_slots(const_cast<Layer&>(l), slots);
  for (const Layer* l : slots) {
    out.write(reinterpret_cast<const char*>(l->weights.data()),
              std::streamsize(l->weights.size() * 4));
    out.write(reinterpret_cast<const char*>(l->bias.data()),
              std::streamsize(l->bias.size() * 4));
  }
}

void save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  serialize_model(model, f);
  if (!f) throw IoError("short write: " + path.string());
}

long long count_params(const Layer& layer) {
  long long n = weight_count(layer) + bias_count(layer);
  for (const Layer& il : layer.inner) n += count_params(il);
  return n;
}

long long count_params(const Model& model) {
  long long n = 0;
  for (const Layer& l : model.layers) n += count_params(l);
  return n;
}

Shape3 output_shape(const Layer& layer, const Shape3& input) {
  switch (layer.kind) {
    case LayerKind::conv2d:
      return {layer.out_channels,
              (input.h + 2 * layer.padding - layer.kernel_h) / layer.stride + 1,
              (input.w + 2 * layer.padding - layer.kernel_w) / layer.stride + 1};
    case LayerKind::depthwise_conv2d:
      return {input.c,
              (input.h + 2 * layer.padding - layer.kernel_h) / layer.stride + 1,
              (input.w + 2 * layer.padding - layer.kernel_w) / layer.stride + 1};
    case LayerKind::maxpool2d:
      return {input.c, (input.h - layer.kernel_h) / layer.stride + 1,
              (input.w - layer.kernel_w) / layer.stride + 1};
    case LayerKind::global_avg_pool:
      return {input.c, 1, 1};
    case LayerKind::dense:
      return {layer.out_features, 1, 1};
    default:
      return input;
  }
}

long long layer_flops(const Layer& layer, const Shape3& input) {
  switch (layer.kind) {
    case LayerKind::conv2d: {
      const int oh = (input.h + 2 * layer.padding - layer.kernel_h) / layer.stride + 1;
      const int ow = (input.w + 2 * layer.padding - layer.kernel_w) / layer.stride + 1;
      return 2ll * layer.kernel_h * layer.kernel_w * layer.in_channels *
             layer.out_channels * oh * ow;
    }
    case LayerKind::depthwise_conv2d: {
      const int oh = (input.h + 2 * layer.padding - layer.kernel_h) / layer.stride + 1;
      const int ow = (input.w + 2 * layer.padding - layer.kernel_w) / layer.stride + 1;
      return 2ll * layer.kernel_h * layer.kernel_w * layer.in_channels * oh * ow;
    }
    case LayerKind::dense:
      return 2ll * layer.in_features * layer.out_features;
    case LayerKind::residual_block: {
      long long n = 0;
      Shape3 shape = input;
      for (const Layer& il : layer.inner) {
        n += layer_flops(il, shape);
        shape = output_shape(il, shape);
      }
      return n;
    }
    default:
      return 0;  // pooling, activations and softmax are not counted
  }
}

long long flops_total(const Model& model) {
  long long n = 0;
  for (const Layer& l : model.layers) n += layer_flops(l, l.in_shape);
  return n;
}

double last_layer_share_percent(long long last_dense_flops, long long total_flops) {
  if (total_flops <= 0) return 0.0;
  return 100.0 * double(last_dense_flops) / double(total_flops);
}

double last_layer_complexity(const Model& model) {
  const Layer& scorer = model.layers[model.layers.size() - 2];
  return last_layer_share_percent(layer_flops(scorer, scorer.in_shape),
                                  flops_total(model));
}

}  // namespace vinevi::nn
