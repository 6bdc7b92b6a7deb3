#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vinevi/fixtures.hpp"
#include "vinevi/model.hpp"
#include "vinevi/traffic_class.hpp"

using namespace vinevi;
using namespace vinevi::nn;

namespace {

std::vector<std::string> seven_labels() {
  std::vector<std::string> labels;
  for (auto n : kTrafficClassNames) labels.emplace_back(n);
  return labels;
}

// dense 150528 -> 7 + softmax, all weights zero.
Model minimal_model() {
  Model m;
  m.name = "minimal";
  m.class_labels = seven_labels();

  Layer d;
  d.kind = LayerKind::dense;
  d.in_features = 3 * 224 * 224;
  d.out_features = 7;
  d.has_bias = true;
  d.weights.assign(size_t(d.in_features) * 7, 0.0f);
  d.bias.assign(7, 0.0f);
  m.layers.push_back(std::move(d));

  Layer s;
  s.kind = LayerKind::softmax;
  m.layers.push_back(s);
  return m;
}

std::string serialized(const Model& m) {
  std::ostringstream out(std::ios::binary);
  serialize_model(m, out);
  return out.str();
}

Model parsed(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return parse_model(in);
}

}  // namespace

TEST_CASE("minimal model round-trips with the documented parameter count") {
  Model m = minimal_model();
  validate_model(m);

  // 150528 inputs * 7 outputs + 7 biases
  CHECK(count_params(m) == 150528ll * 7 + 7);
  CHECK(count_params(m) == 1053703);

  const std::string bytes = serialized(m);
  CHECK(bytes.substr(0, 4) == "VNN1");

  const Model back = parsed(bytes);
  CHECK(back.name == "minimal");
  CHECK(back.class_labels == m.class_labels);
  CHECK(count_params(back) == count_params(m));
}

TEST_CASE("count_params equals the float count of the weight blob") {
  for (const auto& [name, model] : make_fixture_models()) {
    const std::string bytes = serialized(model);
    uint32_t header_len = 0;
    std::memcpy(&header_len, bytes.data() + 4, 4);
    const long long blob_bytes = (long long)bytes.size() - 8 - header_len;
    CHECK(blob_bytes % 4 == 0);
    CHECK(count_params(model) == blob_bytes / 4);
  }
}

TEST_CASE("bad magic is rejected") {
  std::string bytes = serialized(minimal_model());
  bytes[0] = 'X';
  CHECK_THROWS_AS(parsed(bytes), BadMagic);
}

TEST_CASE("weight blob one float short is a schema error") {
  std::string bytes = serialized(minimal_model());
  bytes.resize(bytes.size() - 4);
  CHECK_THROWS_AS(parsed(bytes), SchemaError);
}

TEST_CASE("trailing garbage after the blob is a schema error") {
  std::string bytes = serialized(minimal_model());
  bytes += std::string(4, '\0');
  CHECK_THROWS_AS(parsed(bytes), SchemaError);
}

TEST_CASE("dense width must match the label count") {
  Model m = minimal_model();
  m.layers[0].out_features = 5;
  m.layers[0].weights.assign(size_t(m.layers[0].in_features) * 5, 0.0f);
  m.layers[0].bias.assign(5, 0.0f);
  CHECK_THROWS_AS(validate_model(m), ShapeError);
  CHECK_THROWS_AS(parsed(serialized(m)), ShapeError);
}

TEST_CASE("model must end dense+softmax") {
  Model m = minimal_model();
  m.layers.pop_back();  // drop softmax
  CHECK_THROWS_AS(validate_model(m), ShapeError);

  Model m2 = minimal_model();
  std::swap(m2.layers[0], m2.layers[1]);
  CHECK_THROWS_AS(validate_model(m2), ShapeError);
}

TEST_CASE("dense input width must match the flattened tensor") {
  Model m = minimal_model();
  m.layers[0].in_features = 1000;
  m.layers[0].weights.assign(7000, 0.0f);
  CHECK_THROWS_AS(validate_model(m), ShapeError);
}

TEST_CASE("non-finite weights are rejected") {
  Model m = minimal_model();
  m.layers[0].weights[0] = std::numeric_limits<float>::infinity();
  CHECK_THROWS_AS(validate_model(m), SchemaError);
}

TEST_CASE("unknown layer kind in the header is a schema error") {
  std::string bytes = serialized(minimal_model());
  const size_t pos = bytes.find("dense");
  REQUIRE(pos != std::string::npos);
  bytes.replace(pos, 5, "dance");
  CHECK_THROWS_AS(parsed(bytes), SchemaError);
}

TEST_CASE("parameter counting per layer") {
  Layer conv;
  conv.kind = LayerKind::conv2d;
  conv.kernel_h = conv.kernel_w = 3;
  conv.in_channels = 1;
  conv.out_channels = 8;
  conv.has_bias = true;
  conv.weights.assign(3 * 3 * 1 * 8, 0.1f);
  conv.bias.assign(8, 0.0f);
  CHECK(count_params(conv) == 80);

  Layer dense;
  dense.kind = LayerKind::dense;
  dense.in_features = 512;
  dense.out_features = 7;
  dense.has_bias = true;
  CHECK(count_params(dense) == 512 * 7 + 7);
  CHECK(count_params(dense) == 3591);

  Layer relu;
  relu.kind = LayerKind::relu;
  CHECK(count_params(relu) == 0);
  Layer pool;
  pool.kind = LayerKind::maxpool2d;
  CHECK(count_params(pool) == 0);
  Layer soft;
  soft.kind = LayerKind::softmax;
  CHECK(count_params(soft) == 0);
}

TEST_CASE("FLOP accounting")
{
  Layer dense;
  dense.kind = LayerKind::dense;
  dense.in_features = 512;
  dense.out_features = 7;
  CHECK(layer_flops(dense, {512, 1, 1}) == 7168);  // 2 * 512 * 7

  Layer conv;
  conv.kind = LayerKind::conv2d;
  conv.kernel_h = conv.kernel_w = 3;
  conv.in_channels = 3;
  conv.out_channels = 8;
  conv.stride = 1;
  conv.padding = 1;  // keeps 224x224
  CHECK(layer_flops(conv, {3, 224, 224}) == 21676032ll);

  // Share of the trailing dense in the documented two-layer example.
  const double pct = last_layer_share_percent(7168, 21676032ll + 7168);
  CHECK(pct == doctest::Approx(100.0 * 7168 / 21683200.0).epsilon(1e-12));

  Layer pool;
  pool.kind = LayerKind::maxpool2d;
  pool.kernel_h = pool.kernel_w = 2;
  pool.stride = 2;
  CHECK(layer_flops(pool, {8, 112, 112}) == 0);
}

TEST_CASE("depthwise FLOPs scale with channels, not channel pairs") {
  Layer dw;
  dw.kind = LayerKind::depthwise_conv2d;
  dw.kernel_h = dw.kernel_w = 3;
  dw.in_channels = dw.out_channels = 8;
  dw.stride = 1;
  dw.padding = 1;
  CHECK(layer_flops(dw, {8, 56, 56}) == 2ll * 3 * 3 * 8 * 56 * 56);
}

TEST_CASE("fixture models validate and report sane accounting") {
  for (const auto& [name, model] : make_fixture_models()) {
    CAPTURE(name);
    CHECK(model.layers.back().kind == LayerKind::softmax);
    CHECK(count_params(model) > 0);
    CHECK(flops_total(model) > 0);
    const double pct = last_layer_complexity(model);
    CHECK(pct > 0.0);
    CHECK(pct < 100.0);
  }
}

TEST_CASE("fixture generation is deterministic") {
  const auto dir = std::filesystem::temp_directory_path() / "vinevi_fixture_regen";
  std::filesystem::remove_all(dir);
  const auto paths_a = write_fixture_models(dir / "a");
  const auto paths_b = write_fixture_models(dir / "b");
  REQUIRE(paths_a.size() == paths_b.size());
  for (size_t i = 0; i < paths_a.size(); ++i) {
    std::ifstream fa(paths_a[i], std::ios::binary), fb(paths_b[i], std::ios::binary);
    const std::string a((std::istreambuf_iterator<char>(fa)),
                        std::istreambuf_iterator<char>());
    const std::string b((std::istreambuf_iterator<char>(fb)),
                        std::istreambuf_iterator<char>());
    CHECK(a == b);
    CHECK(!a.empty());
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("committed fixtures match in-memory construction bit for bit") {
  const std::filesystem::path models_dir =
      std::filesystem::path(VINEVI_SOURCE_DIR) / "models";
  for (const auto& [name, model] : make_fixture_models()) {
    const auto path = models_dir / (name + ".vnn");
    CAPTURE(path.string());
    REQUIRE(std::filesystem::exists(path));
    std::ifstream f(path, std::ios::binary);
    const std::string on_disk((std::istreambuf_iterator<char>(f)),
                              std::istreambuf_iterator<char>());
    CHECK(on_disk == serialized(model));

    const Model loaded = load_model(path);
    CHECK(loaded.name == name);
    CHECK(count_params(loaded) == count_params(model));
  }
}
