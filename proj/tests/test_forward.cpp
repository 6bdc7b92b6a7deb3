#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "vinevi/fixtures.hpp"
#include "vinevi/forward.hpp"
#include "vinevi/model.hpp"
#include "vinevi/reference_forward.hpp"
#include "vinevi/traffic_class.hpp"
#include "vinevi/vision.hpp"

using namespace vinevi;
using namespace vinevi::nn;

namespace {

Tensor3 tensor_from(std::initializer_list<float> vals, int c, int h, int w) {
  Tensor3 t(c, h, w);
  size_t i = 0;
  for (float v : vals) t.v[i++] = v;
  return t;
}

Layer relu_layer() {
  Layer l;
  l.kind = LayerKind::relu;
  return l;
}

}  // namespace

TEST_CASE("identity dense plus softmax on zero logits gives uniform scores") {
  Layer ident;
  ident.kind = LayerKind::dense;
  ident.in_features = ident.out_features = 7;
  ident.has_bias = true;
  ident.weights.assign(49, 0.0f);
  for (int i = 0; i < 7; ++i) ident.weights[size_t(i) * 7 + i] = 1.0f;
  ident.bias.assign(7, 0.0f);

  const Tensor3 zeros(7, 1, 1);
  const Tensor3 logits_t = apply_layer(ident, zeros);
  const std::vector<double> logits(logits_t.v.begin(), logits_t.v.end());
  const auto scores = softmax(logits);
  for (double s : scores) CHECK(s == doctest::Approx(1.0 / 7).epsilon(1e-12));

  double sum = 0.0;
  for (double s : scores) sum += s;
  CHECK(std::abs(sum - 1.0) < 1e-9);
}

TEST_CASE("1x1 conv is an affine map per pixel") {
  Layer conv;
  conv.kind = LayerKind::conv2d;
  conv.kernel_h = conv.kernel_w = 1;
  conv.in_channels = conv.out_channels = 1;
  conv.stride = 1;
  conv.padding = 0;
  conv.has_bias = true;
  conv.weights = {2.0f};
  conv.bias = {1.0f};

  const auto in = tensor_from({1, 2, 3, 4}, 1, 2, 2);
  const auto out = apply_layer(conv, in);
  CHECK(out.at(0, 0, 0) == 3.0f);
  CHECK(out.at(0, 0, 1) == 5.0f);
  CHECK(out.at(0, 1, 0) == 7.0f);
  CHECK(out.at(0, 1, 1) == 9.0f);
}

TEST_CASE("residual block adds its input back") {
  Layer res;
  res.kind = LayerKind::residual_block;
  res.inner.push_back(relu_layer());

  const auto in = tensor_from({-1.0f, 2.0f}, 1, 1, 2);
  const auto out = apply_layer(res, in);
  CHECK(out.at(0, 0, 0) == -1.0f);  // relu(-1)=0, plus skip -1
  CHECK(out.at(0, 0, 1) == 4.0f);   // relu(2)=2, plus skip 2
}

TEST_CASE("maxpool takes window maxima") {
  Layer pool;
  pool.kind = LayerKind::maxpool2d;
  pool.kernel_h = pool.kernel_w = 2;
  pool.stride = 2;
  const auto in = tensor_from({1, 5, 3, 2, 8, 0, -1, -2, 4, 6, 7, 3, 9, 1, 2, 0}, 1, 4, 4);
  const auto out = apply_layer(pool, in);
  CHECK(out.h == 2);
  CHECK(out.w == 2);
  CHECK(out.at(0, 0, 0) == 8.0f);
  CHECK(out.at(0, 0, 1) == 3.0f);
  CHECK(out.at(0, 1, 0) == 9.0f);
  CHECK(out.at(0, 1, 1) == 7.0f);
}

TEST_CASE("global average pool averages each channel") {
  const auto in = tensor_from({1, 2, 3, 4, 10, 20, 30, 40}, 2, 2, 2);
  Layer gap;
  gap.kind = LayerKind::global_avg_pool;
  const auto out = apply_layer(gap, in);
  CHECK(out.at(0, 0, 0) == doctest::Approx(2.5));
  CHECK(out.at(1, 0, 0) == doctest::Approx(25.0));
}

TEST_CASE("argmax breaks ties toward the lower index") {
  const std::vector<std::string> labels = {"a", "b", "c"};
  CHECK(argmax_class({0.1, 0.7, 0.2}, labels).index == 1);
  CHECK(argmax_class({0.5, 0.5}, {"a", "b"}).index == 0);
  CHECK(argmax_class(softmax(std::vector<double>(7, 0.0)),
                     std::vector<std::string>(7, "x"))
            .index == 0);
}

TEST_CASE("softmax is invariant to logit shifts") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> dist(-4.0, 4.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> z(7);
    for (double& v : z) v = dist(rng);
    const double shift = dist(rng) * 10;
    std::vector<double> zs = z;
    for (double& v : zs) v += shift;

    const auto a = softmax(z);
    const auto b = softmax(zs);
    for (size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
  }
}

// ---- Oracle equivalence -------------------------------------------------
// Random small layers on random small inputs, production kernels vs the
// serial nested-loop evaluator.

namespace {

Layer random_layer(std::mt19937& rng, int in_c) {
  std::uniform_real_distribution<float> w(-1.0f, 1.0f);
  Layer l;
  switch (rng() % 6) {
    case 0: {  // conv2d
      l.kind = LayerKind::conv2d;
      l.in_channels = in_c;
      l.out_channels = 1 + int(rng() % 4);
      l.kernel_h = 1 + int(rng() % 3);
      l.kernel_w = 1 + int(rng() % 3);
      l.stride = 1 + int(rng() % 2);
      l.padding = int(rng() % 2);
      l.has_bias = rng() % 2 == 0;
      l.weights.resize(size_t(l.kernel_h) * l.kernel_w * in_c * l.out_channels);
      break;
    }
    case 1: {  // depthwise
      l.kind = LayerKind::depthwise_conv2d;
      l.in_channels = l.out_channels = in_c;
      l.kernel_h = 1 + int(rng() % 3);
      l.kernel_w = 1 + int(rng() % 3);
      l.stride = 1 + int(rng() % 2);
      l.padding = int(rng() % 2);
      l.has_bias = rng() % 2 == 0;
      l.weights.resize(size_t(l.kernel_h) * l.kernel_w * in_c);
      break;
    }
    case 2:
      l.kind = LayerKind::relu;
      break;
    case 3: {
      l.kind = LayerKind::maxpool2d;
      l.kernel_h = l.kernel_w = 2;
      l.stride = 1 + int(rng() % 2);
      break;
    }
    case 4:
      l.kind = LayerKind::global_avg_pool;
      break;
    default: {
      l.kind = LayerKind::residual_block;
      Layer inner;
      inner.kind = LayerKind::conv2d;
      inner.in_channels = inner.out_channels = in_c;
      inner.kernel_h = inner.kernel_w = 3;
      inner.stride = 1;
      inner.padding = 1;
      inner.has_bias = true;
      inner.weights.resize(size_t(9) * in_c * in_c);
      inner.bias.resize(size_t(in_c));
      for (float& x : inner.weights) x = w(rng);
      for (float& x : inner.bias) x = w(rng);
      l.inner.push_back(std::move(inner));
      l.inner.push_back(relu_layer());
      break;
    }
  }
  if (l.has_bias) l.bias.resize(size_t(l.out_channels));
  for (float& x : l.weights) x = w(rng);
  for (float& x : l.bias) x = w(rng);
  return l;
}

bool tensors_close(const Tensor3& a, const Tensor3& b, double rel) {
  if (a.shape() != b.shape()) return false;
  for (size_t i = 0; i < a.v.size(); ++i) {
    const double da = a.v[i], db = b.v[i];
    const double scale = std::max({std::abs(da), std::abs(db), 1e-6});
    if (std::abs(da - db) / scale > rel) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("kernels match the serial reference on 150 random configurations") {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<float> val(-2.0f, 2.0f);
  int checked = 0;

  while (checked < 150) {
    const int c = 1 + int(rng() % 3);
    const int h = 2 + int(rng() % 7);  // up to 8x8
    const int w = 2 + int(rng() % 7);
    Tensor3 in(c, h, w);
    for (float& x : in.v) x = val(rng);

    const Layer layer = random_layer(rng, c);
    // Skip geometry that collapses below 1x1.
    if (layer.kind == LayerKind::conv2d || layer.kind == LayerKind::depthwise_conv2d) {
      if (h + 2 * layer.padding < layer.kernel_h || w + 2 * layer.padding < layer.kernel_w)
        continue;
    }
    if (layer.kind == LayerKind::maxpool2d &&
        (h < layer.kernel_h || w < layer.kernel_w))
      continue;

    const Tensor3 fast = apply_layer(layer, in);
    const Tensor3 slow = reference::apply_layer_naive(layer, in);
    if (!tensors_close(fast, slow, 1e-6)) {
      CAPTURE(int(layer.kind));
      CAPTURE(c);
      CAPTURE(h);
      CAPTURE(w);
      REQUIRE(tensors_close(fast, slow, 1e-6));
    }
    ++checked;
  }
  CHECK(checked == 150);
}

TEST_CASE("full fixture forwards match the reference evaluator") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<float> val(-1.0f, 1.0f);
  Tensor3 input(3, 224, 224);
  for (float& x : input.v) x = val(rng);

  for (const auto& [name, model] : make_fixture_models()) {
    CAPTURE(name);
    const auto fast = forward(model, input);
    const auto slow = reference::forward_naive(model, input);
    REQUIRE(fast.size() == slow.size());
    for (size_t i = 0; i < fast.size(); ++i)
      CHECK(fast[i] == doctest::Approx(slow[i]).epsilon(1e-6));

    double sum = 0.0;
    for (double s : fast) {
      CHECK(s > 0.0);
      CHECK(s < 1.0);
      sum += s;
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("forward is deterministic bit for bit") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<float> val(-1.0f, 1.0f);
  Tensor3 input(3, 224, 224);
  for (float& x : input.v) x = val(rng);

  const Model model = make_tiny_res();
  const auto a = forward(model, input);
  const auto b = forward(model, input);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("forward rejects wrong input shapes") {
  const Model model = make_tiny_squeeze();
  Tensor3 wrong(3, 112, 112);
  CHECK_THROWS_AS(forward(model, wrong), ShapeError);
}
