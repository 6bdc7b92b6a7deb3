#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "vinevi/model.hpp"

namespace vinevi::nn {

// splitmix64: tiny seedable generator with identical output on every
// platform, so the fixture weights below never drift.
struct SplitMix64 {
  uint64_t state;

  explicit SplitMix64(uint64_t seed) : state(seed) {}

  uint64_t next() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double unit() { return double(next() >> 11) * 0x1.0p-53; }

  // Uniform in [-scale, scale), rounded through float.
  float weight(double scale) { return float((unit() * 2.0 - 1.0) * scale); }
};

// Three structurally distinct toy networks with fixed-seed weights:
// a squeeze/expand stack, a depthwise-separable stack and one with a
// residual block. They ship with the repo so the benchmark and golden
// tests run without any external downloads.
Model make_tiny_squeeze();
Model make_tiny_mobile();
Model make_tiny_res();

std::vector<std::pair<std::string, Model>> make_fixture_models();

// Writes <dir>/<name>.vnn for each fixture; returns the written paths.
std::vector<std::filesystem::path> write_fixture_models(const std::filesystem::path& dir);

}  // namespace vinevi::nn
