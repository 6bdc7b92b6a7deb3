// Compares the OpenMP forward kernels against the serial reference
// evaluator: wall time per layer stack and worst-case output divergence.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "vinevi/fixtures.hpp"
#include "vinevi/forward.hpp"
#include "vinevi/reference_forward.hpp"
#include "vinevi/tensor.hpp"

using namespace vinevi;

namespace {

Tensor3 random_input(uint64_t seed) {
  nn::SplitMix64 rng(seed);
  Tensor3 t(3, 224, 224);
  for (float& v : t.v) v = rng.weight(1.0);
  return t;
}

template <typename F>
double time_ms(F&& fn, int iterations) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < iterations; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / iterations;
}

double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), 1e-12});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  int iterations = 5;
  uint64_t seed = 42;
  CLI::App app{"forward-kernel benchmark: OpenMP kernels vs serial reference"};
  app.add_option("--iterations", iterations, "timed passes per model")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "input tensor seed");
  CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
  std::printf("openmp: %d threads\n", omp_get_max_threads());
#else
  std::printf("openmp: disabled at build time\n");
#endif

  const Tensor3 input = random_input(seed);
  std::printf("%-14s %12s %12s %9s %12s\n", "model", "parallel_ms", "serial_ms",
              "speedup", "max_rel_diff");

  bool all_match = true;
  for (const auto& [name, model] : nn::make_fixture_models()) {
    // Touch both paths once before timing.
    const auto fast = nn::forward(model, input);
    const auto slow = nn::reference::forward_naive(model, input);

    const double par_ms =
        time_ms([&] { volatile double k = nn::forward(model, input)[0]; (void)k; },
                iterations);
    const double ser_ms = time_ms(
        [&] {
          volatile double k = nn::reference::forward_naive(model, input)[0];
          (void)k;
        },
        iterations);

    const double diff = max_rel_diff(fast, slow);
    all_match = all_match && diff < 1e-6;
    std::printf("%-14s %12.3f %12.3f %8.2fx %12.3g\n", name.c_str(), par_ms, ser_ms,
                ser_ms / par_ms, diff);
  }

  if (!all_match) {
    std::fprintf(stderr, "kernel outputs diverged from the reference\n");
    return 1;
  }
  return 0;
}
