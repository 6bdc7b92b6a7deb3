#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

#include "vinevi/errors.hpp"

namespace vinevi::pipeline {

// Which packets get classified: everything, every Nth, or the first
// `budget` packets of each period (pool sampling for nodes that cannot
// keep up with line rate).
struct SamplingPolicy {
  enum class Kind { all, one_in_n, time_pool };

  Kind kind = Kind::all;
  uint64_t n = 1;
  std::chrono::nanoseconds period{0};
  uint64_t budget = 0;

  static SamplingPolicy all();
  static SamplingPolicy one_in_n(uint64_t n);
  static SamplingPolicy time_pool(std::chrono::nanoseconds period, uint64_t budget);

  // "all" | "1/N" | "pool:<period>:<budget>", e.g. "pool:1s:2".
  static SamplingPolicy parse(std::string_view text);
  std::string to_string() const;
};

class Sampler {
 public:
  explicit Sampler(SamplingPolicy policy);

  // `index` counts every packet seen (0-based); `now` is nanoseconds on
  // any monotone timeline (capture timestamps for replay, steady clock
  // for live).
  bool should_sample(uint64_t index, std::chrono::nanoseconds now);

 private:
  SamplingPolicy policy_;
  bool period_open_ = false;
  std::chrono::nanoseconds period_start_{0};
  uint64_t taken_this_period_ = 0;
};

}  // namespace vinevi::pipeline
