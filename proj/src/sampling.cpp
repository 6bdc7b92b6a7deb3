#include "vinevi/sampling.hpp"

#include <charconv>

#include "vinevi/time_util.hpp"

namespace vinevi::pipeline {

SamplingPolicy SamplingPolicy::all() { return SamplingPolicy{}; }

SamplingPolicy SamplingPolicy::one_in_n(uint64_t n) {
  if (n < 1) throw ConfigError("one-in-n sampling needs n >= 1");
  SamplingPolicy p;
  p.kind = Kind::one_in_n;
  p.n = n;
  return p;
}

SamplingPolicy SamplingPolicy::time_pool(std::chrono::nanoseconds period,
                                         uint64_t budget) {
  if (period <= std::chrono::nanoseconds::zero())
    throw ConfigError("pool sampling needs a positive period");
  if (budget < 1) throw ConfigError("pool sampling needs budget >= 1");
  SamplingPolicy p;
  p.kind = Kind::time_pool;
  p.period = period;
  p.budget = budget;
  return p;
}

SamplingPolicy SamplingPolicy::parse(std::string_view text) {
  if (text == "all") return all();
  if (text.rfind("1/", 0) == 0) {
    uint64_t n = 0;
    const auto* begin = text.data() + 2;
    const auto* end = text.data() + text.size();
    auto [p, ec] = std::from_chars(begin, end, n);
    if (ec != std::errc() || p != end || n < 1)
      throw ConfigError("bad sampling spec: " + std::string(text));
    return one_in_n(n);
  }
  if (text.rfind("pool:", 0) == 0) {
    const std::string_view rest = text.substr(5);
    const size_t colon = rest.rfind(':');
    if (colon == std::string_view::npos)
      throw ConfigError("bad sampling spec, want pool:<period>:<budget>");
    const auto period = parse_duration(rest.substr(0, colon));
    uint64_t budget = 0;
    const auto* begin = rest.data() + colon + 1;
    const auto* end = rest.data() + rest.size();
    auto [p, ec] = std::from_chars(begin, end, budget);
    if (ec != std::errc() || p != end)
      throw ConfigError("bad pool budget in: " + std::string(text));
    return time_pool(period, budget);
  }
  throw ConfigError("bad sampling spec: " + std::string(text) +
                    " (want all, 1/N or pool:<period>:<budget>)");
}

std::string SamplingPolicy::to_string() const {
  switch (kind) {
    case Kind::all: return "all";
    case Kind::one_in_n: return "1/" + std::to_string(n);
    case Kind::time_pool:
      return "pool:" + format_duration(period) + ":" + std::to_string(budget);
  }
  return "?";
}

Sampler::Sampler(SamplingPolicy policy) : policy_(policy) {}

bool Sampler::should_sample(uint64_t index, std::chrono::nanoseconds now) {
  switch (policy_.kind) {
    case SamplingPolicy::Kind::all:
      return true;
    case SamplingPolicy::Kind::one_in_n:
      return index % policy_.n == 0;
    case SamplingPolicy::Kind::time_pool: {
      if (!period_open_) {
        period_open_ = true;
        period_start_ = now;
      }
      while (now >= period_start_ + policy_.period) {
        period_start_ += policy_.period;
        taken_this_period_ = 0;
      }
      if (taken_this_period_ < policy_.budget) {
        ++taken_this_period_;
        return true;
      }
      return false;
    }
  }
  return true;
}

}  // namespace vinevi::pipeline
