#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lana/model.hpp"

namespace lana {

/// SplitMix64 (Steele, Lea, Flood 2014). The state advances by the golden
/// gamma 0x9E3779B97F4A7C15 and each output is the finalizer of the new
/// state, so draw i of a stream depends only on (seed, i).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  /// Unbiased draw in [0, bound) by rejection on the low range.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::uint64_t state_;
};

struct SamplerConfig {
  std::uint64_t seed = 0;
  std::size_t max_attempts_per_sample = 10000;
  /// Must match the solver's cost scale for the two to agree on feasibility.
  std::int64_t cost_scale = 1000;
  unsigned threads = 1;

  void check() const;
};

class SamplingFailure : public Error {
 public:
  SamplingFailure(const std::string& what, std::size_t attempts) : Error(what), attempts(attempts) {}
  std::size_t attempts;
};

/// Uniform per-layer draw, retried until it fits the budget. Uses the stream
/// seeded with `config.seed`.
Selection sample_feasible(const SearchInstance& instance, Budget budget, const SamplerConfig& config);

struct RandomSample {
  std::size_t sample_index = 0;
  Selection selection;
  double objective = 0.0;
  double cost_ms = 0.0;
};

struct RandomSearchResult {
  Selection best;
  double best_objective = 0.0;
  /// Successful draws in sample-index order.
  std::vector<RandomSample> population;
  std::size_t failures = 0;
};

/// Draws `n_samples` feasible selections; sample i uses the stream seeded
/// with `config.seed ^ i`, so the result does not depend on thread count.
/// Throws SamplingFailure if every draw fails.
RandomSearchResult random_search(const SearchInstance& instance, Budget budget,
                                 std::size_t n_samples, const SamplerConfig& config);

/// CSV with columns sample_index,objective,cost_ms.
std::string population_csv(const RandomSearchResult& result);

}  // namespace lana
