#include "lana/baselines.hpp"

#include <algorithm>
#include <optional>
#include <sstream>
#include <thread>

#include "lana/lut_io.hpp"
#include "lana/solver.hpp"

namespace lana {

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t SplitMix64::below(std::uint64_t bound) {
  if (bound == 0) throw InvalidArgument("SplitMix64::below: bound must be positive");
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = next();
    if (r >= threshold) return r % bound;
  }
}

void SamplerConfig::check() const {
  if (max_attempts_per_sample < 1) throw InvalidArgument("max_attempts_per_sample must be >= 1");
  if (cost_scale < 1) throw InvalidArgument("cost_scale must be >= 1");
}

namespace {

struct ScaledCosts {
  std::vector<std::vector<std::int64_t>> cost;
  std::int64_t budget;
};

ScaledCosts scale(const SearchInstance& instance, Budget budget, std::int64_t cost_scale) {
  ScaledCosts s;
  for (const auto& layer : instance.layers) {
    auto& row = s.cost.emplace_back();
    for (const auto& op : layer.ops) row.push_back(scale_cost(op.cost, cost_scale));
  }
  s.budget = scale_budget(budget.limit_ms, cost_scale);
  return s;
}

std::optional<Selection> draw(const SearchInstance& instance, const ScaledCosts& costs,
                              std::uint64_t seed, std::size_t max_attempts) {
  SplitMix64 rng(seed);
  Selection sel;
  sel.choices.resize(instance.num_layers());
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    std::int64_t total = 0;
    for (std::size_t i = 0; i < sel.choices.size(); ++i) {
      sel.choices[i] = static_cast<std::size_t>(rng.below(instance.layers[i].ops.size()));
      total += costs.cost[i][sel.choices[i]];
    }
    if (total <= costs.budget) return sel;
  }
  return std::nullopt;
}

void check_instance(const SearchInstance& instance, Budget budget) {
  if (const auto v = validate_instance(instance); !v.empty()) {
    throw InvalidArgument("invalid instance: " + v.front().to_string());
  }
  if (!(budget.limit_ms >= 0.0)) throw InvalidArgument("budget must be >= 0");
}

}  // namespace

Selection sample_feasible(const SearchInstance& instance, Budget budget, const SamplerConfig& config) {
  config.check();
  check_instance(instance, budget);
  const ScaledCosts costs = scale(instance, budget, config.cost_scale);
  auto sel = draw(instance, costs, config.seed, config.max_attempts_per_sample);
  if (!sel) {
    throw SamplingFailure("no feasible selection after " +
                              std::to_string(config.max_attempts_per_sample) + " attempts",
                          config.max_attempts_per_sample);
  }
  return *sel;
}

RandomSearchResult random_search(const SearchInstance& instance, Budget budget,
                                 std::size_t n_samples, const SamplerConfig& config) {
  config.check();
  check_instance(instance, budget);
  if (n_samples < 1) throw InvalidArgument("n_samples must be >= 1");
  const ScaledCosts costs = scale(instance, budget, config.cost_scale);

  std::vector<std::optional<Selection>> draws(n_samples);
  unsigned threads = config.threads == 0 ? std::thread::hardware_concurrency() : config.threads;
  threads = std::clamp<unsigned>(threads, 1u, static_cast<unsigned>(std::min<std::size_t>(n_samples, 256)));
  auto run = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < n_samples; i += step) {
      draws[i] = draw(instance, costs, config.seed ^ static_cast<std::uint64_t>(i),
                      config.max_attempts_per_sample);
    }
  };
  if (threads == 1) {
    run(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(run, t, threads);
    for (auto& th : pool) th.join();
  }

  RandomSearchResult result;
  std::int64_t best_cost = 0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    if (!draws[i]) {
      ++result.failures;
      continue;
    }
    RandomSample s;
    s.sample_index = i;
    s.selection = std::move(*draws[i]);
    s.objective = objective(instance, s.selection);
    s.cost_ms = cost(instance, s.selection);
    std::int64_t scaled = 0;
    for (std::size_t l = 0; l < s.selection.size(); ++l) scaled += costs.cost[l][s.selection.choices[l]];

    const bool better = result.population.empty() || s.objective < result.best_objective ||
                        (s.objective == result.best_objective &&
                         (scaled < best_cost || (scaled == best_cost && s.selection < result.best)));
    if (better) {
      result.best = s.selection;
      result.best_objective = s.objective;
      best_cost = scaled;
    }
    result.population.push_back(std::move(s));
  }
  if (result.population.empty()) {
    throw SamplingFailure("all " + std::to_string(n_samples) + " random draws failed",
                          n_samples * config.max_attempts_per_sample);
  }
  return result;
}

std::string population_csv(const RandomSearchResult& result) {
  std::ostringstream out;
  out << "sample_index,objective,cost_ms\n";
  for (const auto& s : result.population) {
    out << s.sample_index << ',' << format_real(s.objective) << ',' << format_real(s.cost_ms) << '\n';
  }
  return out.str();
}

}  // namespace lana
