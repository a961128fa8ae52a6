#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lana/model.hpp"

namespace lana {

/// Search limits and numeric settings for the branch-and-bound solver.
struct SolverConfig {
  double time_limit_s = 60.0;
  /// Integer cost units per millisecond.
  std::int64_t cost_scale = 1000;
  /// Absolute objective gap accepted as "good enough"; 0 proves optimality.
  double gap_tolerance = 0.0;
  std::optional<std::uint64_t> node_limit;
  /// Worker threads; 0 means std::thread::hardware_concurrency().
  unsigned threads = 1;

  void check() const;
};

enum class SolveStatus { optimal, feasible, infeasible, timeout };

std::string to_string(SolveStatus status);
SolveStatus parse_status(const std::string& text);

struct SolveResult {
  Selection selection;
  double objective = 0.0;
  double cost_ms = 0.0;
  SolveStatus status = SolveStatus::infeasible;
  /// Incumbent objective minus the best proven lower bound.
  double gap = 0.0;
  std::uint64_t nodes_explored = 0;

  bool has_solution() const {
    return status == SolveStatus::optimal || status == SolveStatus::feasible;
  }
};

struct SolveReport {
  std::string instance;
  double budget_ms = 0.0;
  std::size_t overlap_limit = 0;
  std::vector<SolveResult> solutions;
  double wall_time_s = 0.0;
};

/// Rounds ms to integer cost units, half to even.
std::int64_t scale_cost(double cost_ms, std::int64_t cost_scale);

/// Rounds a budget down to integer cost units. Representation error below
/// 1e-9 relative is absorbed first, so a budget built as the exact sum of
/// costs admits that sum.
std::int64_t scale_budget(double limit_ms, std::int64_t cost_scale);

/// Ops of `layer` not dominated on (cost, score_delta), as op indices sorted
/// by cost ascending with strictly decreasing score_delta.
///
/// Only used to build relaxation bounds; dominated ops stay selectable in the
/// integer search since overlap constraints can force them.
std::vector<std::size_t> dominance_frontier(const LayerTable& layer);

/// Per-layer fixed op index, or nullopt for a free layer.
using PartialAssignment = std::vector<std::optional<std::size_t>>;

/// Lower bound on the objective of every completion of `fixed` that meets the
/// budget. Overlap constraints are dropped from the relaxation; `prior` and
/// `overlap_limit` only make the bound +inf when the fixed part already breaks
/// one of them. Returns +inf when no completion fits the budget.
double lp_bound(const SearchInstance& instance, Budget budget, const PartialAssignment& fixed,
                std::span<const Selection> prior, std::size_t overlap_limit,
                std::int64_t cost_scale = 1000);

/// Minimizes the summed score delta subject to the latency budget and to
/// overlap(sel, p) <= overlap_limit for every p in `prior`.
///
/// Among equal objectives the result is the one with the lower scaled cost,
/// then the lexicographically smallest choice vector. The answer does not
/// depend on `config.threads`.
SolveResult solve(const SearchInstance& instance, Budget budget, std::span<const Selection> prior,
                  std::size_t overlap_limit, const SolverConfig& config = {});

/// floor(fraction * N), tolerant of representation error in the product.
std::size_t overlap_limit_for(std::size_t num_layers, double overlap_fraction);

using SolutionCallback = std::function<void(std::size_t index, const SolveResult&)>;

/// Solves k times, each solve constrained against all earlier solutions.
/// Stops at the first solve that returns no solution.
SolveReport solve_k_diverse(const SearchInstance& instance, Budget budget, std::size_t k,
                            double overlap_fraction, const SolverConfig& config = {},
                            const SolutionCallback& on_solution = {});

}  // namespace lana
