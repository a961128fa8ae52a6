// Test-only helpers: seeded instance generators and exhaustive oracles.
// The oracles enumerate the search space directly and share nothing with
// the solver except the documented cost rounding (scale_cost/scale_budget).
#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "lana/model.hpp"
#include "lana/solver.hpp"

namespace lana::oracle {

struct InstanceShape {
  std::size_t layers = 6;
  std::size_t ops = 4;
  /// Fraction of non-teacher ops whose delta is drawn below zero.
  double negative_fraction = 0.0;
  /// Costs are multiples of 1/grid ms.
  double grid = 1000.0;
};

/// Teacher at a random index with delta 0; other ops get uniform deltas in
/// (0, 1] and uniform costs between 0.05 and 1.3 times the teacher cost.
inline SearchInstance random_instance(std::uint64_t seed, const InstanceShape& shape) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SearchInstance inst;
  inst.name = "random-" + std::to_string(seed);
  auto on_grid = [&](double v) { return std::max(1.0, std::round(v * shape.grid)) / shape.grid; };
  for (std::size_t i = 0; i < shape.layers; ++i) {
    LayerTable layer;
    layer.layer_index = i;
    layer.teacher_index = static_cast<std::size_t>(rng() % shape.ops);
    const double teacher_cost = on_grid(1.0 + 4.0 * unit(rng));
    for (std::size_t j = 0; j < shape.ops; ++j) {
      CandidateOp op;
      if (j == layer.teacher_index) {
        op.op_id = "teacher";
        op.cost = teacher_cost;
        op.tags = {"teacher"};
      } else {
        op.op_id = "op" + std::to_string(j);
        op.score_delta = 1e-3 + unit(rng);
        if (unit(rng) < shape.negative_fraction) op.score_delta = -0.2 * unit(rng);
        op.cost = on_grid(teacher_cost * (0.05 + 1.25 * unit(rng)));
        op.tags = {j % 2 ? "efn" : "dense"};
      }
      layer.ops.push_back(std::move(op));
    }
    inst.layers.push_back(std::move(layer));
  }
  return inst;
}

/// Teacher (index 0) plus identity (index 1) at every layer.
inline SearchInstance zero_shot_instance(std::uint64_t seed, std::size_t layers) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SearchInstance inst;
  inst.name = "zeroshot-" + std::to_string(seed);
  for (std::size_t i = 0; i < layers; ++i) {
    LayerTable layer;
    layer.layer_index = i;
    layer.teacher_index = 0;
    const double c = std::round((0.5 + 3.0 * unit(rng)) * 1000.0) / 1000.0;
    layer.ops.push_back({"teacher", 0.0, c, {}});
    layer.ops.push_back({"identity", 0.01 + unit(rng), 0.01, {"skip"}});
    inst.layers.push_back(std::move(layer));
  }
  return inst;
}

struct BruteForce {
  bool feasible = false;
  Selection best;
  double objective = std::numeric_limits<double>::infinity();
  std::int64_t scaled_cost = 0;
  std::vector<Selection> feasible_set;
};

/// Enumerates every selection; optimum under (objective, scaled cost,
/// lexicographic choices). Objectives are accumulated in layer order.
inline BruteForce brute_force(const SearchInstance& inst, Budget budget,
                              const std::vector<Selection>& prior = {},
                              std::size_t overlap_limit = std::numeric_limits<std::size_t>::max(),
                              bool keep_feasible_set = false, std::int64_t cost_scale = 1000) {
  BruteForce out;
  const std::size_t n = inst.layers.size();
  const std::int64_t cap = scale_budget(budget.limit_ms, cost_scale);
  std::vector<std::size_t> idx(n, 0);
  for (;;) {
    std::int64_t c = 0;
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      c += scale_cost(inst.layers[i].ops[idx[i]].cost, cost_scale);
      obj += inst.layers[i].ops[idx[i]].score_delta;
    }
    bool ok = c <= cap;
    for (std::size_t k = 0; ok && k < prior.size(); ++k) {
      std::size_t same = 0;
      for (std::size_t i = 0; i < n; ++i) same += idx[i] == prior[k].choices[i];
      ok = same <= overlap_limit;
    }
    if (ok) {
      Selection s{idx};
      if (keep_feasible_set) out.feasible_set.push_back(s);
      const bool better = !out.feasible || obj < out.objective ||
                          (obj == out.objective &&
                           (c < out.scaled_cost || (c == out.scaled_cost && s < out.best)));
      if (better) {
        out.feasible = true;
        out.best = s;
        out.objective = obj;
        out.scaled_cost = c;
      }
    }
    std::size_t i = n;
    while (i > 0) {
      --i;
      if (++idx[i] < inst.layers[i].ops.size()) break;
      idx[i] = 0;
      if (i == 0) return out;
    }
    if (n == 0) return out;
  }
}

/// Concordant minus discordant pairs and tie counts by direct pair
/// enumeration.
inline double kendall_tau_pairs(const std::vector<double>& x, const std::vector<double>& y) {
  std::int64_t c = 0, d = 0, tx = 0, ty = 0, n0 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      ++n0;
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      if (dx == 0) ++tx;
      if (dy == 0) ++ty;
      if (dx == 0 || dy == 0) continue;
      if ((dx > 0) == (dy > 0)) {
        ++c;
      } else {
        ++d;
      }
    }
  }
  return static_cast<double>(c - d) /
         std::sqrt(static_cast<double>(n0 - tx) * static_cast<double>(n0 - ty));
}

}  // namespace lana::oracle
