#include "lana/solver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

namespace lana {

void SolverConfig::check() const {
  if (!(time_limit_s > 0.0)) throw InvalidArgument("time_limit_s must be positive");
  if (cost_scale < 1) throw InvalidArgument("cost_scale must be >= 1");
  if (!(gap_tolerance >= 0.0)) throw InvalidArgument("gap_tolerance must be >= 0");
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::feasible: return "feasible";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::timeout: return "timeout";
  }
  return "unknown";
}

SolveStatus parse_status(const std::string& text) {
  if (text == "optimal") return SolveStatus::optimal;
  if (text == "feasible") return SolveStatus::feasible;
  if (text == "infeasible") return SolveStatus::infeasible;
  if (text == "timeout") return SolveStatus::timeout;
  throw InvalidArgument("unknown solve status '" + text + "'");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Keeps every budget sum far away from int64 overflow.
constexpr std::int64_t kCostCap = std::int64_t{1} << 60;

template <typename Cost>
std::vector<std::size_t> frontier_of(const std::vector<Cost>& costs,
                                     const std::vector<double>& deltas) {
  std::vector<std::size_t> order(costs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (costs[a] != costs[b]) return costs[a] < costs[b];
    if (deltas[a] != deltas[b]) return deltas[a] < deltas[b];
    return a < b;
  });
  std::vector<std::size_t> out;
  for (std::size_t j : order) {
    if (out.empty() || deltas[j] < deltas[out.back()]) out.push_back(j);
  }
  return out;
}

struct Segment {
  std::uint32_t layer;
  std::int64_t dcost;  // > 0
  double ddelta;       // < 0
};

// Lower convex hull of one layer's frontier, cost ascending.
std::vector<std::uint32_t> lower_hull(const std::vector<std::int64_t>& cost,
                                      const std::vector<double>& delta) {
  std::vector<std::uint32_t> h;
  for (std::size_t j : frontier_of(cost, delta)) {
    const auto jj = static_cast<std::uint32_t>(j);
    while (h.size() >= 2) {
      const auto a = h[h.size() - 2];
      const auto b = h.back();
      const double lhs = (delta[b] - delta[a]) * static_cast<double>(cost[jj] - cost[b]);
      const double rhs = (delta[jj] - delta[b]) * static_cast<double>(cost[b] - cost[a]);
      if (lhs >= rhs) {
        h.pop_back();
      } else {
        break;
      }
    }
    h.push_back(jj);
  }
  return h;
}

// Hull segments of all layers, best improvement per cost unit first.
std::vector<Segment> ranked_segments(const std::vector<std::vector<std::int64_t>>& cost,
                                     const std::vector<std::vector<double>>& delta,
                                     const std::vector<std::vector<std::uint32_t>>& hull) {
  struct Ranked {
    Segment seg;
    std::uint32_t pos;
  };
  std::vector<Ranked> ranked;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const auto& h = hull[i];
    for (std::size_t k = 1; k < h.size(); ++k) {
      ranked.push_back({{static_cast<std::uint32_t>(i), cost[i][h[k]] - cost[i][h[k - 1]],
                         delta[i][h[k]] - delta[i][h[k - 1]]},
                        static_cast<std::uint32_t>(k)});
    }
  }
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    const double lhs = a.seg.ddelta * static_cast<double>(b.seg.dcost);
    const double rhs = b.seg.ddelta * static_cast<double>(a.seg.dcost);
    if (lhs != rhs) return lhs < rhs;
    if (a.seg.layer != b.seg.layer) return a.seg.layer < b.seg.layer;
    return a.pos < b.pos;
  });
  std::vector<Segment> out;
  out.reserve(ranked.size());
  for (const auto& r : ranked) out.push_back(r.seg);
  return out;
}

// Root relaxation for one set of per-op values: bound and the LP solution as
// a hull position per layer plus the fraction taken of the next segment.
struct RootLp {
  bool feasible = false;
  double value = 0.0;
  std::vector<std::uint32_t> pos;
  std::int64_t fractional_layer = -1;
  double fraction = 0.0;
};

RootLp root_lp(const std::vector<std::vector<std::int64_t>>& cost,
               const std::vector<std::vector<double>>& delta,
               const std::vector<std::vector<std::uint32_t>>& hull,
               const std::vector<Segment>& segments, std::int64_t budget) {
  RootLp r;
  std::int64_t used = 0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    used += cost[i][hull[i][0]];
    r.value += delta[i][hull[i][0]];
  }
  if (used > budget) return r;
  r.feasible = true;
  r.pos.assign(hull.size(), 0);
  std::int64_t rem = budget - used;
  for (const auto& seg : segments) {
    if (seg.dcost <= rem) {
      rem -= seg.dcost;
      r.value += seg.ddelta;
      ++r.pos[seg.layer];
    } else {
      if (rem > 0) {
        r.fraction = static_cast<double>(rem) / static_cast<double>(seg.dcost);
        r.value += seg.ddelta * r.fraction;
        r.fractional_layer = seg.layer;
      }
      break;
    }
  }
  return r;
}

// Integer-cost view of one solve.
//
// Overlap constraints enter the bound through Lagrange multipliers: every op
// that repeats prior k's choice costs an extra lambda_k, and lambda_k * limit
// is subtracted once. For lambda >= 0 this never exceeds the true objective
// of a selection that respects the limit, so it stays a valid lower bound.
struct Problem {
  std::size_t n = 0;
  std::vector<std::vector<std::int64_t>> cost;
  std::vector<std::vector<double>> delta;
  // delta plus the multipliers of the priors each op repeats.
  std::vector<std::vector<double>> pen;
  double pen_offset = 0.0;
  // Lower convex hull of each layer's frontier under `pen`.
  std::vector<std::vector<std::uint32_t>> hull;
  std::vector<Segment> segments;
  std::vector<std::vector<std::uint32_t>> child_order;
  std::int64_t budget = 0;
  std::vector<std::vector<std::uint32_t>> priors;
  std::size_t overlap_limit = 0;
  // A selection that avoids every prior choice, when the budget allows one.
  std::vector<std::int32_t> avoiding;
  double eps = 0.0;
};

std::vector<std::vector<double>> penalized(const Problem& p, const std::vector<double>& lambda) {
  auto out = p.delta;
  for (std::size_t k = 0; k < p.priors.size(); ++k) {
    if (lambda[k] == 0.0) continue;
    for (std::size_t i = 0; i < p.n; ++i) out[i][p.priors[k][i]] += lambda[k];
  }
  return out;
}

double selection_delta(const Problem& p, const std::vector<std::int32_t>& choices) {
  double v = 0.0;
  for (std::size_t i = 0; i < p.n; ++i) v += p.delta[i][static_cast<std::size_t>(choices[i])];
  return v;
}

// Rounded-down LP solution with every prior choice priced out of reach. It
// repeats no prior choice, so it respects any overlap limit.
std::vector<std::int32_t> avoiding_selection(const Problem& p) {
  double spread = 1.0;
  for (const auto& d : p.delta) {
    const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
    spread += *hi - *lo;
  }
  const double big = 4.0 * spread;
  std::vector<std::vector<double>> d = p.delta;
  for (const auto& prior : p.priors) {
    for (std::size_t i = 0; i < p.n; ++i) d[i][prior[i]] = p.delta[i][prior[i]] + big;
  }
  std::vector<std::vector<std::uint32_t>> hull(p.n);
  for (std::size_t i = 0; i < p.n; ++i) hull[i] = lower_hull(p.cost[i], d[i]);
  const auto lp = root_lp(p.cost, d, hull, ranked_segments(p.cost, d, hull), p.budget);
  if (!lp.feasible) return {};
  std::vector<std::int32_t> out(p.n);
  for (std::size_t i = 0; i < p.n; ++i) {
    out[i] = static_cast<std::int32_t>(hull[i][lp.pos[i]]);
    for (const auto& prior : p.priors) {
      if (prior[i] == static_cast<std::uint32_t>(out[i])) return {};
    }
  }
  return out;
}

// Projected subgradient ascent on the Lagrangian dual of the overlap
// constraints at the root. Returns the best multipliers seen.
std::vector<double> overlap_multipliers(const Problem& p) {
  const std::size_t kp = p.priors.size();
  std::vector<double> lambda(kp, 0.0), best(kp, 0.0);
  const double limit = static_cast<double>(p.overlap_limit);
  double best_value = -kInf;
  double target = p.avoiding.empty() ? kInf : selection_delta(p, p.avoiding);
  double theta = 1.0;
  int stall = 0;
  std::vector<double> g(kp);
  std::vector<std::vector<std::uint32_t>> hull(p.n);

  for (int it = 0; it < 300 && theta > 1e-4; ++it) {
    const auto d = penalized(p, lambda);
    for (std::size_t i = 0; i < p.n; ++i) hull[i] = lower_hull(p.cost[i], d[i]);
    const auto lp = root_lp(p.cost, d, hull, ranked_segments(p.cost, d, hull), p.budget);
    if (!lp.feasible) return best;
    double value = lp.value;
    for (double l : lambda) value -= l * limit;
    if (value > best_value + 1e-12 * (1.0 + std::abs(best_value))) {
      best_value = value;
      best = lambda;
      stall = 0;
    } else if (++stall >= 10) {
      theta *= 0.5;
      stall = 0;
    }

    double norm = 0.0;
    for (std::size_t k = 0; k < kp; ++k) {
      double m = 0.0;
      for (std::size_t i = 0; i < p.n; ++i) {
        const auto& h = hull[i];
        const auto j = p.priors[k][i];
        double share = h[lp.pos[i]] == j ? 1.0 : 0.0;
        if (static_cast<std::int64_t>(i) == lp.fractional_layer) {
          share *= 1.0 - lp.fraction;
          if (h[lp.pos[i] + 1] == j) share += lp.fraction;
        }
        m += share;
      }
      g[k] = m - limit;
      if (lambda[k] == 0.0 && g[k] < 0.0) g[k] = 0.0;
      norm += g[k] * g[k];
    }
    // No violated constraint with a loose multiplier: the dual is optimal.
    if (norm == 0.0) break;
    // Without a known feasible value aim a little above the best bound.
    const double goal = target < kInf ? target : best_value + 0.1 * (1.0 + std::abs(best_value));
    const double step = theta * std::max(goal - value, 1e-9 * (1.0 + std::abs(value))) / norm;
    for (std::size_t k = 0; k < kp; ++k) lambda[k] = std::max(0.0, lambda[k] + step * g[k]);
  }
  return best;
}

Problem build_problem(const SearchInstance& instance, Budget budget,
                      std::span<const Selection> prior, std::size_t overlap_limit,
                      std::int64_t cost_scale) {
  Problem p;
  p.n = instance.num_layers();
  p.cost.resize(p.n);
  p.delta.resize(p.n);
  for (std::size_t i = 0; i < p.n; ++i) {
    for (const auto& op : instance.layers[i].ops) {
      p.cost[i].push_back(scale_cost(op.cost, cost_scale));
      p.delta[i].push_back(op.score_delta);
    }
  }
  p.budget = scale_budget(budget.limit_ms, cost_scale);
  for (const auto& s : prior) p.priors.emplace_back(s.choices.begin(), s.choices.end());
  p.overlap_limit = overlap_limit;

  std::vector<double> lambda(p.priors.size(), 0.0);
  if (!p.priors.empty() && overlap_limit < p.n) {
    p.avoiding = avoiding_selection(p);
    lambda = overlap_multipliers(p);
  }
  p.pen = penalized(p, lambda);
  double lambda_sum = 0.0;
  for (double l : lambda) lambda_sum += l;
  p.pen_offset = -lambda_sum * static_cast<double>(overlap_limit);

  p.hull.resize(p.n);
  p.child_order.resize(p.n);
  double scale_sum = std::abs(p.pen_offset);
  for (std::size_t i = 0; i < p.n; ++i) {
    double max_abs = 0.0;
    for (double v : p.pen[i]) max_abs = std::max(max_abs, std::abs(v));
    scale_sum += max_abs;
    p.hull[i] = lower_hull(p.cost[i], p.pen[i]);
    auto& order = p.child_order[i];
    order.resize(p.cost[i].size());
    std::iota(order.begin(), order.end(), std::uint32_t{0});
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      if (p.pen[i][a] != p.pen[i][b]) return p.pen[i][a] < p.pen[i][b];
      if (p.cost[i][a] != p.cost[i][b]) return p.cost[i][a] < p.cost[i][b];
      return a < b;
    });
  }
  p.segments = ranked_segments(p.cost, p.pen, p.hull);
  p.eps = 1e-9 * (1.0 + scale_sum);
  return p;
}

struct Node {
  std::vector<std::int32_t> fixed;     // -1 = free
  std::vector<std::uint16_t> matches;  // overlap with each prior over fixed layers
  std::int64_t fixed_cost = 0;
  double fixed_pen = 0.0;
  double bound = 0.0;
  std::uint32_t free_count = 0;
};

// Relaxation solution at one node.
struct Relaxation {
  double bound = kInf;
  std::int64_t fractional_layer = -1;
  // Hull position of every free layer in the rounded-down LP solution.
  std::vector<std::uint32_t> pos;
};

Node make_root(const Problem& p) {
  Node node;
  node.fixed.assign(p.n, -1);
  node.matches.assign(p.priors.size(), 0);
  node.free_count = static_cast<std::uint32_t>(p.n);
  return node;
}

Relaxation relax(const Problem& p, const Node& node) {
  Relaxation r;
  std::int64_t used = node.fixed_cost;
  double value = node.fixed_pen + p.pen_offset;
  for (std::size_t i = 0; i < p.n; ++i) {
    if (node.fixed[i] >= 0) continue;
    used += p.cost[i][p.hull[i][0]];
    value += p.pen[i][p.hull[i][0]];
  }
  if (used > p.budget) return r;
  std::int64_t rem = p.budget - used;
  r.pos.assign(p.n, 0);
  for (const auto& seg : p.segments) {
    if (node.fixed[seg.layer] >= 0) continue;
    if (seg.dcost <= rem) {
      rem -= seg.dcost;
      value += seg.ddelta;
      ++r.pos[seg.layer];
    } else {
      if (rem > 0) {
        value += seg.ddelta * (static_cast<double>(rem) / static_cast<double>(seg.dcost));
        r.fractional_layer = seg.layer;
      }
      break;
    }
  }
  r.bound = value;
  return r;
}

bool fits_overlap(const Problem& p, const Node& node) {
  for (auto m : node.matches) {
    if (m > p.overlap_limit) return false;
  }
  return true;
}

// State shared by every worker of one solve.
class SharedSearch {
 public:
  SharedSearch(const Problem& problem, const SolverConfig& config)
      : p(problem), config(config), start_(std::chrono::steady_clock::now()) {}

  // True when a node with this bound cannot improve on the incumbent.
  bool discard(double bound) {
    const double inc = incumbent_objective_.load(std::memory_order_relaxed);
    if (bound > inc + p.eps) return true;
    if (config.gap_tolerance > 0.0 && bound >= inc - config.gap_tolerance) {
      std::lock_guard lock(mutex_);
      tolerance_pruned_ = std::min(tolerance_pruned_, bound);
      return true;
    }
    return false;
  }

  void offer(const std::vector<std::int32_t>& choices) {
    double obj = 0.0;
    std::int64_t c = 0;
    for (std::size_t i = 0; i < p.n; ++i) {
      obj += p.delta[i][static_cast<std::size_t>(choices[i])];
      c += p.cost[i][static_cast<std::size_t>(choices[i])];
    }
    std::lock_guard lock(mutex_);
    if (present_) {
      if (obj > objective_) return;
      if (obj == objective_) {
        if (c > cost_) return;
        if (c == cost_ && !std::lexicographical_compare(choices.begin(), choices.end(),
                                                        choices_.begin(), choices_.end())) {
          return;
        }
      }
    }
    present_ = true;
    objective_ = obj;
    cost_ = c;
    choices_ = choices;
    incumbent_objective_.store(obj, std::memory_order_relaxed);
  }

  // Counts one explored node and trips the stop flag on a limit.
  void count_node(std::uint64_t local) {
    const auto total = nodes_.fetch_add(1, std::memory_order_relaxed) + 1;
    if (config.node_limit && total >= *config.node_limit) stop_ = true;
    if ((local & 255u) == 0 && elapsed() > config.time_limit_s) stop_ = true;
  }

  bool stopped() const { return stop_.load(std::memory_order_relaxed); }

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  SolveResult result(double left) const {
    SolveResult r;
    r.nodes_explored = nodes_.load();
    const bool halted = stop_.load();
    if (!present_) {
      r.status = halted ? SolveStatus::timeout : SolveStatus::infeasible;
      return r;
    }
    r.selection.choices.assign(choices_.begin(), choices_.end());
    r.objective = objective_;
    if (halted || tolerance_pruned_ != kInf) {
      const double lower = std::min(left, tolerance_pruned_);
      r.status = SolveStatus::feasible;
      r.gap = lower == kInf ? 0.0 : std::max(0.0, objective_ - lower);
    } else {
      r.status = SolveStatus::optimal;
    }
    return r;
  }

  const Problem& p;
  const SolverConfig& config;

 private:
  std::chrono::steady_clock::time_point start_;
  std::mutex mutex_;
  bool present_ = false;
  double objective_ = kInf;
  std::int64_t cost_ = 0;
  std::vector<std::int32_t> choices_;
  std::atomic<double> incumbent_objective_{kInf};
  double tolerance_pruned_ = kInf;
  std::atomic<std::uint64_t> nodes_{0};
  std::atomic<bool> stop_{false};
};

// Depth-first branch and bound on one thread.
class Searcher {
 public:
  explicit Searcher(SharedSearch& shared) : s_(shared), p_(shared.p) {}

  // Expands one node. Children are appended to `out` so the first child to
  // explore ends up last.
  void expand(const Node& node, std::vector<Node>& out) {
    if (node.free_count == 0) {
      s_.offer(node.fixed);
      return;
    }
    const Relaxation r = relax(p_, node);
    if (r.bound == kInf) return;

    // The rounded-down LP solution always fits the budget.
    std::vector<std::int32_t> rounded = node.fixed;
    for (std::size_t i = 0; i < p_.n; ++i) {
      if (rounded[i] < 0) rounded[i] = static_cast<std::int32_t>(p_.hull[i][r.pos[i]]);
    }
    std::vector<bool> violated(p_.priors.size(), false);
    bool any_violated = false;
    for (std::size_t k = 0; k < p_.priors.size(); ++k) {
      std::size_t same = 0;
      for (std::size_t i = 0; i < p_.n; ++i) {
        same += static_cast<std::uint32_t>(rounded[i]) == p_.priors[k][i];
      }
      if (same > p_.overlap_limit) violated[k] = any_violated = true;
    }
    if (!any_violated) s_.offer(rounded);

    const std::size_t layer = branch_layer(node, r, rounded, violated, any_violated);

    // Relaxation over the other free layers as prefix sums in segment order,
    // shared by every child.
    std::int64_t base_cost = node.fixed_cost;
    double base_delta = node.fixed_pen + p_.pen_offset;
    for (std::size_t i = 0; i < p_.n; ++i) {
      if (node.fixed[i] >= 0 || i == layer) continue;
      base_cost += p_.cost[i][p_.hull[i][0]];
      base_delta += p_.pen[i][p_.hull[i][0]];
    }
    cum_cost_.assign(1, 0);
    cum_gain_.assign(1, 0.0);
    seg_idx_.clear();
    for (std::size_t k = 0; k < p_.segments.size(); ++k) {
      const auto& seg = p_.segments[k];
      if (node.fixed[seg.layer] >= 0 || seg.layer == layer) continue;
      cum_cost_.push_back(cum_cost_.back() + seg.dcost);
      cum_gain_.push_back(cum_gain_.back() + seg.ddelta);
      seg_idx_.push_back(k);
    }

    const std::size_t first_child = out.size();
    for (std::uint32_t j : p_.child_order[layer]) {
      const std::int64_t c = base_cost + p_.cost[layer][j];
      if (c > p_.budget) continue;
      bool ok = true;
      for (std::size_t k = 0; k < p_.priors.size() && ok; ++k) {
        if (p_.priors[k][layer] == j && node.matches[k] + 1u > p_.overlap_limit) ok = false;
      }
      if (!ok) continue;

      const std::int64_t rem = p_.budget - c;
      const auto it = std::upper_bound(cum_cost_.begin(), cum_cost_.end(), rem);
      const auto taken = static_cast<std::size_t>(it - cum_cost_.begin()) - 1;
      double bound = base_delta + p_.pen[layer][j] + cum_gain_[taken];
      if (taken < seg_idx_.size()) {
        const auto& seg = p_.segments[seg_idx_[taken]];
        bound += seg.ddelta * (static_cast<double>(rem - cum_cost_[taken]) /
                               static_cast<double>(seg.dcost));
      }
      if (s_.discard(bound)) continue;

      Node child;
      child.fixed = node.fixed;
      child.fixed[layer] = static_cast<std::int32_t>(j);
      child.matches = node.matches;
      for (std::size_t k = 0; k < p_.priors.size(); ++k) {
        child.matches[k] = static_cast<std::uint16_t>(child.matches[k] + (p_.priors[k][layer] == j));
      }
      child.fixed_cost = node.fixed_cost + p_.cost[layer][j];
      child.fixed_pen = node.fixed_pen + p_.pen[layer][j];
      child.bound = bound;
      child.free_count = node.free_count - 1;
      out.push_back(std::move(child));
    }
    std::reverse(out.begin() + static_cast<std::ptrdiff_t>(first_child), out.end());
  }

  // Explores `stack` depth first. Returns the smallest bound left unexplored
  // when the search is stopped early, +inf otherwise.
  double dive(std::vector<Node>& stack) {
    while (!stack.empty() && !s_.stopped()) {
      Node node = std::move(stack.back());
      stack.pop_back();
      if (s_.discard(node.bound)) continue;
      s_.count_node(++local_);
      expand(node, stack);
    }
    double left = kInf;
    for (const auto& node : stack) left = std::min(left, node.bound);
    return left;
  }

 private:
  // The fractional layer of the relaxation; otherwise the first free layer
  // that makes the rounded solution break an overlap constraint; otherwise
  // the first free layer.
  std::size_t branch_layer(const Node& node, const Relaxation& r,
                           const std::vector<std::int32_t>& rounded,
                           const std::vector<bool>& violated, bool any_violated) const {
    if (r.fractional_layer >= 0) return static_cast<std::size_t>(r.fractional_layer);
    std::size_t first_free = p_.n;
    for (std::size_t i = 0; i < p_.n; ++i) {
      if (node.fixed[i] >= 0) continue;
      if (first_free == p_.n) first_free = i;
      if (!any_violated) break;
      for (std::size_t k = 0; k < p_.priors.size(); ++k) {
        if (violated[k] && static_cast<std::uint32_t>(rounded[i]) == p_.priors[k][i]) return i;
      }
    }
    return first_free;
  }

  SharedSearch& s_;
  const Problem& p_;
  std::uint64_t local_ = 0;
  std::vector<std::int64_t> cum_cost_;
  std::vector<double> cum_gain_;
  std::vector<std::size_t> seg_idx_;
};

double search_parallel(SharedSearch& shared, Node root, unsigned threads) {
  // Split breadth first until every worker has several subtrees to take.
  std::deque<Node> open;
  open.push_back(std::move(root));
  std::vector<Node> children;
  Searcher splitter(shared);
  const std::size_t want = std::size_t{8} * threads;
  std::uint64_t local = 0;
  while (!open.empty() && open.size() < want && !shared.stopped()) {
    Node node = std::move(open.front());
    open.pop_front();
    if (shared.discard(node.bound)) continue;
    shared.count_node(++local);
    children.clear();
    splitter.expand(node, children);
    for (auto it = children.rbegin(); it != children.rend(); ++it) open.push_back(std::move(*it));
  }

  std::vector<Node> work(std::make_move_iterator(open.begin()), std::make_move_iterator(open.end()));
  std::atomic<std::size_t> next{0};
  std::vector<double> left(threads, kInf);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      Searcher searcher(shared);
      std::vector<Node> stack;
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= work.size()) break;
        if (shared.stopped()) {
          left[t] = std::min(left[t], work[i].bound);
          continue;
        }
        stack.clear();
        stack.push_back(std::move(work[i]));
        left[t] = std::min(left[t], searcher.dive(stack));
      }
    });
  }
  for (auto& th : pool) th.join();
  return *std::min_element(left.begin(), left.end());
}

void check_inputs(const SearchInstance& instance, Budget budget, std::span<const Selection> prior,
                  std::size_t overlap_limit) {
  if (const auto v = validate_instance(instance); !v.empty()) {
    throw InvalidArgument("invalid instance: " + v.front().to_string());
  }
  if (!(budget.limit_ms >= 0.0)) throw InvalidArgument("budget must be >= 0");
  if (overlap_limit > instance.num_layers()) {
    throw InvalidArgument("overlap_limit " + std::to_string(overlap_limit) + " exceeds N = " +
                          std::to_string(instance.num_layers()));
  }
  for (const auto& s : prior) check_selection(instance, s);
}

}  // namespace

std::int64_t scale_cost(double cost_ms, std::int64_t cost_scale) {
  const double scaled = std::nearbyint(cost_ms * static_cast<double>(cost_scale));
  if (!(scaled < static_cast<double>(kCostCap))) return kCostCap;
  return static_cast<std::int64_t>(scaled);
}

std::int64_t scale_budget(double limit_ms, std::int64_t cost_scale) {
  const double scaled = limit_ms * static_cast<double>(cost_scale);
  if (!(scaled < static_cast<double>(kCostCap))) return kCostCap;
  return static_cast<std::int64_t>(std::floor(scaled + 1e-9 * std::max(1.0, scaled)));
}

std::vector<std::size_t> dominance_frontier(const LayerTable& layer) {
  std::vector<double> costs;
  std::vector<double> deltas;
  for (const auto& op : layer.ops) {
    costs.push_back(op.cost);
    deltas.push_back(op.score_delta);
  }
  return frontier_of(costs, deltas);
}

double lp_bound(const SearchInstance& instance, Budget budget, const PartialAssignment& fixed,
                std::span<const Selection> prior, std::size_t overlap_limit,
                std::int64_t cost_scale) {
  check_inputs(instance, budget, prior, overlap_limit);
  if (fixed.size() != instance.num_layers()) {
    throw InvalidArgument("partial assignment has the wrong number of layers");
  }
  const Problem p = build_problem(instance, budget, prior, overlap_limit, cost_scale);
  Node node = make_root(p);
  for (std::size_t i = 0; i < p.n; ++i) {
    if (!fixed[i]) continue;
    const std::size_t j = *fixed[i];
    if (j >= instance.layers[i].ops.size()) {
      throw InvalidSelection("layer " + std::to_string(i) + ": op index out of range");
    }
    node.fixed[i] = static_cast<std::int32_t>(j);
    node.fixed_cost += p.cost[i][j];
    node.fixed_pen += p.pen[i][j];
    --node.free_count;
    for (std::size_t k = 0; k < p.priors.size(); ++k) node.matches[k] += p.priors[k][i] == j;
  }
  if (!fits_overlap(p, node)) return kInf;
  return relax(p, node).bound;
}

SolveResult solve(const SearchInstance& instance, Budget budget, std::span<const Selection> prior,
                  std::size_t overlap_limit, const SolverConfig& config) {
  config.check();
  check_inputs(instance, budget, prior, overlap_limit);
  if (prior.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw InvalidArgument("too many prior solutions");
  }
  const Problem p = build_problem(instance, budget, prior, overlap_limit, config.cost_scale);
  SharedSearch shared(p, config);
  if (!p.avoiding.empty()) shared.offer(p.avoiding);

  Node root = make_root(p);
  root.bound = relax(p, root).bound;
  double left = kInf;
  if (root.bound != kInf) {
    unsigned threads = config.threads == 0 ? std::thread::hardware_concurrency() : config.threads;
    threads = std::max(threads, 1u);
    if (threads == 1) {
      Searcher searcher(shared);
      std::vector<Node> stack;
      stack.push_back(std::move(root));
      left = searcher.dive(stack);
    } else {
      left = search_parallel(shared, std::move(root), threads);
    }
  }

  SolveResult result = shared.result(left);
  if (result.has_solution()) {
    result.cost_ms = cost(instance, result.selection);
  }
  return result;
}

std::size_t overlap_limit_for(std::size_t num_layers, double overlap_fraction) {
  if (!(overlap_fraction >= 0.0 && overlap_fraction <= 1.0)) {
    throw InvalidArgument("overlap fraction must be in [0, 1]");
  }
  const double raw = overlap_fraction * static_cast<double>(num_layers);
  const auto limit = static_cast<std::size_t>(std::floor(raw + 1e-9 * std::max(1.0, raw)));
  return std::min(limit, num_layers);
}

SolveReport solve_k_diverse(const SearchInstance& instance, Budget budget, std::size_t k,
                            double overlap_fraction, const SolverConfig& config,
                            const SolutionCallback& on_solution) {
  if (k < 1) throw InvalidArgument("k must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  SolveReport report;
  report.instance = instance.name;
  report.budget_ms = budget.limit_ms;
  report.overlap_limit = overlap_limit_for(instance.num_layers(), overlap_fraction);

  std::vector<Selection> found;
  for (std::size_t round = 0; round < k; ++round) {
    SolveResult r = solve(instance, budget, found, report.overlap_limit, config);
    if (!r.has_solution()) break;
    if (on_solution) on_solution(round, r);
    found.push_back(r.selection);
    report.solutions.push_back(std::move(r));
  }
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace lana
