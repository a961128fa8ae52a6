#include "lana/proxy_eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lana/baselines.hpp"
#include "lana/lut_io.hpp"
#include "lana/solver.hpp"

namespace lana {

RankedCandidates rank_candidates(const SearchInstance& instance, std::span<const Selection> solutions,
                                 const std::optional<std::vector<double>>& measured) {
  if (measured && measured->size() != solutions.size()) {
    throw InvalidArgument("rank_candidates: " + std::to_string(measured->size()) +
                          " measured scores for " + std::to_string(solutions.size()) + " solutions");
  }
  RankedCandidates out;
  out.by_measured = measured.has_value();
  for (std::size_t k = 0; k < solutions.size(); ++k) {
    RankedEntry e;
    e.selection = solutions[k];
    e.proxy_objective = objective(instance, e.selection);
    e.cost_ms = cost(instance, e.selection);
    if (measured) e.measured = (*measured)[k];
    e.input_index = k;
    out.entries.push_back(std::move(e));
  }
  const bool by_measured = out.by_measured;
  std::stable_sort(out.entries.begin(), out.entries.end(),
                   [by_measured](const RankedEntry& a, const RankedEntry& b) {
                     const double ka = by_measured ? *a.measured : a.proxy_objective;
                     const double kb = by_measured ? *b.measured : b.proxy_objective;
                     if (ka != kb) return ka < kb;
                     if (a.cost_ms != b.cost_ms) return a.cost_ms < b.cost_ms;
                     return a.selection < b.selection;
                   });
  return out;
}

namespace {

// Pairs within runs of equal values in a sorted range.
template <typename It, typename Eq>
std::int64_t tied_pairs(It first, It last, Eq eq) {
  std::int64_t total = 0;
  while (first != last) {
    It run = first;
    std::int64_t len = 0;
    while (run != last && eq(*first, *run)) {
      ++run;
      ++len;
    }
    total += len * (len - 1) / 2;
    first = run;
  }
  return total;
}

// Sorts `v` ascending and returns the number of inversions removed.
std::int64_t merge_count(std::vector<double>& v, std::vector<double>& tmp, std::size_t lo,
                         std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = merge_count(v, tmp, lo, mid) + merge_count(v, tmp, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<std::int64_t>(mid - i);
      tmp[k++] = v[j++];
    } else {
      tmp[k++] = v[i++];
    }
  }
  while (i < mid) tmp[k++] = v[i++];
  while (j < hi) tmp[k++] = v[j++];
  std::copy(tmp.begin() + static_cast<std::ptrdiff_t>(lo), tmp.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

}  // namespace

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw InvalidArgument("kendall_tau: lengths differ (" + std::to_string(x.size()) + " vs " +
                          std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) throw InvalidArgument("kendall_tau: need at least 2 observations");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::isnan(x[i]) || std::isnan(y[i])) throw InvalidArgument("kendall_tau: NaN input");
  }

  const std::size_t n = x.size();
  std::vector<std::pair<double, double>> pairs(n);
  for (std::size_t i = 0; i < n; ++i) pairs[i] = {x[i], y[i]};
  std::sort(pairs.begin(), pairs.end());

  const auto n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const std::int64_t tx =
      tied_pairs(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.first == b.first; });
  const std::int64_t txy = tied_pairs(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a == b; });

  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = pairs[i].second;
  std::vector<double> tmp(n);
  const std::int64_t discordant = merge_count(ys, tmp, 0, n);
  const std::int64_t ty = tied_pairs(ys.begin(), ys.end(), [](double a, double b) { return a == b; });

  if (tx == n0 || ty == n0) throw DegenerateRanking("kendall_tau: one input is entirely tied");
  const std::int64_t s = n0 - tx - ty + txy - 2 * discordant;
  return static_cast<double>(s) /
         std::sqrt(static_cast<double>(n0 - tx) * static_cast<double>(n0 - ty));
}

OpHistogram selection_histogram(const SearchInstance& instance, std::span<const Selection> solutions) {
  OpHistogram h;
  for (const auto& sel : solutions) {
    check_selection(instance, sel);
    for (std::size_t i = 0; i < sel.size(); ++i) {
      ++h.counts[instance.layers[i].ops[sel.choices[i]].op_id];
    }
    h.total_slots += sel.size();
  }
  return h;
}

MeasuredScores parse_measured(std::string_view text) {
  using json = nlohmann::ordered_json;
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("syntax error: ") + e.what(), e.byte);
  }
  auto field = [](const json& obj, const char* key, const std::string& where) -> const json& {
    if (!obj.is_object() || !obj.contains(key)) {
      throw SchemaError(where + ": missing required field '" + key + "'", key);
    }
    return obj.at(key);
  };
  MeasuredScores out;
  const json& name = field(doc, "instance", "measured");
  if (!name.is_string()) throw SchemaError("field 'instance' must be a string", "instance");
  out.instance = name.get<std::string>();
  const json& entries = field(doc, "entries", "measured");
  if (!entries.is_array()) throw SchemaError("field 'entries' must be an array", "entries");
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const std::string at = "entries[" + std::to_string(k) + "]";
    MeasuredEntry e;
    const json& choices = field(entries[k], "choices", at);
    if (!choices.is_array()) throw SchemaError(at + ": 'choices' must be an array", "choices");
    for (const auto& c : choices) {
      if (!c.is_number_unsigned()) {
        throw SchemaError(at + ": 'choices' must hold non-negative integers", "choices");
      }
      e.selection.choices.push_back(c.get<std::size_t>());
    }
    const json& m = field(entries[k], "measured", at);
    if (!m.is_number()) throw SchemaError(at + ": 'measured' must be a number", "measured");
    e.measured = m.get<double>();
    if (const auto it = entries[k].find("budget_ratio"); it != entries[k].end()) {
      if (!it->is_number()) throw SchemaError(at + ": 'budget_ratio' must be a number", "budget_ratio");
      e.budget_ratio = it->get<double>();
    }
    out.entries.push_back(std::move(e));
  }
  return out;
}

std::string write_measured(const MeasuredScores& scores) {
  std::ostringstream out;
  out << "{\n  \"instance\": " << nlohmann::json(scores.instance).dump() << ",\n  \"entries\": [";
  for (std::size_t k = 0; k < scores.entries.size(); ++k) {
    const auto& e = scores.entries[k];
    out << (k ? ",\n" : "\n") << "    {\"choices\": [";
    for (std::size_t i = 0; i < e.selection.size(); ++i) out << (i ? ", " : "") << e.selection.choices[i];
    out << "], \"measured\": " << format_real(e.measured);
    if (e.budget_ratio) out << ", \"budget_ratio\": " << format_real(*e.budget_ratio);
    out << "}";
  }
  out << (scores.entries.empty() ? "]\n}\n" : "\n  ]\n}\n");
  return out.str();
}

std::vector<BudgetMeasurements> group_by_budget(const MeasuredScores& scores) {
  std::vector<BudgetMeasurements> groups;
  for (const auto& e : scores.entries) {
    const double ratio = e.budget_ratio.value_or(0.0);
    auto it = std::find_if(groups.begin(), groups.end(),
                           [ratio](const BudgetMeasurements& g) { return g.ratio == ratio; });
    if (it == groups.end()) {
      groups.push_back({ratio, {}, {}});
      it = std::prev(groups.end());
    }
    it->architectures.push_back(e.selection);
    it->measured.push_back(e.measured);
  }
  return groups;
}

CorrelationReport proxy_correlation_report(const SearchInstance& instance,
                                           std::span<const BudgetMeasurements> budgets) {
  CorrelationReport report;
  std::vector<double> all_proxy;
  std::vector<double> all_measured;
  for (const auto& b : budgets) {
    if (b.architectures.size() != b.measured.size()) {
      throw InvalidArgument("budget " + format_real(b.ratio) + ": architecture/measured count mismatch");
    }
    if (b.architectures.size() < 2) {
      throw InvalidArgument("budget " + format_real(b.ratio) + ": need at least 2 architectures");
    }
    std::vector<double> proxy;
    for (const auto& sel : b.architectures) proxy.push_back(objective(instance, sel));
    report.per_budget.push_back({b.ratio, proxy.size(), kendall_tau(proxy, b.measured)});
    all_proxy.insert(all_proxy.end(), proxy.begin(), proxy.end());
    all_measured.insert(all_measured.end(), b.measured.begin(), b.measured.end());
  }
  report.pooled_count = all_proxy.size();
  if (all_proxy.size() >= 2) report.pooled_tau = kendall_tau(all_proxy, all_measured);
  return report;
}

std::vector<Selection> architectures_for_ratio(const SearchInstance& instance, double ratio,
                                               std::size_t count, ArchitectureSource source,
                                               std::uint64_t seed) {
  const Budget budget = budget_from_ratio(instance, ratio);
  std::vector<Selection> out;
  if (source == ArchitectureSource::ilp) {
    for (auto& s : solve_k_diverse(instance, budget, count, 0.7).solutions) {
      out.push_back(std::move(s.selection));
    }
  } else {
    SamplerConfig config;
    config.seed = seed;
    for (auto& s : random_search(instance, budget, count, config).population) {
      out.push_back(std::move(s.selection));
    }
  }
  return out;
}

}  // namespace lana
