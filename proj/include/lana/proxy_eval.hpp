#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lana/model.hpp"

namespace lana {

struct RankedEntry {
  Selection selection;
  double proxy_objective = 0.0;
  std::optional<double> measured;
  double cost_ms = 0.0;
  /// Position of this entry in the input list.
  std::size_t input_index = 0;
};

struct RankedCandidates {
  std::vector<RankedEntry> entries;
  /// True when sorted by measured score, false when by proxy objective.
  bool by_measured = false;
};

/// Sorts candidates ascending by measured score when given, else by proxy
/// objective. Ties go to lower cost, then the lexicographically smaller
/// choice vector.
RankedCandidates rank_candidates(const SearchInstance& instance, std::span<const Selection> solutions,
                                 const std::optional<std::vector<double>>& measured = std::nullopt);

/// Every value of one input is tied, so tau-b is undefined.
class DegenerateRanking : public Error {
 public:
  using Error::Error;
};

/// Tie-corrected Kendall tau-b in O(n log n) (Knight's merge-sort method).
double kendall_tau(std::span<const double> x, std::span<const double> y);

struct OpHistogram {
  std::map<std::string, std::size_t> counts;
  std::size_t total_slots = 0;
};

/// Counts each op_id over all (solution, layer) slots.
OpHistogram selection_histogram(const SearchInstance& instance, std::span<const Selection> solutions);

/// Externally measured score of one architecture.
struct MeasuredEntry {
  Selection selection;
  double measured = 0.0;
  std::optional<double> budget_ratio;
};

struct MeasuredScores {
  std::string instance;
  std::vector<MeasuredEntry> entries;
};

MeasuredScores parse_measured(std::string_view text);
std::string write_measured(const MeasuredScores& scores);

struct BudgetMeasurements {
  double ratio = 1.0;
  std::vector<Selection> architectures;
  std::vector<double> measured;
};

struct CorrelationRow {
  double ratio = 0.0;
  std::size_t count = 0;
  double tau = 0.0;
};

struct CorrelationReport {
  std::vector<CorrelationRow> per_budget;
  /// Tau over the architectures of all budgets together.
  double pooled_tau = 0.0;
  std::size_t pooled_count = 0;
};

/// Kendall tau-b between proxy objective and measured score, per budget
/// and pooled.
CorrelationReport proxy_correlation_report(const SearchInstance& instance,
                                           std::span<const BudgetMeasurements> budgets);

/// Groups measured entries by budget_ratio (entries without one share the
/// group with ratio 0).
std::vector<BudgetMeasurements> group_by_budget(const MeasuredScores& scores);

enum class ArchitectureSource { ilp, random };

/// Architectures to pair with measured scores at one budget ratio: the
/// k-diverse ILP solutions (overlap 0.7) or a seeded random population.
std::vector<Selection> architectures_for_ratio(const SearchInstance& instance, double ratio,
                                               std::size_t count, ArchitectureSource source,
                                               std::uint64_t seed = 0);

}  // namespace lana
