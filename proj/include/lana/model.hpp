#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lana {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A selection that does not fit the instance it is used with.
class InvalidSelection : public Error {
 public:
  using Error::Error;
};

/// One replacement candidate for a teacher layer.
///
/// `score_delta` is the change in training loss relative to the teacher when
/// this op alone replaces the teacher op; `cost` is latency in milliseconds.
struct CandidateOp {
  std::string op_id;
  double score_delta = 0.0;
  double cost = 0.0;
  std::vector<std::string> tags;

  bool has_tag(const std::string& tag) const;
  bool operator==(const CandidateOp&) const = default;
};

struct LayerTable {
  std::size_t layer_index = 0;
  std::vector<CandidateOp> ops;
  std::size_t teacher_index = 0;

  const CandidateOp& teacher() const { return ops.at(teacher_index); }
  bool operator==(const LayerTable&) const = default;
};

struct SearchInstance {
  std::string name;
  std::vector<LayerTable> layers;
  std::string cost_unit = "ms";

  std::size_t num_layers() const { return layers.size(); }
  bool operator==(const SearchInstance&) const = default;
};

/// One architecture: the chosen op index for every layer.
struct Selection {
  std::vector<std::size_t> choices;

  std::size_t size() const { return choices.size(); }
  auto operator<=>(const Selection&) const = default;
};

/// Latency budget in milliseconds.
struct Budget {
  double limit_ms = 0.0;
};

struct Violation {
  std::optional<std::size_t> layer;
  std::string field;
  std::string message;

  std::string to_string() const;
};

/// Tolerance on the teacher entry's score_delta.
inline constexpr double kTeacherDeltaTolerance = 1e-9;

/// Lists every broken invariant; empty iff the instance is well formed.
std::vector<Violation> validate_instance(const SearchInstance& instance);

double teacher_cost(const SearchInstance& instance);
Selection teacher_selection(const SearchInstance& instance);

/// Throws InvalidSelection unless `sel` has one valid op index per layer.
void check_selection(const SearchInstance& instance, const Selection& sel);

/// Sum of the chosen ops' score deltas, accumulated in layer order.
double objective(const SearchInstance& instance, const Selection& sel);

/// Sum of the chosen ops' latency in ms, accumulated in layer order.
double cost(const SearchInstance& instance, const Selection& sel);

/// Number of layers where both selections chose the same op index.
std::size_t overlap(const Selection& a, const Selection& b);

/// `ratio` times the teacher's total latency.
Budget budget_from_ratio(const SearchInstance& instance, double ratio);

}  // namespace lana
