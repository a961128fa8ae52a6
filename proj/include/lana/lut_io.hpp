#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "lana/model.hpp"
#include "lana/solver.hpp"

namespace lana {

/// Malformed JSON; `offset` is the byte position reported by the parser.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset) : Error(what), offset(offset) {}
  std::size_t offset;
};

/// Well-formed JSON that does not follow the document schema.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& what, std::string field) : Error(what), field(std::move(field)) {}
  std::string field;
};

/// A document that parsed but describes an instance breaking its invariants.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations);
  std::vector<Violation> violations;
};

struct InstanceFile {
  int format_version = 1;
  SearchInstance instance;
  nlohmann::ordered_json provenance = nlohmann::ordered_json::object();

  bool operator==(const InstanceFile&) const = default;
};

/// Parses an instance document without running the validator.
InstanceFile parse_instance_file_unchecked(std::string_view text);

/// Parses and validates an instance document. Absolute scores
/// ("scores_absolute": true) are turned into deltas against each layer's
/// teacher entry.
InstanceFile parse_instance_file(std::string_view text);
SearchInstance parse_instance(std::string_view text);

/// Canonical, deterministic text for an instance document. Reals use the
/// shortest representation that parses back to the same double; -0 is
/// written as 0.
std::string write_instance(const InstanceFile& file);
std::string write_instance(const SearchInstance& instance);

std::string write_report(const SolveReport& report);
SolveReport parse_report(std::string_view text);

/// Shortest round-trip decimal text for a finite double; "0" for -0.
std::string format_real(double value);

enum class Metric { latency_ms, loss_delta };

std::string to_string(Metric metric);

/// Repeated raw observations of one op at one layer.
struct MeasurementSample {
  std::string op_id;
  std::size_t layer_index = 0;
  Metric metric = Metric::latency_ms;
  std::vector<double> values;
};

struct SampleKey {
  std::size_t layer_index;
  std::string op_id;
  Metric metric;

  auto operator<=>(const SampleKey&) const = default;
};

/// Median of all values sharing a (layer, op, metric) key; the lower of
/// the two middle values when the count is even.
std::map<SampleKey, double> aggregate_samples(const std::vector<MeasurementSample>& samples);

/// Lower median of a non-empty list.
double lower_median(std::vector<double> values);

using OpPredicate = std::function<bool(const CandidateOp&)>;

/// Copy of `instance` keeping only ops accepted by `keep`. The teacher op of
/// every layer must be kept.
SearchInstance restrict_pool(const SearchInstance& instance, const OpPredicate& keep);

/// Teacher plus the op named `identity_id` at every layer. Layers without
/// that op throw InvalidArgument naming them, unless `allow_missing` keeps
/// them teacher-only.
SearchInstance zero_shot_pool(const SearchInstance& instance, const std::string& identity_id,
                              bool allow_missing = false);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace lana
