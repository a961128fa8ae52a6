#include "lana/lut_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace lana {

using json = nlohmann::ordered_json;

ValidationError::ValidationError(std::vector<Violation> v)
    : Error([&] {
        std::string msg = "instance has " + std::to_string(v.size()) + " violation(s)";
        for (const auto& x : v) msg += "\n  " + x.to_string();
        return msg;
      }()),
      violations(std::move(v)) {}

std::string format_real(double value) {
  if (!std::isfinite(value)) throw InvalidArgument("cannot serialize a non-finite number");
  if (value == 0.0) return "0";
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw Error("number formatting failed");
  return {buf.data(), end};
}

namespace {

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("syntax error: ") + e.what(), e.byte);
  }
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw SchemaError(where + " must be an object", where);
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw SchemaError(where + ": missing required field '" + key + "'", key);
  }
  return *it;
}

std::string as_string(const json& v, const char* key, const std::string& where) {
  if (!v.is_string()) throw SchemaError(where + ": field '" + key + "' must be a string", key);
  return v.get<std::string>();
}

double as_number(const json& v, const char* key, const std::string& where) {
  if (!v.is_number()) throw SchemaError(where + ": field '" + key + "' must be a number", key);
  return v.get<double>();
}

std::size_t as_index(const json& v, const char* key, const std::string& where) {
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::size_t>();
  throw SchemaError(where + ": field '" + key + "' must be a non-negative integer", key);
}

bool as_bool(const json& v, const char* key, const std::string& where) {
  if (!v.is_boolean()) throw SchemaError(where + ": field '" + key + "' must be a boolean", key);
  return v.get<bool>();
}

const json& as_array(const json& v, const char* key, const std::string& where) {
  if (!v.is_array()) throw SchemaError(where + ": field '" + key + "' must be an array", key);
  return v;
}

std::string quote(const std::string& s) { return json(s).dump(); }

}  // namespace

InstanceFile parse_instance_file_unchecked(std::string_view text) {
  const json doc = parse_json(text);
  const std::string top = "document";
  InstanceFile file;

  const json& version = require(doc, "format_version", top);
  if (!version.is_number_integer() || version.get<std::int64_t>() != 1) {
    throw SchemaError("unsupported format_version (expected 1)", "format_version");
  }
  file.format_version = 1;
  file.instance.name = as_string(require(doc, "name", top), "name", top);
  if (const auto it = doc.find("cost_unit"); it != doc.end()) {
    file.instance.cost_unit = as_string(*it, "cost_unit", top);
  }
  bool absolute = false;
  if (const auto it = doc.find("scores_absolute"); it != doc.end()) {
    absolute = as_bool(*it, "scores_absolute", top);
  }
  if (const auto it = doc.find("provenance"); it != doc.end()) {
    if (!it->is_object()) throw SchemaError("field 'provenance' must be an object", "provenance");
    file.provenance = *it;
  }

  const json& layers = as_array(require(doc, "layers", top), "layers", top);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string where = "layers[" + std::to_string(i) + "]";
    const json& l = layers[i];
    LayerTable layer;
    layer.layer_index = as_index(require(l, "layer_index", where), "layer_index", where);
    layer.teacher_index = as_index(require(l, "teacher_index", where), "teacher_index", where);
    const json& ops = as_array(require(l, "ops", where), "ops", where);
    for (std::size_t j = 0; j < ops.size(); ++j) {
      const std::string at = where + ".ops[" + std::to_string(j) + "]";
      const json& o = ops[j];
      CandidateOp op;
      op.op_id = as_string(require(o, "op_id", at), "op_id", at);
      op.score_delta = as_number(require(o, "score_delta", at), "score_delta", at);
      op.cost = as_number(require(o, "cost", at), "cost", at);
      if (const auto it = o.find("tags"); it != o.end()) {
        for (const auto& t : as_array(*it, "tags", at)) op.tags.push_back(as_string(t, "tags", at));
      }
      layer.ops.push_back(std::move(op));
    }
    if (absolute && layer.teacher_index < layer.ops.size()) {
      const double reference = layer.ops[layer.teacher_index].score_delta;
      for (auto& op : layer.ops) op.score_delta -= reference;
    }
    file.instance.layers.push_back(std::move(layer));
  }
  return file;
}

InstanceFile parse_instance_file(std::string_view text) {
  InstanceFile file = parse_instance_file_unchecked(text);
  if (auto v = validate_instance(file.instance); !v.empty()) throw ValidationError(std::move(v));
  return file;
}

SearchInstance parse_instance(std::string_view text) {
  return parse_instance_file(text).instance;
}

std::string write_instance(const InstanceFile& file) {
  const auto& inst = file.instance;
  std::ostringstream out;
  out << "{\n";
  out << "  \"format_version\": " << file.format_version << ",\n";
  out << "  \"name\": " << quote(inst.name) << ",\n";
  out << "  \"cost_unit\": " << quote(inst.cost_unit) << ",\n";
  out << "  \"provenance\": " << file.provenance.dump() << ",\n";
  out << "  \"layers\": [";
  for (std::size_t i = 0; i < inst.layers.size(); ++i) {
    const auto& layer = inst.layers[i];
    out << (i ? ",\n" : "\n");
    out << "    {\"layer_index\": " << layer.layer_index
        << ", \"teacher_index\": " << layer.teacher_index << ", \"ops\": [";
    for (std::size_t j = 0; j < layer.ops.size(); ++j) {
      const auto& op = layer.ops[j];
      out << (j ? ",\n" : "\n");
      out << "      {\"op_id\": " << quote(op.op_id)
          << ", \"score_delta\": " << format_real(op.score_delta)
          << ", \"cost\": " << format_real(op.cost);
      if (!op.tags.empty()) {
        out << ", \"tags\": [";
        for (std::size_t t = 0; t < op.tags.size(); ++t) {
          out << (t ? ", " : "") << quote(op.tags[t]);
        }
        out << "]";
      }
      out << "}";
    }
    out << "\n    ]}";
  }
  out << "\n  ]\n}\n";
  return out.str();
}

std::string write_instance(const SearchInstance& instance) {
  InstanceFile file;
  file.instance = instance;
  return write_instance(file);
}

std::string write_report(const SolveReport& report) {
  std::ostringstream out;
  out << "{\n";
  out << "  \"instance\": " << quote(report.instance) << ",\n";
  out << "  \"budget_ms\": " << format_real(report.budget_ms) << ",\n";
  out << "  \"overlap_limit\": " << report.overlap_limit << ",\n";
  out << "  \"solutions\": [";
  for (std::size_t k = 0; k < report.solutions.size(); ++k) {
    const auto& s = report.solutions[k];
    out << (k ? ",\n" : "\n");
    out << "    {\"choices\": [";
    for (std::size_t i = 0; i < s.selection.choices.size(); ++i) {
      out << (i ? ", " : "") << s.selection.choices[i];
    }
    out << "], \"objective\": " << format_real(s.objective)
        << ", \"cost_ms\": " << format_real(s.cost_ms)
        << ", \"status\": " << quote(to_string(s.status))
        << ", \"gap\": " << format_real(s.gap) << "}";
  }
  out << (report.solutions.empty() ? "],\n" : "\n  ],\n");
  out << "  \"wall_time_s\": " << format_real(report.wall_time_s) << "\n";
  out << "}\n";
  return out.str();
}

SolveReport parse_report(std::string_view text) {
  const json doc = parse_json(text);
  const std::string top = "report";
  SolveReport report;
  report.instance = as_string(require(doc, "instance", top), "instance", top);
  report.budget_ms = as_number(require(doc, "budget_ms", top), "budget_ms", top);
  report.overlap_limit = as_index(require(doc, "overlap_limit", top), "overlap_limit", top);
  const json& sols = as_array(require(doc, "solutions", top), "solutions", top);
  for (std::size_t k = 0; k < sols.size(); ++k) {
    const std::string at = "solutions[" + std::to_string(k) + "]";
    const json& s = sols[k];
    SolveResult r;
    for (const auto& c : as_array(require(s, "choices", at), "choices", at)) {
      r.selection.choices.push_back(as_index(c, "choices", at));
    }
    r.objective = as_number(require(s, "objective", at), "objective", at);
    r.cost_ms = as_number(require(s, "cost_ms", at), "cost_ms", at);
    try {
      r.status = parse_status(as_string(require(s, "status", at), "status", at));
    } catch (const InvalidArgument& e) {
      throw SchemaError(at + ": " + e.what(), "status");
    }
    r.gap = as_number(require(s, "gap", at), "gap", at);
    report.solutions.push_back(std::move(r));
  }
  report.wall_time_s = as_number(require(doc, "wall_time_s", top), "wall_time_s", top);
  return report;
}

std::string to_string(Metric metric) {
  return metric == Metric::latency_ms ? "latency_ms" : "loss_delta";
}

double lower_median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("median of an empty sample group");
  const std::size_t mid = (values.size() - 1) / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  return values[mid];
}

std::map<SampleKey, double> aggregate_samples(const std::vector<MeasurementSample>& samples) {
  std::map<SampleKey, std::vector<double>> groups;
  for (const auto& s : samples) {
    const SampleKey key{s.layer_index, s.op_id, s.metric};
    if (s.values.empty()) {
      throw InvalidArgument("sample for layer " + std::to_string(s.layer_index) + " op '" +
                            s.op_id + "' has no values");
    }
    for (double v : s.values) {
      if (!std::isfinite(v)) {
        throw InvalidArgument("sample for layer " + std::to_string(s.layer_index) + " op '" +
                              s.op_id + "' has a non-finite value");
      }
    }
    auto& g = groups[key];
    g.insert(g.end(), s.values.begin(), s.values.end());
  }
  std::map<SampleKey, double> out;
  for (auto& [key, values] : groups) out.emplace(key, lower_median(std::move(values)));
  return out;
}

SearchInstance restrict_pool(const SearchInstance& instance, const OpPredicate& keep) {
  SearchInstance out;
  out.name = instance.name;
  out.cost_unit = instance.cost_unit;
  std::vector<std::size_t> dropped_teacher;
  for (const auto& layer : instance.layers) {
    LayerTable kept;
    kept.layer_index = layer.layer_index;
    bool teacher_kept = false;
    for (std::size_t j = 0; j < layer.ops.size(); ++j) {
      if (!keep(layer.ops[j])) continue;
      if (j == layer.teacher_index) {
        kept.teacher_index = kept.ops.size();
        teacher_kept = true;
      }
      kept.ops.push_back(layer.ops[j]);
    }
    if (!teacher_kept) dropped_teacher.push_back(layer.layer_index);
    out.layers.push_back(std::move(kept));
  }
  if (!dropped_teacher.empty()) {
    std::string msg = "pool restriction drops the teacher op at layer(s)";
    for (auto i : dropped_teacher) msg += " " + std::to_string(i);
    throw InvalidArgument(msg);
  }
  return out;
}

SearchInstance zero_shot_pool(const SearchInstance& instance, const std::string& identity_id,
                              bool allow_missing) {
  std::vector<std::size_t> missing;
  std::set<const CandidateOp*> teachers;
  for (const auto& layer : instance.layers) {
    teachers.insert(&layer.teacher());
    const bool has = std::any_of(layer.ops.begin(), layer.ops.end(),
                                 [&](const CandidateOp& op) { return op.op_id == identity_id; });
    if (!has) missing.push_back(layer.layer_index);
  }
  if (!missing.empty() && !allow_missing) {
    std::string msg = "op '" + identity_id + "' missing at layer(s)";
    for (auto i : missing) msg += " " + std::to_string(i);
    throw InvalidArgument(msg);
  }
  // restrict_pool hands out references into `instance`, so the teacher can be
  // recognised by address even when its op_id is shared with other layers.
  return restrict_pool(instance, [&](const CandidateOp& op) {
    return op.op_id == identity_id || teachers.contains(&op);
  });
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace lana
