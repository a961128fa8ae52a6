#include "lana/model.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace lana {

bool CandidateOp::has_tag(const std::string& tag) const {
  return std::find(tags.begin(), tags.end(), tag) != tags.end();
}

std::string Violation::to_string() const {
  std::string out;
  if (layer) out += "layer " + std::to_string(*layer) + ": ";
  out += field + ": " + message;
  return out;
}

std::vector<Violation> validate_instance(const SearchInstance& instance) {
  std::vector<Violation> out;
  if (instance.layers.empty()) {
    out.push_back({std::nullopt, "layers", "instance has no layers"});
    return out;
  }
  if (instance.cost_unit != "ms") {
    out.push_back({std::nullopt, "cost_unit", "must be \"ms\", got \"" + instance.cost_unit + "\""});
  }

  bool teachers_ok = true;
  for (std::size_t i = 0; i < instance.layers.size(); ++i) {
    const auto& layer = instance.layers[i];
    if (layer.layer_index != i) {
      out.push_back({i, "layer_index",
                     "expected " + std::to_string(i) + ", got " + std::to_string(layer.layer_index)});
    }
    if (layer.ops.empty()) {
      out.push_back({i, "ops", "layer has no candidate ops"});
      teachers_ok = false;
      continue;
    }
    if (layer.teacher_index >= layer.ops.size()) {
      out.push_back({i, "teacher_index",
                     std::to_string(layer.teacher_index) + " is out of range for " +
                         std::to_string(layer.ops.size()) + " ops"});
      teachers_ok = false;
    } else if (const double d = layer.ops[layer.teacher_index].score_delta;
               !(std::abs(d) <= kTeacherDeltaTolerance)) {
      out.push_back({i, "score_delta", "teacher op '" + layer.ops[layer.teacher_index].op_id +
                                           "' must have score_delta 0, got " + std::to_string(d)});
    }

    std::unordered_set<std::string> seen;
    for (const auto& op : layer.ops) {
      if (!seen.insert(op.op_id).second) {
        out.push_back({i, "op_id", "duplicate op_id '" + op.op_id + "'"});
      }
      if (!std::isfinite(op.score_delta)) {
        out.push_back({i, "score_delta", "op '" + op.op_id + "' has a non-finite score_delta"});
      }
      if (!std::isfinite(op.cost) || op.cost < 0.0) {
        out.push_back({i, "cost", "op '" + op.op_id + "' must have a finite cost >= 0"});
      }
    }
  }

  if (teachers_ok && !(teacher_cost(instance) > 0.0)) {
    out.push_back({std::nullopt, "cost", "teacher total cost must be positive"});
  }
  return out;
}

double teacher_cost(const SearchInstance& instance) {
  double total = 0.0;
  for (const auto& layer : instance.layers) total += layer.teacher().cost;
  return total;
}

Selection teacher_selection(const SearchInstance& instance) {
  Selection sel;
  sel.choices.reserve(instance.layers.size());
  for (const auto& layer : instance.layers) sel.choices.push_back(layer.teacher_index);
  return sel;
}

void check_selection(const SearchInstance& instance, const Selection& sel) {
  if (sel.choices.size() != instance.layers.size()) {
    throw InvalidSelection("selection has " + std::to_string(sel.choices.size()) +
                           " choices for " + std::to_string(instance.layers.size()) + " layers");
  }
  for (std::size_t i = 0; i < sel.choices.size(); ++i) {
    if (sel.choices[i] >= instance.layers[i].ops.size()) {
      throw InvalidSelection("layer " + std::to_string(i) + ": op index " +
                             std::to_string(sel.choices[i]) + " out of range");
    }
  }
}

double objective(const SearchInstance& instance, const Selection& sel) {
  check_selection(instance, sel);
  double total = 0.0;
  for (std::size_t i = 0; i < sel.choices.size(); ++i) {
    total += instance.layers[i].ops[sel.choices[i]].score_delta;
  }
  return total;
}

double cost(const SearchInstance& instance, const Selection& sel) {
  check_selection(instance, sel);
  double total = 0.0;
  for (std::size_t i = 0; i < sel.choices.size(); ++i) {
    total += instance.layers[i].ops[sel.choices[i]].cost;
  }
  return total;
}

std::size_t overlap(const Selection& a, const Selection& b) {
  if (a.size() != b.size()) {
    throw InvalidArgument("overlap: selections have different lengths (" +
                          std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a.choices[i] == b.choices[i];
  return same;
}

Budget budget_from_ratio(const SearchInstance& instance, double ratio) {
  if (!(ratio > 0.0) || !std::isfinite(ratio)) {
    throw InvalidArgument("budget ratio must be a positive finite number");
  }
  return Budget{ratio * teacher_cost(instance)};
}

}  // namespace lana
