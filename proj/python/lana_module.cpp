#include <pybind11/functional.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lana/baselines.hpp"
#include "lana/lut_io.hpp"
#include "lana/proxy_eval.hpp"
#include "lana/solver.hpp"

namespace py = pybind11;
using namespace lana;

namespace {

SolverConfig make_config(double time_limit_s, double gap_tolerance, std::optional<std::uint64_t> node_limit,
                         unsigned threads) {
  SolverConfig c;
  c.time_limit_s = time_limit_s;
  c.gap_tolerance = gap_tolerance;
  c.node_limit = node_limit;
  c.threads = threads;
  return c;
}

std::string selection_repr(const Selection& s) {
  std::string r = "Selection([";
  for (std::size_t i = 0; i < s.choices.size(); ++i) r += (i ? ", " : "") + std::to_string(s.choices[i]);
  return r + "])";
}

}  // namespace

PYBIND11_MODULE(_lana, m) {
  m.doc() = "Latency-constrained architecture search over per-layer lookup tables";

  auto error = py::register_exception<Error>(m, "LanaError");
  py::register_exception<InvalidArgument>(m, "InvalidArgument", error);
  py::register_exception<InvalidSelection>(m, "InvalidSelection", error);
  py::register_exception<ParseError>(m, "ParseError", error);
  py::register_exception<SchemaError>(m, "SchemaError", error);
  py::register_exception<ValidationError>(m, "ValidationError", error);
  py::register_exception<DegenerateRanking>(m, "DegenerateRanking", error);
  py::register_exception<SamplingFailure>(m, "SamplingFailure", error);

  py::class_<CandidateOp>(m, "CandidateOp")
      .def(py::init<std::string, double, double, std::vector<std::string>>(), py::arg("op_id"),
           py::arg("score_delta"), py::arg("cost"), py::arg("tags") = std::vector<std::string>{})
      .def_readwrite("op_id", &CandidateOp::op_id)
      .def_readwrite("score_delta", &CandidateOp::score_delta)
      .def_readwrite("cost", &CandidateOp::cost)
      .def_readwrite("tags", &CandidateOp::tags)
      .def("has_tag", &CandidateOp::has_tag)
      .def(py::self == py::self)
      .def("__repr__", [](const CandidateOp& op) {
        return "CandidateOp('" + op.op_id + "', " + format_real(op.score_delta) + ", " + format_real(op.cost) + ")";
      });

  py::class_<LayerTable>(m, "LayerTable")
      .def(py::init<std::size_t, std::vector<CandidateOp>, std::size_t>(), py::arg("layer_index"), py::arg("ops"),
           py::arg("teacher_index"))
      .def_readwrite("layer_index", &LayerTable::layer_index)
      .def_readwrite("ops", &LayerTable::ops)
      .def_readwrite("teacher_index", &LayerTable::teacher_index)
      .def(py::self == py::self);

  py::class_<SearchInstance>(m, "SearchInstance")
      .def(py::init<>())
      .def(py::init([](std::string name, std::vector<LayerTable> layers) {
             SearchInstance s;
             s.name = std::move(name);
             s.layers = std::move(layers);
             return s;
           }),
           py::arg("name"), py::arg("layers"))
      .def_readwrite("name", &SearchInstance::name)
      .def_readwrite("layers", &SearchInstance::layers)
      .def_readwrite("cost_unit", &SearchInstance::cost_unit)
      .def_property_readonly("num_layers", &SearchInstance::num_layers)
      .def(py::self == py::self);

  py::class_<Selection>(m, "Selection")
      .def(py::init([](std::vector<std::size_t> c) { return Selection{std::move(c)}; }), py::arg("choices"))
      .def_readwrite("choices", &Selection::choices)
      .def(py::self == py::self)
      .def(py::self < py::self)
      .def("__len__", [](const Selection& s) { return s.choices.size(); })
      .def("__hash__", [](const Selection& s) { return py::hash(py::tuple(py::cast(s.choices))); })
      .def("__repr__", &selection_repr);
  py::implicitly_convertible<py::list, Selection>();

  py::enum_<SolveStatus>(m, "SolveStatus")
      .value("optimal", SolveStatus::optimal)
      .value("feasible", SolveStatus::feasible)
      .value("infeasible", SolveStatus::infeasible)
      .value("timeout", SolveStatus::timeout)
      .def("__str__", [](SolveStatus s) { return to_string(s); });

  py::class_<SolveResult>(m, "SolveResult")
      .def_readonly("selection", &SolveResult::selection)
      .def_readonly("objective", &SolveResult::objective)
      .def_readonly("cost_ms", &SolveResult::cost_ms)
      .def_readonly("status", &SolveResult::status)
      .def_readonly("gap", &SolveResult::gap)
      .def_readonly("nodes_explored", &SolveResult::nodes_explored)
      .def("has_solution", &SolveResult::has_solution);

  py::class_<SolveReport>(m, "SolveReport")
      .def_readonly("instance", &SolveReport::instance)
      .def_readonly("budget_ms", &SolveReport::budget_ms)
      .def_readonly("overlap_limit", &SolveReport::overlap_limit)
      .def_readonly("solutions", &SolveReport::solutions)
      .def_readwrite("wall_time_s", &SolveReport::wall_time_s);

  // Instance files
  m.def("parse_instance", [](const std::string& text) { return parse_instance(text); }, py::arg("text"));
  m.def("load_instance", [](const std::string& path) { return parse_instance(read_file(path)); }, py::arg("path"));
  m.def("write_instance", py::overload_cast<const SearchInstance&>(&write_instance), py::arg("instance"));
  m.def(
      "validate_instance",
      [](const SearchInstance& inst) {
        std::vector<std::string> out;
        for (const auto& v : validate_instance(inst)) out.push_back(v.to_string());
        return out;
      },
      py::arg("instance"), "Violation messages; empty when the instance is well formed.");
  m.def("restrict_pool", &restrict_pool, py::arg("instance"), py::arg("keep"));
  m.def("zero_shot_pool", &zero_shot_pool, py::arg("instance"), py::arg("identity_id") = "identity",
        py::arg("allow_missing") = false);
  m.def("write_report", &write_report, py::arg("report"));
  m.def("parse_report", [](const std::string& text) { return parse_report(text); }, py::arg("text"));

  // Model
  m.def("teacher_cost", &teacher_cost, py::arg("instance"));
  m.def("teacher_selection", &teacher_selection, py::arg("instance"));
  m.def("objective", &objective, py::arg("instance"), py::arg("selection"));
  m.def("cost", &cost, py::arg("instance"), py::arg("selection"));
  m.def("overlap", &overlap, py::arg("a"), py::arg("b"));
  m.def(
      "budget_from_ratio", [](const SearchInstance& inst, double r) { return budget_from_ratio(inst, r).limit_ms; },
      py::arg("instance"), py::arg("ratio"), "Budget in ms for a fraction of the teacher's total cost.");

  // Solver
  m.def("overlap_limit_for", &overlap_limit_for, py::arg("num_layers"), py::arg("fraction"));
  m.def(
      "solve",
      [](const SearchInstance& inst, double budget_ms, const std::vector<Selection>& prior,
         std::optional<std::size_t> overlap_limit, double time_limit_s, double gap_tolerance,
         std::optional<std::uint64_t> node_limit, unsigned threads) {
        const auto cfg = make_config(time_limit_s, gap_tolerance, node_limit, threads);
        py::gil_scoped_release release;
        return solve(inst, Budget{budget_ms}, prior, overlap_limit.value_or(inst.num_layers()), cfg);
      },
      py::arg("instance"), py::arg("budget_ms"), py::arg("prior") = std::vector<Selection>{},
      py::arg("overlap_limit") = py::none(), py::arg("time_limit_s") = 60.0, py::arg("gap_tolerance") = 0.0,
      py::arg("node_limit") = py::none(), py::arg("threads") = 1);
  m.def(
      "solve_k_diverse",
      [](const SearchInstance& inst, double budget_ms, std::size_t k, double overlap, double time_limit_s,
         double gap_tolerance, unsigned threads) {
        const auto cfg = make_config(time_limit_s, gap_tolerance, std::nullopt, threads);
        py::gil_scoped_release release;
        return solve_k_diverse(inst, Budget{budget_ms}, k, overlap, cfg);
      },
      py::arg("instance"), py::arg("budget_ms"), py::arg("k") = 1, py::arg("overlap") = 0.7,
      py::arg("time_limit_s") = 60.0, py::arg("gap_tolerance") = 0.0, py::arg("threads") = 1);

  // Baselines
  m.def(
      "random_search",
      [](const SearchInstance& inst, double budget_ms, std::size_t n, std::uint64_t seed,
         std::size_t max_attempts, unsigned threads) {
        SamplerConfig cfg;
        cfg.seed = seed;
        cfg.max_attempts_per_sample = max_attempts;
        cfg.threads = threads;
        RandomSearchResult rs;
        {
          py::gil_scoped_release release;
          rs = random_search(inst, Budget{budget_ms}, n, cfg);
        }
        py::list pop;
        for (const auto& s : rs.population) {
          pop.append(py::make_tuple(s.sample_index, s.selection, s.objective, s.cost_ms));
        }
        py::dict out;
        out["best"] = rs.best;
        out["best_objective"] = rs.best_objective;
        out["population"] = pop;
        out["failures"] = rs.failures;
        return out;
      },
      py::arg("instance"), py::arg("budget_ms"), py::arg("n") = 1000, py::arg("seed") = 0,
      py::arg("max_attempts") = 10000, py::arg("threads") = 1,
      "Seeded random feasible samples; population holds (index, selection, objective, cost_ms).");

  // Proxy evaluation
  m.def("kendall_tau", [](const std::vector<double>& x, const std::vector<double>& y) { return kendall_tau(x, y); },
        py::arg("x"), py::arg("y"));
  m.def(
      "rank_candidates",
      [](const SearchInstance& inst, const std::vector<Selection>& sols,
         std::optional<std::vector<double>> measured) {
        py::list out;
        for (const auto& e : rank_candidates(inst, sols, measured).entries) {
          py::dict d;
          d["selection"] = e.selection;
          d["proxy_objective"] = e.proxy_objective;
          d["measured"] = e.measured;
          d["cost_ms"] = e.cost_ms;
          d["input_index"] = e.input_index;
          out.append(d);
        }
        return out;
      },
      py::arg("instance"), py::arg("solutions"), py::arg("measured") = py::none());
  m.def(
      "selection_histogram",
      [](const SearchInstance& inst, const std::vector<Selection>& sols) {
        return selection_histogram(inst, sols).counts;
      },
      py::arg("instance"), py::arg("solutions"));
  m.def(
      "proxy_correlation",
      [](const SearchInstance& inst, const std::vector<Selection>& sols, const std::vector<double>& measured) {
        std::vector<BudgetMeasurements> one{{1.0, sols, measured}};
        return proxy_correlation_report(inst, one).pooled_tau;
      },
      py::arg("instance"), py::arg("solutions"), py::arg("measured"),
      "Kendall tau between proxy objective and measured scores.");
}
