#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <sstream>

#include "CLI11.hpp"
#include "lana/baselines.hpp"
#include "lana/lut_io.hpp"
#include "lana/proxy_eval.hpp"
#include "lana/solver.hpp"

namespace lana::cli {
namespace {

constexpr std::size_t kMaxSolutions = 100;

struct BudgetFlags {
  double ratio = 0.0;
  double ms = 0.0;
  CLI::Option* ratio_opt = nullptr;
  CLI::Option* ms_opt = nullptr;

  void attach(CLI::App* cmd) {
    auto* group = cmd->add_option_group("budget", "exactly one of these");
    ratio_opt = group->add_option("--budget-ratio", ratio, "fraction of the teacher's total cost");
    ms_opt = group->add_option("--budget-ms", ms, "absolute budget in cost units");
    group->require_option(1);
  }

  Budget resolve(const SearchInstance& inst) const {
    if (ratio_opt->count()) return budget_from_ratio(inst, ratio);
    if (!(ms >= 0.0)) throw InvalidArgument("--budget-ms must be non-negative");
    return Budget{ms};
  }
};

struct SolveFlags {
  std::size_t k = 1;
  double overlap = 0.7;
  double time_limit = 60.0;
  double gap = 0.0;
  unsigned threads = 0;
  bool no_timing = false;

  void attach(CLI::App* cmd, bool with_k = true) {
    if (with_k) cmd->add_option("--k", k, "number of diverse solutions (capped at 100)");
    cmd->add_option("--overlap", overlap, "max fraction of layers shared with any earlier solution")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--time-limit", time_limit, "seconds per solve")->check(CLI::PositiveNumber);
    cmd->add_option("--gap-tolerance", gap, "accept solutions within this objective gap")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--threads", threads, "worker threads, 0 for all cores")->envname("LANA_THREADS");
    cmd->add_flag("--no-timing", no_timing, "write wall_time_s as 0 for byte-stable reports");
  }

  SolverConfig config() const {
    SolverConfig c;
    c.time_limit_s = time_limit;
    c.gap_tolerance = gap;
    c.threads = threads;
    return c;
  }

  std::size_t capped_k(std::ostream& err) const {
    if (k < 1) throw InvalidArgument("--k must be at least 1");
    if (k > kMaxSolutions) {
      err << "warning: --k " << k << " capped at " << kMaxSolutions << "\n";
      return kMaxSolutions;
    }
    return k;
  }
};

SearchInstance load_instance(const std::string& path) { return parse_instance(read_file(path)); }

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    write_file(path, text);
  }
}

std::string choices_field(const Selection& s) {
  std::string r;
  for (std::size_t i = 0; i < s.choices.size(); ++i) r += (i ? " " : "") + std::to_string(s.choices[i]);
  return r;
}

std::string describe(const SolveResult& r) {
  std::ostringstream s;
  s << "objective=" << format_real(r.objective) << " cost_ms=" << format_real(r.cost_ms)
    << " status=" << to_string(r.status);
  if (r.status == SolveStatus::feasible) s << " gap=" << format_real(r.gap);
  s << " nodes=" << r.nodes_explored;
  return s.str();
}

// Shared by solve and zeroshot.
int run_solve(const SearchInstance& inst, const BudgetFlags& budget, const SolveFlags& flags,
              const std::string& out_path, std::ostream& out, std::ostream& err) {
  const Budget b = budget.resolve(inst);
  const std::size_t k = flags.capped_k(err);
  auto report = solve_k_diverse(inst, b, k, flags.overlap, flags.config(),
                                [&](std::size_t i, const SolveResult& r) {
                                  err << "solution " << i + 1 << ": " << describe(r) << "\n";
                                });
  if (flags.no_timing) report.wall_time_s = 0.0;
  emit(out_path, write_report(report), out);
  if (report.solutions.empty()) {
    err << "infeasible: no selection fits budget " << format_real(b.limit_ms) << " ms\n";
    return kInfeasible;
  }
  return kOk;
}

std::vector<double> parse_ratio_list(const std::string& text) {
  std::vector<double> ratios;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    while (used < item.size() && item[used] == ' ') ++used;
    if (used == 0 || used != item.size()) throw InvalidArgument("bad ratio '" + item + "' in --ratios");
    if (!(v > 0.0)) throw InvalidArgument("--ratios entries must be positive");
    ratios.push_back(v);
  }
  if (ratios.empty()) throw InvalidArgument("--ratios is empty");
  return ratios;
}

// Report solutions must index into the instance they are paired with.
std::vector<Selection> report_selections(const SolveReport& report, const SearchInstance& inst) {
  if (report.instance != inst.name) {
    throw InvalidArgument("report is for instance '" + report.instance + "', not '" + inst.name + "'");
  }
  std::vector<Selection> sels;
  for (std::size_t k = 0; k < report.solutions.size(); ++k) {
    try {
      check_selection(inst, report.solutions[k].selection);
    } catch (const InvalidSelection& e) {
      throw InvalidArgument("report solution " + std::to_string(k) + " does not fit the instance: " + e.what());
    }
    sels.push_back(report.solutions[k].selection);
  }
  return sels;
}

int cmd_validate(const std::string& path, std::ostream& out, std::ostream& err) {
  const auto file = parse_instance_file_unchecked(read_file(path));
  const auto violations = validate_instance(file.instance);
  if (!violations.empty()) {
    for (const auto& v : violations) err << v.to_string() << "\n";
    err << violations.size() << " violation(s)\n";
    return kUsage;
  }
  std::size_t ops = 0;
  for (const auto& l : file.instance.layers) ops += l.ops.size();
  out << "ok: " << file.instance.name << ", " << file.instance.num_layers() << " layers, " << ops
      << " ops, teacher cost " << format_real(teacher_cost(file.instance)) << " ms\n";
  return kOk;
}

int cmd_sweep(const std::string& path, const std::string& ratios_text, const SolveFlags& flags,
              const std::string& out_path, std::ostream& out, std::ostream& err) {
  const auto ratios = parse_ratio_list(ratios_text);
  const auto inst = load_instance(path);
  const std::size_t k = flags.capped_k(err);
  std::ostringstream csv;
  csv << "ratio,best_objective,cost_ms,status\n";
  for (double ratio : ratios) {
    const auto report = solve_k_diverse(inst, budget_from_ratio(inst, ratio), k, flags.overlap, flags.config());
    csv << format_real(ratio) << ",";
    if (report.solutions.empty()) {
      csv << ",,infeasible\n";
      err << "ratio " << format_real(ratio) << ": infeasible\n";
      continue;
    }
    const auto& best = report.solutions.front();
    csv << format_real(best.objective) << "," << format_real(best.cost_ms) << "," << to_string(best.status) << "\n";
    err << "ratio " << format_real(ratio) << ": " << describe(best) << "\n";
  }
  emit(out_path, csv.str(), out);
  return kOk;
}

int cmd_stats(const std::string& report_path, const std::string& inst_path, std::size_t top,
              const std::string& out_path, std::ostream& out) {
  const auto inst = load_instance(inst_path);
  auto sels = report_selections(parse_report(read_file(report_path)), inst);
  if (sels.size() > top) sels.resize(top);
  const auto hist = selection_histogram(inst, sels);
  std::vector<std::pair<std::string, std::size_t>> rows(hist.counts.begin(), hist.counts.end());
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::ostringstream csv;
  csv << "op_id,count,fraction\n";
  for (const auto& [id, count] : rows) {
    const double frac = static_cast<double>(count) / static_cast<double>(hist.total_slots);
    csv << id << "," << count << "," << format_real(frac) << "\n";
  }
  emit(out_path, csv.str(), out);
  return kOk;
}

int cmd_rank(const std::string& report_path, const std::string& inst_path, const std::string& measured_path,
             const std::string& out_path, std::ostream& out, std::ostream& err) {
  const auto inst = load_instance(inst_path);
  auto sels = report_selections(parse_report(read_file(report_path)), inst);
  std::optional<std::vector<double>> measured;
  if (!measured_path.empty()) {
    const auto scores = parse_measured(read_file(measured_path));
    std::map<std::vector<std::size_t>, double> by_choice;
    for (const auto& e : scores.entries) by_choice[e.selection.choices] = e.measured;
    std::vector<Selection> kept;
    measured.emplace();
    for (const auto& s : sels) {
      const auto it = by_choice.find(s.choices);
      if (it == by_choice.end()) continue;
      kept.push_back(s);
      measured->push_back(it->second);
    }
    if (kept.size() < sels.size()) {
      err << "warning: " << sels.size() - kept.size() << " report solution(s) have no measured score and are skipped\n";
    }
    sels = std::move(kept);
  }
  const auto ranked = rank_candidates(inst, sels, measured);
  std::ostringstream csv;
  csv << "rank,input_index,proxy_objective,measured,cost_ms,choices\n";
  for (std::size_t r = 0; r < ranked.entries.size(); ++r) {
    const auto& e = ranked.entries[r];
    csv << r + 1 << "," << e.input_index << "," << format_real(e.proxy_objective) << ","
        << (e.measured ? format_real(*e.measured) : "") << "," << format_real(e.cost_ms) << ","
        << choices_field(e.selection) << "\n";
  }
  emit(out_path, csv.str(), out);
  if (measured) {
    std::vector<double> proxy;
    for (const auto& s : sels) proxy.push_back(objective(inst, s));
    err << "kendall_tau=" << format_real(kendall_tau(proxy, *measured)) << " n=" << proxy.size() << "\n";
  }
  return kOk;
}

int cmd_random(const std::string& path, const BudgetFlags& budget, std::size_t n, const SamplerConfig& cfg,
               double time_limit, const std::string& out_path, std::ostream& out, std::ostream& err) {
  const auto inst = load_instance(path);
  const Budget b = budget.resolve(inst);
  RandomSearchResult rs;
  try {
    rs = random_search(inst, b, n, cfg);
  } catch (const SamplingFailure& e) {
    err << "infeasible: " << e.what() << "\n";
    return kInfeasible;
  }
  emit(out_path, population_csv(rs), out);
  SolverConfig sc;
  sc.time_limit_s = time_limit;
  sc.threads = cfg.threads;
  const auto ilp = solve(inst, b, {}, inst.num_layers(), sc);
  err << "random: samples=" << rs.population.size() << " failures=" << rs.failures
      << " min_objective=" << format_real(rs.best_objective);
  if (ilp.has_solution()) {
    err << " ilp_objective=" << format_real(ilp.objective) << " ilp_status=" << to_string(ilp.status)
        << " ilp_better_or_equal=" << (ilp.objective <= rs.best_objective ? "yes" : "no");
  }
  err << "\n";
  return kOk;
}

int cmd_correlate(const std::string& inst_path, const std::string& measured_path, const std::string& out_path,
                  std::ostream& out) {
  const auto inst = load_instance(inst_path);
  const auto groups = group_by_budget(parse_measured(read_file(measured_path)));
  const auto rep = proxy_correlation_report(inst, groups);
  std::ostringstream csv;
  csv << "ratio,count,tau\n";
  for (const auto& row : rep.per_budget) {
    csv << format_real(row.ratio) << "," << row.count << "," << format_real(row.tau) << "\n";
  }
  csv << "pooled," << rep.pooled_count << "," << format_real(rep.pooled_tau) << "\n";
  emit(out_path, csv.str(), out);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Latency-constrained architecture search over per-layer lookup tables", "lana"};
  app.require_subcommand(1);

  std::string instance_path, report_path, out_path, measured_path;

  auto* validate = app.add_subcommand("validate", "check an instance file against the schema and invariants");
  validate->add_option("instance", instance_path)->required();

  BudgetFlags solve_budget;
  SolveFlags solve_flags;
  auto* solve_cmd = app.add_subcommand("solve", "find up to k diverse selections within a budget");
  solve_cmd->add_option("instance", instance_path)->required();
  solve_budget.attach(solve_cmd);
  solve_flags.attach(solve_cmd);
  solve_cmd->add_option("--out", out_path, "report path (default stdout)");

  std::string ratios;
  SolveFlags sweep_flags;
  auto* sweep = app.add_subcommand("sweep", "best objective per budget ratio as CSV");
  sweep->add_option("instance", instance_path)->required();
  sweep->add_option("--ratios", ratios, "comma-separated budget ratios")->required();
  sweep_flags.attach(sweep);
  sweep->add_option("--out", out_path, "CSV path (default stdout)");

  std::size_t top = 100;
  auto* stats = app.add_subcommand("stats", "op histogram over the top solutions of a report");
  stats->add_option("report", report_path)->required();
  stats->add_option("instance", instance_path)->required();
  stats->add_option("--top", top, "number of leading solutions to count")->check(CLI::PositiveNumber);
  stats->add_option("--out", out_path, "CSV path (default stdout)");

  BudgetFlags zs_budget;
  SolveFlags zs_flags;
  std::string identity_id = "identity";
  bool allow_missing = false;
  auto* zeroshot = app.add_subcommand("zeroshot", "solve with only teacher and identity ops");
  zeroshot->add_option("instance", instance_path)->required();
  zs_budget.attach(zeroshot);
  zs_flags.attach(zeroshot);
  zeroshot->add_option("--identity-id", identity_id, "op_id of the identity op");
  zeroshot->add_flag("--allow-missing-identity", allow_missing, "keep layers without identity as teacher-only");
  zeroshot->add_option("--out", out_path, "report path (default stdout)");

  auto* rank = app.add_subcommand("rank", "rank report solutions by measured score or proxy objective");
  rank->add_option("report", report_path)->required();
  rank->add_option("instance", instance_path)->required();
  rank->add_option("--measured", measured_path, "measured-scores JSON");
  rank->add_option("--out", out_path, "CSV path (default stdout)");

  BudgetFlags rnd_budget;
  std::size_t n = 1000;
  SamplerConfig sampler;
  sampler.threads = 0;
  double rnd_time_limit = 60.0;
  auto* random = app.add_subcommand("random", "seeded random feasible baseline");
  random->add_option("instance", instance_path)->required();
  rnd_budget.attach(random);
  random->add_option("--n", n, "number of samples")->check(CLI::PositiveNumber);
  random->add_option("--seed", sampler.seed, "base seed");
  random->add_option("--max-attempts", sampler.max_attempts_per_sample, "draws per sample before giving up")
      ->check(CLI::PositiveNumber);
  random->add_option("--threads", sampler.threads, "worker threads, 0 for all cores")->envname("LANA_THREADS");
  random->add_option("--time-limit", rnd_time_limit, "seconds for the reference solve")->check(CLI::PositiveNumber);
  random->add_option("--out", out_path, "population CSV path (default stdout)");

  auto* correlate = app.add_subcommand("correlate", "Kendall tau of proxy objective vs measured scores");
  correlate->add_option("instance", instance_path)->required();
  correlate->add_option("--measured", measured_path, "measured-scores JSON")->required();
  correlate->add_option("--out", out_path, "CSV path (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    if (*validate) return cmd_validate(instance_path, out, err);
    if (*solve_cmd) return run_solve(load_instance(instance_path), solve_budget, solve_flags, out_path, out, err);
    if (*sweep) return cmd_sweep(instance_path, ratios, sweep_flags, out_path, out, err);
    if (*stats) return cmd_stats(report_path, instance_path, top, out_path, out);
    if (*zeroshot) {
      const auto pool = zero_shot_pool(load_instance(instance_path), identity_id, allow_missing);
      return run_solve(pool, zs_budget, zs_flags, out_path, out, err);
    }
    if (*rank) return cmd_rank(report_path, instance_path, measured_path, out_path, out, err);
    if (*random) return cmd_random(instance_path, rnd_budget, n, sampler, rnd_time_limit, out_path, out, err);
    if (*correlate) return cmd_correlate(instance_path, measured_path, out_path, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace lana::cli
