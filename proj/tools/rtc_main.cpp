// Command-line front door: solve, evaluate, simulate, oracle, compare,
// validate. Every command reads JSON files and writes one JSON report to
// stdout or --out. Timings live in a "meta" block; everything else is a
// deterministic function of (input files, flags, seed).

#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <thread>

#include "rtc/design.hpp"
#include "rtc/evaluator.hpp"
#include "rtc/json_io.hpp"
#include "rtc/model.hpp"
#include "rtc/oracle.hpp"
#include "rtc/solver.hpp"

namespace {

using rtc::Json;

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitParse = 2;
constexpr int kExitValidation = 3;
constexpr int kExitLimit = 4;
constexpr int kExitDimension = 5;

void emit(const std::string& out_path, const Json& doc) {
  const std::string text = rtc::dump_json(doc);
  if (out_path.empty()) {
    std::cout << text;
  } else {
    rtc::write_text_file(out_path, text);
  }
}

Json error_doc(int code, const std::string& kind, const std::string& message) {
  Json err = Json::object();
  err["code"] = code;
  err["kind"] = kind;
  err["message"] = message;
  Json doc = Json::object();
  doc["error"] = std::move(err);
  return doc;
}

Json stats_to_json(const rtc::SolverStats& stats) {
  Json doc = Json::object();
  Json stages = Json::array();
  for (std::size_t t = 0; t < stats.states_per_stage.size(); ++t) {
    Json row = Json::object();
    row["stage"] = static_cast<std::uint64_t>(t + 1);
    row["encoder"] = stats.states_per_stage[t].encoder;
    row["decoder"] = stats.states_per_stage[t].decoder;
    row["memory"] = stats.states_per_stage[t].memory;
    stages.push_back(std::move(row));
  }
  doc["reachable_states"] = std::move(stages);
  doc["nodes_expanded"] = stats.nodes_expanded;
  Json cache = Json::object();
  cache["entries"] = stats.cache_entries;
  cache["hits"] = stats.cache_hits;
  doc["cache"] = std::move(cache);
  return doc;
}

Json counts_to_json(const rtc::DesignSpaceCount& c) {
  Json doc = Json::object();
  Json enc = Json::array();
  for (auto v : c.encoders) enc.push_back(v);
  doc["encoders"] = std::move(enc);
  Json dec = Json::array();
  for (auto v : c.decoders) dec.push_back(v);
  doc["decoders"] = std::move(dec);
  Json mem = Json::array();
  for (auto v : c.memories) mem.push_back(v);
  doc["memories"] = std::move(mem);
  doc["total"] = c.total;
  doc["overflow"] = c.overflow;
  return doc;
}

int default_threads() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

struct Args {
  std::string instance_path;
  std::string design_path;
  std::string out_path;
  std::string mode = "full";
  std::uint64_t seed = 0;
  std::uint64_t samples = 10000;
  std::uint64_t max_rules = 1'000'000;
  std::uint64_t max_nodes = 1'000'000;
  std::uint64_t max_designs = 50'000'000;
  double time_budget_s = 600.0;
  int threads = 0;  // 0: all cores
  bool debug_enumerate_decoders = false;
  bool pointwise_decoders = false;
};

rtc::SolverOptions solver_options(const Args& a) {
  rtc::SolverOptions opt;
  opt.limits.max_rules_per_node = a.max_rules;
  opt.limits.max_nodes = a.max_nodes;
  opt.limits.time_budget_s = a.time_budget_s;
  opt.debug_enumerate_decoders = a.debug_enumerate_decoders;
  return opt;
}

int cmd_solve(const Args& a) {
  const rtc::Instance inst = rtc::load_instance(a.instance_path);
  rtc::Solver solver(inst, solver_options(a));
  try {
    const rtc::SolveResult result = solver.solve();
    Json doc = Json::object();
    doc["command"] = "solve";
    doc["j_star"] = result.j_star;
    doc["design"] = rtc::design_to_json(rtc::Design(result.design));
    Json stats = stats_to_json(result.stats);
    for (auto it = stats.begin(); it != stats.end(); ++it) doc[it.key()] = it.value();
    Json meta = Json::object();
    meta["wall_time_s"] = result.stats.wall_time_s;
    doc["meta"] = std::move(meta);
    emit(a.out_path, doc);
    return kExitOk;
  } catch (const rtc::LimitError& e) {
    Json doc = error_doc(kExitLimit, "limit", e.what());
    doc["error"]["resource"] = e.resource();
    doc["error"]["count"] = e.count();
    doc["error"]["limit"] = e.limit();
    doc["error"]["partial_stats"] = stats_to_json(solver.stats());
    emit(a.out_path, doc);
    std::cerr << e.what() << "\n";
    return kExitLimit;
  }
}

int cmd_evaluate(const Args& a) {
  const rtc::Instance inst = rtc::load_instance(a.instance_path);
  const rtc::Design design = rtc::load_design(a.design_path);
  const rtc::ExactReport report = rtc::evaluate_exact(inst, design);
  Json doc = Json::object();
  doc["command"] = "evaluate";
  doc["value"] = report.value;
  Json per_stage = Json::array();
  for (rtc::Real c : report.per_stage) per_stage.push_back(c);
  doc["per_stage"] = std::move(per_stage);
  emit(a.out_path, doc);
  return kExitOk;
}

int cmd_simulate(const Args& a) {
  const rtc::Instance inst = rtc::load_instance(a.instance_path);
  const rtc::Design design = rtc::load_design(a.design_path);
  const int threads = a.threads > 0 ? a.threads : default_threads();
  const rtc::SimReport report = rtc::simulate(inst, design, a.samples, a.seed, threads);
  Json doc = Json::object();
  doc["command"] = "simulate";
  doc["estimate"] = report.estimate;
  doc["std_error"] = report.std_error;
  doc["samples"] = report.samples;
  doc["seed"] = report.seed;
  Json per_stage = Json::array();
  for (rtc::Real c : report.per_stage) per_stage.push_back(c);
  doc["per_stage"] = std::move(per_stage);
  emit(a.out_path, doc);
  return kExitOk;
}

int cmd_oracle(const Args& a) {
  const rtc::Instance inst = rtc::load_instance(a.instance_path);
  rtc::OracleOptions opt;
  opt.max_designs = a.max_designs;
  opt.threads = a.threads > 0 ? a.threads : default_threads();
  opt.pointwise_decoders = a.pointwise_decoders;
  const rtc::OracleMode mode =
      (a.mode == "no-feedback") ? rtc::OracleMode::kNoFeedback : rtc::OracleMode::kFull;
  const auto t0 = std::chrono::steady_clock::now();
  const rtc::OracleResult result = rtc::brute_force(inst, mode, opt);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Json doc = Json::object();
  doc["command"] = "oracle";
  doc["mode"] = a.mode;
  doc["j_star"] = result.j_star;
  doc["design"] = rtc::design_to_json(rtc::Design(result.design));
  doc["counts"] = counts_to_json(result.counts);
  doc["visited"] = result.visited;
  Json meta = Json::object();
  meta["wall_time_s"] = wall;
  doc["meta"] = std::move(meta);
  emit(a.out_path, doc);
  return kExitOk;
}

int cmd_compare(const Args& a) {
  const rtc::Instance inst = rtc::load_instance(a.instance_path);
  const rtc::Design design = rtc::load_design(a.design_path);
  const rtc::CompareReport report = rtc::compare(inst, design, solver_options(a));
  Json doc = Json::object();
  doc["command"] = "compare";
  doc["heuristic_cost"] = report.heuristic_cost;
  doc["j_star"] = report.j_star;
  doc["gap_abs"] = report.gap_abs;
  if (report.gap_rel) {
    doc["gap_rel"] = *report.gap_rel;
  } else {
    doc["gap_rel"] = nullptr;
  }
  emit(a.out_path, doc);
  return kExitOk;
}

int cmd_validate(const Args& a) {
  const Json parsed = rtc::parse_json_file(a.instance_path);
  const rtc::Instance inst = rtc::instance_from_json(parsed);
  const std::vector<std::string> violations = rtc::validate_instance(inst);
  Json doc = Json::array();
  for (const std::string& v : violations) doc.push_back(v);
  emit(a.out_path, doc);
  return violations.empty() ? kExitOk : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"optimal real-time coding with noisy feedback: exact solver and tools"};
  app.require_subcommand(1);

  Args args;

  auto add_common = [&](CLI::App* cmd, bool needs_design) {
    cmd->add_option("--instance", args.instance_path, "instance JSON file")->required();
    if (needs_design) {
      cmd->add_option("--design", args.design_path, "design JSON file")->required();
    }
    cmd->add_option("--out", args.out_path, "write the report here instead of stdout");
  };
  auto add_solver_flags = [&](CLI::App* cmd) {
    cmd->add_option("--max-rules", args.max_rules, "max candidate rules per search node");
    cmd->add_option("--max-nodes", args.max_nodes, "max expanded search nodes");
    cmd->add_option("--time-budget-s", args.time_budget_s, "wall-clock budget in seconds");
    cmd->add_flag("--debug-enumerate-decoders", args.debug_enumerate_decoders,
                  "cross-check: enumerate decoder tables naively");
  };

  CLI::App* solve = app.add_subcommand("solve", "compute an optimal design");
  add_common(solve, false);
  add_solver_flags(solve);
  solve->add_option("--threads", args.threads, "worker threads (0: all cores)");

  CLI::App* evaluate = app.add_subcommand("evaluate", "exact expected distortion of a design");
  add_common(evaluate, true);

  CLI::App* simulate = app.add_subcommand("simulate", "Monte-Carlo estimate for a design");
  add_common(simulate, true);
  simulate->add_option("--samples", args.samples, "number of episodes");
  simulate->add_option("--seed", args.seed, "base RNG seed");
  simulate->add_option("--threads", args.threads, "worker threads (0: all cores)");

  CLI::App* oracle = app.add_subcommand("oracle", "brute-force search over all designs");
  add_common(oracle, false);
  oracle->add_option("--mode", args.mode, "design class searched")
      ->check(CLI::IsMember({"full", "no-feedback"}));
  oracle->add_option("--max-designs", args.max_designs, "abort if the space is larger");
  oracle->add_option("--threads", args.threads, "worker threads (0: all cores)");
  oracle->add_flag("--pointwise-decoders", args.pointwise_decoders,
                   "optimize decoders per cell instead of enumerating them");

  CLI::App* compare = app.add_subcommand("compare", "gap between a given design and the optimum");
  add_common(compare, true);
  add_solver_flags(compare);

  CLI::App* validate = app.add_subcommand("validate", "list instance invariant violations");
  validate->add_option("--instance", args.instance_path, "instance JSON file")->required();
  validate->add_option("--out", args.out_path, "write the report here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(args);
    if (evaluate->parsed()) return cmd_evaluate(args);
    if (simulate->parsed()) return cmd_simulate(args);
    if (oracle->parsed()) return cmd_oracle(args);
    if (compare->parsed()) return cmd_compare(args);
    if (validate->parsed()) return cmd_validate(args);
  } catch (const rtc::ParseError& e) {
    emit(args.out_path, error_doc(kExitParse, "parse", e.what()));
    std::cerr << e.what() << "\n";
    return kExitParse;
  } catch (const rtc::ValidationError& e) {
    Json doc = error_doc(kExitValidation, "validation", e.what());
    Json violations = Json::array();
    for (const std::string& v : e.violations()) violations.push_back(v);
    doc["error"]["violations"] = std::move(violations);
    emit(args.out_path, doc);
    std::cerr << e.what() << "\n";
    return kExitValidation;
  } catch (const rtc::LimitError& e) {
    Json doc = error_doc(kExitLimit, "limit", e.what());
    doc["error"]["resource"] = e.resource();
    doc["error"]["count"] = e.count();
    doc["error"]["limit"] = e.limit();
    emit(args.out_path, doc);
    std::cerr << e.what() << "\n";
    return kExitLimit;
  } catch (const rtc::DimensionMismatchError& e) {
    emit(args.out_path, error_doc(kExitDimension, "dimension", e.what()));
    std::cerr << e.what() << "\n";
    return kExitDimension;
  } catch (const std::exception& e) {
    emit(args.out_path, error_doc(kExitInternal, "internal", e.what()));
    std::cerr << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
