#include "truthlab/adversary.hpp"
#include "truthlab/boundary.hpp"
#include "truthlab/error.hpp"
#include "truthlab/geometry.hpp"
#include "truthlab/io.hpp"
#include "truthlab/parallel.hpp"
#include "truthlab/rng.hpp"
#include "truthlab/truthcheck.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <iostream>
#include <sstream>

using namespace truthlab;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { kPass = 0, kNegative = 1, kUsage = 2, kInternal = 3 };

/// Thrown for bad command-line input that CLI11 cannot catch itself.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::ParseError:
    case Errc::InvalidConfig:
    case Errc::InvalidSpec:
    case Errc::InvalidInstance:
    case Errc::PreconditionViolated:
      return kUsage;
    case Errc::NoNiceStar:
    case Errc::BoxNotFound:
    case Errc::InsufficientMultiplicity:
      return kNegative;
    default:
      return kInternal;
  }
}

Value rational_flag(const std::string& text, const char* flag) {
  try {
    return parse_value(text);
  } catch (const Error&) {
    throw UsageError(std::string("--") + flag + ": expected a rational \"p/q\", got '" + text + "'");
  }
}

std::string load(const std::string& path, const char* what) {
  try {
    return read_file(path);
  } catch (const std::runtime_error& e) {
    throw UsageError(std::string(what) + ": " + e.what());
  }
}

MechanismSpec load_mechanism(const std::string& path) {
  MechanismSpec spec = spec_from_json(parse_document(load(path, "mechanism"), path));
  validate_spec(spec);
  return spec;
}

Instance load_instance(const std::string& path) { return instance_from_json(parse_document(load(path, "instance"), path)); }

std::string hash_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string utc_now() {
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

/// Writes the report to --out (plus a run manifest next to it) or stdout.
void emit(const Json& report, const std::string& out, const std::string& command, const Json& echo,
          const std::string& id, int jobs) {
  if (out.empty()) {
    std::cout << dump_document(report);
    return;
  }
  write_file(out, dump_document(report));
  Json manifest{{"command", command},
                {"config", echo},
                {"manifest_id", id},
                {"version", kVersion},
                {"outputs", Json::array({out})},
                {"jobs", jobs},
                {"wall_clock", utc_now()}};
  write_file(out + ".manifest.json", dump_document(manifest));
}

struct Options {
  int n = 3;
  int ell = 8;
  std::string eps = "1/4";
  std::string xi;
  std::string nu;
  int q = 1;
  std::uint64_t seed = 1;
  std::string delta;
  std::string tol = "1/4294967296";
  int jobs = default_jobs();
  std::string out;
  std::string mechanism;
  std::string instance;
  std::string config;
  std::string suite;
  std::string pair;
  std::string star;
  int root = 0;
  std::string resolution = "1/256";
  std::size_t trials = 1000;
  std::string mode = "random";
  std::string step = "1/64";
  std::uint64_t budget = 64;
};

std::vector<int> id_list(const std::string& text, const char* flag) {
  std::vector<int> ids;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      ids.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string("--") + flag + ": expected comma-separated task ids");
    }
  }
  if (ids.empty()) throw UsageError(std::string("--") + flag + ": no task ids given");
  return ids;
}

int run_gen(const Options& o) {
  AdversaryConfig c;
  c.n = o.n;
  c.ell = o.ell;
  c.eps = rational_flag(o.eps, "eps");
  c.seed = o.seed;
  Instance inst = sample_multi_clique(c);
  Json echo{{"n", c.n}, {"ell", c.ell}, {"eps", value_to_json(c.eps)}, {"seed", c.seed}};
  std::string id = hash_hex("gen\n" + echo.dump());
  Json doc = instance_to_json(inst);
  doc["manifest_id"] = id;
  emit(doc, o.out, "gen", echo, id, o.jobs);
  return kPass;
}

Json interval_json(const CriticalInterval& c) {
  return Json{{"lo", value_to_json(c.lo)}, {"hi", value_to_json(c.hi)}, {"unbounded", c.unbounded}};
}

std::vector<std::size_t> edge_indices(const Instance& inst) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    if (!inst.task(i).is_loop()) out.push_back(i);
  }
  return out;
}

Json verify_wmon(const Oracle& oracle, const Instance& inst, const Options& o, bool& pass) {
  SweepConfig cfg;
  if (o.mode == "grid") {
    cfg.mode = SampleMode::Grid;
  } else if (o.mode != "random") {
    throw UsageError("--mode must be grid or random");
  }
  cfg.seed = o.seed;
  cfg.trials = o.trials;
  cfg.jobs = o.jobs;
  WmonReport r = wmon_sweep(oracle, inst, cfg);
  pass = r.violations.empty();
  return wmon_report_to_json(r);
}

Json verify_young(const Oracle& oracle, const Instance& inst, const Options& o, bool& pass) {
  const Value tol = rational_flag(o.tol, "tol");
  const Value step = rational_flag(o.step, "step");
  Json rows = Json::array();
  pass = true;
  for (std::size_t idx : edge_indices(inst)) {
    for (const Value& a : {Value(1, 2), Value(1)}) {
      YoungResult y = young_check_edge(oracle, inst, inst.task(idx).id, a, step, tol);
      pass = pass && y.pass;
      rows.push_back(Json{{"task", inst.task(idx).id},
                          {"a", value_to_json(a)},
                          {"lhs", value_to_json(y.lhs)},
                          {"target", value_to_json(y.target)},
                          {"error_bound", value_to_json(y.error_bound)},
                          {"pass", y.pass}});
    }
  }
  return Json{{"edges", rows}};
}

Json verify_slope(const Oracle& oracle, const Instance& inst, const Options& o, bool& pass) {
  const Value tol = rational_flag(o.tol, "tol");
  std::vector<Value> xs;
  for (int k = 1; k <= 8; ++k) xs.push_back(Value(k) / 8);
  Json flags = Json::array();
  for (std::size_t idx : edge_indices(inst)) {
    const Task& t = inst.task(idx);
    for (int side : {t.a, t.b}) {
      SlopeReport r = bounded_slope_check(BoundaryProbe{&oracle, inst, idx, side, tol}, xs);
      for (const auto& s : r.samples) {
        if (!s.flagged) continue;
        flags.push_back(Json{{"task", t.id}, {"side", side}, {"x", value_to_json(s.x)}, {"interval", interval_json(s.interval)}});
      }
    }
  }
  pass = flags.empty();
  return Json{{"flags", flags}};
}

Json verify_lipschitz(const Oracle& oracle, const Instance& inst, const Options& o, bool& pass) {
  const Value tol = rational_flag(o.tol, "tol");
  const Value step(1, 8);
  Json rows = Json::array();
  pass = true;
  for (std::size_t idx : edge_indices(inst)) {
    const Task& t = inst.task(idx);
    const int side = t.a;
    Value s = t.vb > 0 ? t.vb : Value(1, 2);
    std::vector<Perturbation> deltas;
    for (std::size_t other = 0; other < inst.size(); ++other) {
      const Task& u = inst.task(other);
      if (other == idx || !u.supports(side)) continue;
      deltas.push_back({{u.id, step}});
      Value down = std::min(step, u.value_for(side));
      if (down > 0) deltas.push_back({{u.id, -down}});
    }
    if (deltas.empty()) continue;
    LipschitzReport r = lipschitz_check(BoundaryProbe{&oracle, inst, idx, side, tol}, s, deltas);
    pass = pass && r.pass;
    for (std::size_t k = 0; k < r.samples.size(); ++k) {
      if (r.samples[k].pass) continue;
      rows.push_back(Json{{"task", t.id},
                          {"perturbation", k},
                          {"difference", value_to_json(r.samples[k].difference)},
                          {"l1", value_to_json(r.samples[k].l1)}});
    }
  }
  return Json{{"failures", rows}};
}

Json verify_alphas(const Oracle& oracle, const Instance& inst, const Options& o, bool& pass) {
  const Value tol = rational_flag(o.tol, "tol");
  std::vector<std::pair<int, int>> edges;
  for (std::size_t idx : edge_indices(inst)) {
    const Task& t = inst.task(idx);
    if (t.vb > 0 && t.vb <= 1) edges.emplace_back(t.id, t.a);
  }
  AlphaReport r = alpha_bounds_check(oracle, inst, edges, tol);
  pass = r.pass;
  Json rows = Json::array();
  for (const auto& e : r.edges) {
    rows.push_back(Json{{"task", e.task},
                        {"root", e.root},
                        {"s", value_to_json(e.s)},
                        {"alpha", value_to_json(e.alpha)},
                        {"lower_ok", e.lower_ok},
                        {"upper_ok", e.upper_ok}});
  }
  return Json{{"edges", rows}};
}

int run_verify(const Options& o) {
  MechanismSpec spec = load_mechanism(o.mechanism);
  Instance inst = load_instance(o.instance);
  SpecOracle oracle(spec);
  bool pass = false;
  Json details;
  if (o.suite == "wmon") {
    details = verify_wmon(oracle, inst, o, pass);
  } else if (o.suite == "young") {
    details = verify_young(oracle, inst, o, pass);
  } else if (o.suite == "slope") {
    details = verify_slope(oracle, inst, o, pass);
  } else if (o.suite == "lipschitz") {
    details = verify_lipschitz(oracle, inst, o, pass);
  } else if (o.suite == "alphas") {
    details = verify_alphas(oracle, inst, o, pass);
  } else {
    throw UsageError("--suite must be one of wmon, young, slope, lipschitz, alphas");
  }
  Json echo{{"suite", o.suite}, {"mechanism", spec_to_json(spec)}, {"instance", instance_to_json(inst)},
            {"seed", o.seed}, {"trials", o.trials}, {"mode", o.mode}};
  std::string id = hash_hex("verify\n" + echo.dump());
  Json report{{"suite", o.suite}, {"pass", pass}, {"details", details}, {"manifest_id", id}};
  emit(report, o.out, "verify", echo, id, o.jobs);
  return pass ? kPass : kNegative;
}

int run_classify(const Options& o) {
  MechanismSpec spec = load_mechanism(o.mechanism);
  Instance inst = load_instance(o.instance);
  SpecOracle oracle(spec);
  Json report;
  if (!o.pair.empty() == !o.star.empty()) throw UsageError("give exactly one of --pair or --star");
  if (!o.pair.empty()) {
    auto ids = id_list(o.pair, "pair");
    if (ids.size() != 2) throw UsageError("--pair needs two task ids");
    report = pair_report_to_json(
        classify_pair(oracle, inst, ids[0], ids[1], o.root, rational_flag(o.resolution, "resolution"), o.seed));
  } else {
    if (o.delta.empty()) throw UsageError("--star needs --delta");
    Star star{o.root, id_list(o.star, "star")};
    report = box_report_to_json(
        is_box(oracle, inst, star, rational_flag(o.delta, "delta"), rational_flag(o.tol, "tol")));
  }
  Json echo{{"mechanism", spec_to_json(spec)}, {"instance", instance_to_json(inst)}, {"pair", o.pair},
            {"star", o.star}, {"root", o.root}, {"delta", o.delta}, {"resolution", o.resolution}};
  std::string id = hash_hex("classify\n" + echo.dump());
  report["manifest_id"] = id;
  emit(report, o.out, "classify", echo, id, o.jobs);
  return kPass;
}

int run_adversary_command(const Options& o, const CLI::App& cmd) {
  MechanismSpec spec = load_mechanism(o.mechanism);
  AdversaryConfig c;
  if (!o.config.empty()) c = config_from_json(parse_document(load(o.config, "config"), o.config));
  if (cmd.count("--n")) c.n = o.n;
  if (cmd.count("--ell")) c.ell = o.ell;
  if (cmd.count("--eps")) c.eps = rational_flag(o.eps, "eps");
  if (cmd.count("--xi")) c.xi = rational_flag(o.xi, "xi");
  if (cmd.count("--nu")) c.nu = rational_flag(o.nu, "nu");
  if (cmd.count("--q")) c.q = o.q;
  if (cmd.count("--seed")) c.seed = o.seed;
  if (cmd.count("--tol")) c.tol = rational_flag(o.tol, "tol");
  if (cmd.count("--budget")) c.budget = o.budget;
  validate_config(c);
  SpecOracle oracle(spec);
  const std::string id = manifest_id("adversary", c);
  Json echo = config_to_json(c);
  echo["mechanism"] = spec_to_json(spec);
  StageLog log;
  try {
    WitnessReport w = run_adversary(oracle, c, o.jobs, log);
    Json report = witness_to_json(w, c, log, id);
    report["mechanism"] = spec_to_json(spec);
    emit(report, o.out, "adversary", echo, id, o.jobs);
    return kPass;
  } catch (const Error& e) {
    int code = exit_code_for(e.code());
    if (code != kNegative) throw;
    log.add("failure", Json{{"error", std::string(errc_name(e.code()))}, {"message", e.what()}});
    Json report{{"manifest_id", id}, {"config", config_to_json(c)}, {"mechanism", spec_to_json(spec)},
                {"stages", log.stages}, {"outcome", std::string(errc_name(e.code()))}};
    emit(report, o.out, "adversary", echo, id, o.jobs);
    std::cerr << "truthlab: " << e.what() << "\n";
    return code;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Truthful-scheduling laboratory"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Options o;

  auto* gen = app.add_subcommand("gen", "Sample a random multi-clique instance");
  gen->add_option("--n", o.n, "Machines")->required();
  gen->add_option("--ell", o.ell, "Edges per machine pair")->required();
  gen->add_option("--eps", o.eps, "Grid step eps (1/eps integer)")->required();
  gen->add_option("--seed", o.seed, "Random seed");
  gen->add_option("--out", o.out, "Output file (stdout if absent)");
  gen->add_option("--jobs", o.jobs, "Worker threads");

  auto* verify = app.add_subcommand("verify", "Run a verification suite");
  verify->add_option("--mechanism", o.mechanism, "Mechanism document")->required();
  verify->add_option("--instance", o.instance, "Instance document")->required();
  verify->add_option("--suite", o.suite, "wmon | young | slope | lipschitz | alphas")->required();
  verify->add_option("--seed", o.seed, "Random seed");
  verify->add_option("--trials", o.trials, "WMON trials");
  verify->add_option("--mode", o.mode, "WMON sampling: grid | random");
  verify->add_option("--step", o.step, "Riemann step for young");
  verify->add_option("--tol", o.tol, "Bisection tolerance");
  verify->add_option("--jobs", o.jobs, "Worker threads");
  verify->add_option("--out", o.out, "Output file (stdout if absent)");

  auto* classify = app.add_subcommand("classify", "Classify a task pair or test a star for a box");
  classify->add_option("--mechanism", o.mechanism, "Mechanism document")->required();
  classify->add_option("--instance", o.instance, "Instance document")->required();
  classify->add_option("--pair", o.pair, "Two task ids, comma separated");
  classify->add_option("--star", o.star, "Star task ids, comma separated");
  classify->add_option("--root", o.root, "Common endpoint");
  classify->add_option("--resolution", o.resolution, "Probe resolution");
  classify->add_option("--delta", o.delta, "Box shift");
  classify->add_option("--tol", o.tol, "Bisection tolerance");
  classify->add_option("--seed", o.seed, "Cross-validation seed");
  classify->add_option("--jobs", o.jobs, "Worker threads");
  classify->add_option("--out", o.out, "Output file (stdout if absent)");

  auto* adversary = app.add_subcommand("adversary", "Run the witness pipeline against a mechanism");
  adversary->add_option("--mechanism", o.mechanism, "Mechanism document")->required();
  adversary->add_option("--config", o.config, "Adversary config document");
  adversary->add_option("--n", o.n, "Machines");
  adversary->add_option("--ell", o.ell, "Edges per machine pair");
  adversary->add_option("--eps", o.eps, "Grid step eps");
  adversary->add_option("--xi", o.xi, "xi in (0, 1)");
  adversary->add_option("--nu", o.nu, "Box scale nu");
  adversary->add_option("--q", o.q, "Target multiplicity");
  adversary->add_option("--seed", o.seed, "Random seed");
  adversary->add_option("--tol", o.tol, "Bisection tolerance");
  adversary->add_option("--budget", o.budget, "Sibling swap budget");
  adversary->add_option("--jobs", o.jobs, "Worker threads");
  adversary->add_option("--out", o.out, "Output file (stdout if absent)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  }

  try {
    if (o.jobs < 1) throw UsageError("--jobs must be positive");
    if (*gen) return run_gen(o);
    if (*verify) return run_verify(o);
    if (*classify) return run_classify(o);
    return run_adversary_command(o, *adversary);
  } catch (const UsageError& e) {
    std::cerr << "truthlab: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "truthlab: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "truthlab: " << e.what() << "\n";
    return kInternal;
  }
}
