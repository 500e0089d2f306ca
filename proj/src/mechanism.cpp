#include "truthlab/mechanism.hpp"

#include "truthlab/error.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <numeric>

namespace truthlab {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string task_label(int id) { return "task " + std::to_string(id); }

std::size_t resolve_task(const Instance& instance, int id) {
  auto idx = instance.find(id);
  if (!idx) throw Error(Errc::InvalidSpec, "mechanism refers to missing " + task_label(id));
  return *idx;
}

Value weight_of(const std::vector<Value>& lambda, int machine, int n) {
  if (lambda.empty()) return Value(1);
  if (static_cast<int>(lambda.size()) != n) {
    throw Error(Errc::InvalidSpec, "expected " + std::to_string(n) + " multipliers, got " +
                                       std::to_string(lambda.size()));
  }
  return lambda[static_cast<std::size_t>(machine)];
}

// Lower machine index first, the order every tie-break follows.
std::pair<int, int> ordered_endpoints(const Task& t) { return {std::min(t.a, t.b), std::max(t.a, t.b)}; }

int weighted_min_machine(const Task& t, const Value& wa, const Value& wb) {
  if (t.is_loop()) return t.a;
  Value ca = wa * t.va;
  Value cb = wb * t.vb;
  if (ca < cb) return t.a;
  if (cb < ca) return t.b;
  return std::min(t.a, t.b);
}

// ---------------------------------------------------------------------------
// Affine minimizer search

struct ResolvedGroup {
  std::vector<std::size_t> tasks;
  int machine;
  GroupWhen when;
  Value constant;
};

struct AffineProblem {
  const Instance& instance;
  std::vector<Value> weight;                  // per machine
  std::vector<std::array<Value, 2>> gamma;   // per task: [a side, b side]
  std::vector<ResolvedGroup> groups;
  std::vector<std::vector<std::size_t>> groups_of_task;
  const std::vector<TableEntry>* table = nullptr;
  std::uint64_t cap = kDefaultEnumerationCap;

  Value task_cost(std::size_t idx, int machine, int excluded) const {
    if (machine == excluded) return Value(0);
    const Task& t = instance.task(idx);
    const auto& g = gamma[idx];
    const Value& gm = machine == t.a ? g[0] : g[1];
    return weight[static_cast<std::size_t>(machine)] * t.value_for(machine) + gm;
  }

  Value group_cost(const ResolvedGroup& g, const std::vector<int>& machine_of) const {
    std::size_t on = 0;
    for (auto idx : g.tasks) {
      if (machine_of[idx] == g.machine) ++on;
    }
    bool fire = false;
    switch (g.when) {
      case GroupWhen::Split: fire = on > 0 && on < g.tasks.size(); break;
      case GroupWhen::AllOn: fire = on == g.tasks.size(); break;
      case GroupWhen::AllAway: fire = on == 0; break;
    }
    return fire ? g.constant : Value(0);
  }

  Value table_cost(const std::vector<int>& machine_of) const {
    if (table == nullptr) return Value(0);
    for (const auto& entry : *table) {
      if (entry.assignment == machine_of) return entry.value;
    }
    return Value(0);
  }
};

struct ComponentSearch {
  const AffineProblem& problem;
  const std::vector<std::size_t>& tasks;  // ascending indices
  const std::vector<std::size_t>& groups;
  bool use_table;
  int excluded;
  std::vector<int>& machine_of;
  std::vector<std::vector<int>> choices;
  std::vector<int> best;
  Value best_value;
  bool have_best = false;

  Value evaluate() const {
    Value total = 0;
    for (auto idx : tasks) total += problem.task_cost(idx, machine_of[idx], excluded);
    for (auto gi : groups) total += problem.group_cost(problem.groups[gi], machine_of);
    if (use_table) total += problem.table_cost(machine_of);
    return total;
  }

  void recurse(std::size_t depth) {
    if (depth == tasks.size()) {
      Value v = evaluate();
      if (!have_best || v < best_value) {
        best_value = v;
        best.clear();
        for (auto idx : tasks) best.push_back(machine_of[idx]);
        have_best = true;
      }
      return;
    }
    for (int m : choices[depth]) {
      machine_of[tasks[depth]] = m;
      recurse(depth + 1);
    }
  }
};

struct AffineResult {
  Allocation alloc;
  Value objective;
};

// Lexicographically first minimizer. Tasks linked by group terms or the table
// are searched jointly; everything else decomposes, and per-part lex-first
// minima combine into the global lex-first minimum.
AffineResult solve_affine(const AffineProblem& problem, int excluded) {
  const Instance& instance = problem.instance;
  std::size_t m = instance.size();
  std::vector<std::size_t> parent(m);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto unite = [&](std::size_t x, std::size_t y) { parent[find(x)] = find(y); };
  for (const auto& g : problem.groups) {
    for (std::size_t k = 1; k < g.tasks.size(); ++k) unite(g.tasks[0], g.tasks[k]);
  }
  bool table_active = problem.table != nullptr && !problem.table->empty();
  if (table_active) {
    for (std::size_t k = 1; k < m; ++k) unite(0, k);
  }

  std::map<std::size_t, std::vector<std::size_t>> components;
  for (std::size_t i = 0; i < m; ++i) components[find(i)].push_back(i);
  std::map<std::size_t, std::vector<std::size_t>> component_groups;
  for (std::size_t gi = 0; gi < problem.groups.size(); ++gi) {
    if (problem.groups[gi].tasks.empty()) continue;
    component_groups[find(problem.groups[gi].tasks[0])].push_back(gi);
  }

  std::vector<int> machine_of(m, -1);
  Value objective = 0;
  // Group terms with no tasks are constants of every allocation.
  for (const auto& g : problem.groups) {
    if (g.tasks.empty()) objective += problem.group_cost(g, machine_of);
  }
  static const std::vector<std::size_t> kNoGroups;
  for (auto& [root, tasks] : components) {
    auto git = component_groups.find(root);
    const auto& groups = git == component_groups.end() ? kNoGroups : git->second;
    ComponentSearch search{problem, tasks, groups, table_active, excluded, machine_of, {}, {}, Value(0)};
    std::uint64_t combos = 1;
    for (auto idx : tasks) {
      const Task& t = instance.task(idx);
      std::vector<int> options;
      auto [lo, hi] = ordered_endpoints(t);
      for (int mach : {lo, hi}) {
        if (!options.empty() && options.back() == mach) continue;
        if (mach == excluded && !t.is_loop()) continue;
        options.push_back(mach);
      }
      if (options.size() > 1) {
        combos *= options.size();
        if (combos > problem.cap) {
          throw Error(Errc::InstanceTooLarge, "affine minimizer component exceeds the enumeration cap");
        }
      }
      search.choices.push_back(std::move(options));
    }
    search.recurse(0);
    for (std::size_t k = 0; k < tasks.size(); ++k) machine_of[tasks[k]] = search.best[k];
    objective += search.best_value;
  }
  return AffineResult{Allocation{machine_of}, objective};
}

AffineProblem make_problem(const AffineMinimizer& spec, const Instance& instance) {
  int n = instance.n();
  AffineProblem problem{instance, {}, {}, {}, {}, nullptr};
  for (int i = 0; i < n; ++i) problem.weight.push_back(weight_of(spec.lambda, i, n));
  problem.gamma.assign(instance.size(), {Value(0), Value(0)});
  for (const auto& g : spec.gamma) {
    std::size_t idx = resolve_task(instance, g.task);
    const Task& t = instance.task(idx);
    if (!t.supports(g.machine)) {
      throw Error(Errc::InvalidSpec, "constant for " + task_label(g.task) + " names machine outside its support");
    }
    if (g.machine == t.a) problem.gamma[idx][0] = g.value;
    if (g.machine == t.b) problem.gamma[idx][1] = g.value;
  }
  problem.groups_of_task.resize(instance.size());
  for (const auto& g : spec.groups) {
    ResolvedGroup rg{{}, g.machine, g.when, g.constant};
    for (int id : g.tasks) rg.tasks.push_back(resolve_task(instance, id));
    std::sort(rg.tasks.begin(), rg.tasks.end());
    rg.tasks.erase(std::unique(rg.tasks.begin(), rg.tasks.end()), rg.tasks.end());
    for (auto idx : rg.tasks) problem.groups_of_task[idx].push_back(problem.groups.size());
    problem.groups.push_back(std::move(rg));
  }
  if (!spec.table.empty()) {
    if (instance.size() > 4) {
      throw Error(Errc::InvalidSpec, "per-allocation constant tables are limited to four tasks");
    }
    for (const auto& entry : spec.table) {
      if (entry.assignment.size() != instance.size()) {
        throw Error(Errc::InvalidSpec, "table entry length does not match the task count");
      }
    }
    problem.table = &spec.table;
  }
  return problem;
}

// ---------------------------------------------------------------------------

int task_independent_machine(const TaskIndependent& spec, const Task& t) {
  if (t.is_loop()) return t.a;
  auto it = spec.thresholds.find(t.id);
  const PiecewiseLinear& g = it == spec.thresholds.end() ? spec.fallback : it->second;
  return t.va < g(t.vb) ? t.a : t.b;
}

const PiecewiseLinear& threshold_for(const TaskIndependent& spec, int id) {
  auto it = spec.thresholds.find(id);
  return it == spec.thresholds.end() ? spec.fallback : it->second;
}

int constant_machine(const Constant& spec, const Task& t) {
  auto it = spec.overrides.find(t.id);
  Side side = it == spec.overrides.end() ? spec.fallback : it->second;
  return side == Side::A ? t.a : t.b;
}

int window_machine(const WindowFixture& spec, const Task& t) {
  if (t.is_loop()) return t.a;
  return (t.va >= spec.lo && t.va <= spec.hi) ? t.a : t.b;
}

Allocation allocate_bundling(const Bundling1D& spec, const Instance& instance) {
  int n = instance.n();
  std::vector<int> machine_of(instance.size(), -1);
  std::vector<bool> grouped(instance.size(), false);
  for (const auto& g : spec.groups) {
    std::vector<std::size_t> members;
    for (int id : g.tasks) members.push_back(resolve_task(instance, id));
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    Value on = 0;
    Value off = 0;
    std::vector<int> on_choice;
    std::vector<int> off_choice;
    for (auto idx : members) {
      if (grouped[idx]) throw Error(Errc::InvalidSpec, task_label(instance.task(idx).id) + " is in two bundles");
      grouped[idx] = true;
      const Task& t = instance.task(idx);
      if (!t.supports(g.machine)) {
        throw Error(Errc::InvalidSpec, "bundle machine is not an endpoint of " + task_label(t.id));
      }
      int other = t.other(g.machine);
      on += weight_of(spec.lambda, g.machine, n) * t.value_for(g.machine);
      off += weight_of(spec.lambda, other, n) * t.value_for(other);
      on_choice.push_back(g.machine);
      off_choice.push_back(other);
    }
    bool to_machine = on < off || (on == off && on_choice <= off_choice);
    for (std::size_t k = 0; k < members.size(); ++k) {
      machine_of[members[k]] = to_machine ? on_choice[k] : off_choice[k];
    }
  }
  for (std::size_t i = 0; i < instance.size(); ++i) {
    if (grouped[i]) continue;
    const Task& t = instance.task(i);
    machine_of[i] = weighted_min_machine(t, weight_of(spec.lambda, t.a, n), weight_of(spec.lambda, t.b, n));
  }
  return Allocation{machine_of};
}

void check_monotone(const PiecewiseLinear& g, const std::string& where) {
  if (g.points.empty()) throw Error(Errc::InvalidSpec, where + ": threshold has no breakpoints");
  if (g.points.front().first != 0) throw Error(Errc::InvalidSpec, where + ": threshold must start at x = 0");
  if (g.points.front().second < 0) throw Error(Errc::InvalidSpec, where + ": threshold must be nonnegative at 0");
  for (std::size_t k = 1; k < g.points.size(); ++k) {
    if (g.points[k].first <= g.points[k - 1].first) {
      throw Error(Errc::InvalidSpec, where + ": breakpoints must strictly increase");
    }
    if (g.points[k].second < g.points[k - 1].second) {
      throw Error(Errc::InvalidSpec, where + ": threshold is not monotone nondecreasing");
    }
  }
}

void check_lambda(const std::vector<Value>& lambda) {
  for (const auto& l : lambda) {
    if (l <= 0) throw Error(Errc::InvalidSpec, "multipliers must be strictly positive");
  }
}

}  // namespace

Value PiecewiseLinear::operator()(const Value& x) const {
  const auto& p = points;
  if (p.size() == 1 || x <= p.front().first) return p.front().second;
  for (std::size_t k = 1; k < p.size(); ++k) {
    if (x <= p[k].first) {
      const auto& [x0, y0] = p[k - 1];
      const auto& [x1, y1] = p[k];
      return Value(y0 + (y1 - y0) * (x - x0) / (x1 - x0));
    }
  }
  const auto& [x0, y0] = p[p.size() - 2];
  const auto& [x1, y1] = p.back();
  return Value(y1 + (y1 - y0) * (x - x1) / (x1 - x0));
}

std::optional<Value> PiecewiseLinear::upper_inverse(const Value& y) const {
  const auto& p = points;
  if (p.front().second > y) return Value(0);
  std::size_t k = 0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j].second <= y) k = j;
  }
  if (k + 1 < p.size()) {
    const auto& [x0, y0] = p[k];
    const auto& [x1, y1] = p[k + 1];
    return Value(x0 + (y - y0) * (x1 - x0) / (y1 - y0));
  }
  if (p.size() == 1) return std::nullopt;
  const auto& [x0, y0] = p[p.size() - 2];
  const auto& [x1, y1] = p.back();
  if (y1 == y0) return std::nullopt;
  return Value(x1 + (y - y1) * (x1 - x0) / (y1 - y0));
}

PiecewiseLinear PiecewiseLinear::identity() { return PiecewiseLinear{{{Value(0), Value(0)}, {Value(1), Value(1)}}}; }

std::string variant_name(const MechanismSpec& spec) {
  return std::visit(Overloaded{[](const Vcg&) { return std::string("vcg"); },
                               [](const AffineMinimizer&) { return std::string("affine"); },
                               [](const TaskIndependent&) { return std::string("task_independent"); },
                               [](const Bundling1D&) { return std::string("bundling"); },
                               [](const Constant&) { return std::string("constant"); },
                               [](const WindowFixture&) { return std::string("fixture"); }},
                    spec);
}

void validate_spec(const MechanismSpec& spec) {
  std::visit(Overloaded{[](const Vcg&) {},
                        [](const AffineMinimizer& a) {
                          check_lambda(a.lambda);
                          for (const auto& g : a.gamma) {
                            if (g.value < 0) throw Error(Errc::InvalidSpec, "per-assignment constants must be >= 0");
                          }
                          for (const auto& t : a.table) {
                            if (t.assignment.size() > 4) {
                              throw Error(Errc::InvalidSpec, "per-allocation tables are limited to four tasks");
                            }
                          }
                        },
                        [](const TaskIndependent& ti) {
                          check_monotone(ti.fallback, "default threshold");
                          for (const auto& [id, g] : ti.thresholds) check_monotone(g, task_label(id));
                        },
                        [](const Bundling1D& b) { check_lambda(b.lambda); },
                        [](const Constant&) {},
                        [](const WindowFixture& w) {
                          if (w.hi < w.lo) throw Error(Errc::InvalidSpec, "window bounds are reversed");
                        }},
             spec);
}

Allocation allocate(const MechanismSpec& spec, const Instance& instance) {
  return std::visit(
      Overloaded{[&](const Vcg&) {
                   std::vector<int> out;
                   out.reserve(instance.size());
                   for (const auto& t : instance.tasks()) out.push_back(weighted_min_machine(t, Value(1), Value(1)));
                   return Allocation{out};
                 },
                 [&](const AffineMinimizer& a) { return solve_affine(make_problem(a, instance), -1).alloc; },
                 [&](const TaskIndependent& ti) {
                   std::vector<int> out;
                   for (const auto& t : instance.tasks()) out.push_back(task_independent_machine(ti, t));
                   return Allocation{out};
                 },
                 [&](const Bundling1D& b) { return allocate_bundling(b, instance); },
                 [&](const Constant& c) {
                   std::vector<int> out;
                   for (const auto& t : instance.tasks()) out.push_back(constant_machine(c, t));
                   return Allocation{out};
                 },
                 [&](const WindowFixture& w) {
                   std::vector<int> out;
                   for (const auto& t : instance.tasks()) out.push_back(window_machine(w, t));
                   return Allocation{out};
                 }},
      spec);
}

std::vector<Value> payments(const MechanismSpec& spec, const Instance& instance, const Allocation& alloc) {
  validate_allocation(instance, alloc);
  std::size_t n = static_cast<std::size_t>(instance.n());
  return std::visit(
      Overloaded{
          [&](const Vcg&) {
            std::vector<Value> pay(n, Value(0));
            for (std::size_t j = 0; j < instance.size(); ++j) {
              const Task& t = instance.task(j);
              if (t.is_loop()) continue;
              int winner = alloc[j];
              pay[static_cast<std::size_t>(winner)] += t.value_for(t.other(winner));
            }
            return pay;
          },
          [&](const AffineMinimizer& a) {
            AffineProblem problem = make_problem(a, instance);
            AffineResult chosen = solve_affine(problem, -1);
            if (chosen.alloc != alloc) {
              throw Error(Errc::InvalidAllocation, "payments requested for an allocation the minimizer does not choose");
            }
            std::vector<Value> pay(n, Value(0));
            for (std::size_t i = 0; i < n; ++i) {
              Value own = 0;
              for (std::size_t j = 0; j < instance.size(); ++j) {
                if (alloc[j] == static_cast<int>(i)) own += problem.weight[i] * instance.task(j).value_for(alloc[j]);
              }
              Value pivot = solve_affine(problem, static_cast<int>(i)).objective;
              pay[i] = (pivot - (chosen.objective - own)) / problem.weight[i];
            }
            return pay;
          },
          [&](const TaskIndependent& ti) {
            std::vector<Value> pay(n, Value(0));
            for (std::size_t j = 0; j < instance.size(); ++j) {
              const Task& t = instance.task(j);
              if (t.is_loop()) continue;
              const PiecewiseLinear& g = threshold_for(ti, t.id);
              if (alloc[j] == t.a) {
                pay[static_cast<std::size_t>(t.a)] += g(t.vb);
              } else {
                auto critical = g.upper_inverse(t.va);
                if (!critical) throw Error(Errc::Unbounded, "critical value of " + task_label(t.id) + " is unbounded");
                pay[static_cast<std::size_t>(t.b)] += *critical;
              }
            }
            return pay;
          },
          [&](const auto&) -> std::vector<Value> {
            throw Error(Errc::UnsupportedVariant, "no payment rule for the " + variant_name(spec) + " variant");
          }},
      spec);
}

SpecOracle::SpecOracle(MechanismSpec spec) : spec_(std::move(spec)) { validate_spec(spec_); }

Allocation SpecOracle::allocate(const Instance& instance) const { return truthlab::allocate(spec_, instance); }

int SpecOracle::allocate_task(const Instance& instance, std::size_t index) const {
  const Task& t = instance.task(index);
  if (std::holds_alternative<Vcg>(spec_)) return weighted_min_machine(t, Value(1), Value(1));
  if (const auto* ti = std::get_if<TaskIndependent>(&spec_)) return task_independent_machine(*ti, t);
  if (const auto* c = std::get_if<Constant>(&spec_)) return constant_machine(*c, t);
  if (const auto* w = std::get_if<WindowFixture>(&spec_)) return window_machine(*w, t);
  if (const auto* a = std::get_if<AffineMinimizer>(&spec_)) {
    if (a->groups.empty() && a->table.empty()) {
      AffineProblem problem = make_problem(*a, instance);
      Value ca = problem.task_cost(index, t.a, -1);
      Value cb = problem.task_cost(index, t.b, -1);
      if (t.is_loop() || ca == cb) return std::min(t.a, t.b);
      return ca < cb ? t.a : t.b;
    }
  }
  return allocate(instance)[index];
}

std::shared_ptr<const Oracle> make_oracle(const MechanismSpec& spec) { return std::make_shared<SpecOracle>(spec); }

void check_single_machine_deviation(const Instance& t, const Instance& t_prime, int machine) {
  if (t.n() != t_prime.n() || t.size() != t_prime.size()) {
    throw Error(Errc::BadDeviation, "instances differ in shape");
  }
  if (machine < 0 || machine >= t.n()) throw Error(Errc::BadDeviation, "machine index out of range");
  for (std::size_t j = 0; j < t.size(); ++j) {
    const Task& x = t.task(j);
    const Task& y = t_prime.task(j);
    if (x.id != y.id || x.a != y.a || x.b != y.b) throw Error(Errc::BadDeviation, "instances differ in task structure");
    if (x.a != machine && x.va != y.va) {
      throw Error(Errc::BadDeviation, task_label(x.id) + ": another machine's value changed");
    }
    if (x.b != machine && x.vb != y.vb) {
      throw Error(Errc::BadDeviation, task_label(x.id) + ": another machine's value changed");
    }
  }
}

UtilityComparison truthfulness_probe(const Oracle& oracle, const PaymentRule& pay, const Instance& truth,
                                     int machine, const Instance& deviated) {
  check_single_machine_deviation(truth, deviated, machine);
  auto utility = [&](const Instance& report) {
    Allocation alloc = oracle.allocate(report);
    Value u = pay(report, alloc)[static_cast<std::size_t>(machine)];
    for (std::size_t j = 0; j < truth.size(); ++j) {
      if (alloc[j] == machine) u -= truth.task(j).value_for(machine);
    }
    return u;
  };
  UtilityComparison out;
  out.truth_utility = utility(truth);
  out.deviation_utility = utility(deviated);
  out.truthful = out.truth_utility >= out.deviation_utility;
  return out;
}

UtilityComparison truthfulness_probe(const MechanismSpec& spec, const Instance& truth, int machine,
                                     const Instance& deviated) {
  if (std::holds_alternative<Bundling1D>(spec) || std::holds_alternative<Constant>(spec) ||
      std::holds_alternative<WindowFixture>(spec)) {
    throw Error(Errc::UnsupportedVariant, "no payment rule for the " + variant_name(spec) + " variant");
  }
  SpecOracle oracle(spec);
  PaymentRule rule = [&](const Instance& inst, const Allocation& alloc) { return payments(spec, inst, alloc); };
  return truthfulness_probe(oracle, rule, truth, machine, deviated);
}

}  // namespace truthlab
