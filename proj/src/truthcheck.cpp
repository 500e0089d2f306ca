#include "truthlab/truthcheck.hpp"

#include "truthlab/error.hpp"
#include "truthlab/parallel.hpp"
#include "truthlab/rng.hpp"

#include <algorithm>
#include <set>

namespace truthlab {

namespace {

Value sample_value(Rng& rng, SampleMode mode) {
  if (mode == SampleMode::Grid) return Value(static_cast<long>(rng.uniform(0, 16)), 4);
  Value v(static_cast<long>(rng.uniform(0, 4 * 4096)), 4096);
  v.canonicalize();
  return v;
}

void resample_machine(Instance& inst, int machine, const std::vector<bool>& frozen, Rng& rng, SampleMode mode) {
  for (std::size_t j = 0; j < inst.size(); ++j) {
    if (frozen[j] || !inst.task(j).supports(machine)) continue;
    inst.set_value(j, machine, sample_value(rng, mode));
  }
}

// Moves exact ties off the boundary. Only machine i's values may differ
// between t and t', so ties on i's tasks are broken in the profile where they
// occur, and ties elsewhere are broken identically in both.
void perturb_ties(Instance& t, Instance& t_prime, int machine, const std::vector<bool>& frozen) {
  const Value bump = pow2(-20);
  for (std::size_t j = 0; j < t.size(); ++j) {
    const Task& x = t.task(j);
    if (x.is_loop() || frozen[j]) continue;
    if (x.supports(machine)) {
      if (x.va == x.vb) t.set_value(j, machine, x.value_for(machine) + bump);
      const Task& y = t_prime.task(j);
      if (y.va == y.vb) t_prime.set_value(j, machine, y.value_for(machine) + bump);
    } else if (x.va == x.vb) {
      Value v = x.va + bump;
      t.set_value(j, x.a, v);
      t_prime.set_value(j, x.a, v);
    }
  }
}

}  // namespace

Value wmon_sum(const Oracle& oracle, const Instance& t, const Instance& t_prime, int machine) {
  check_single_machine_deviation(t, t_prime, machine);
  Allocation a = oracle.allocate(t);
  Allocation a_prime = oracle.allocate(t_prime);
  Value sum = 0;
  for (std::size_t j = 0; j < t.size(); ++j) {
    const Task& x = t.task(j);
    if (!x.supports(machine)) continue;
    int before = a[j] == machine ? 1 : 0;
    int after = a_prime[j] == machine ? 1 : 0;
    if (before == after) continue;
    sum += (after - before) * (t_prime.task(j).value_for(machine) - x.value_for(machine));
  }
  return sum;
}

std::optional<WmonViolation> wmon_pair(const Oracle& oracle, const Instance& t, const Instance& t_prime, int machine) {
  Value sum = wmon_sum(oracle, t, t_prime, machine);
  if (sum <= 0) return std::nullopt;
  return WmonViolation{machine, t, t_prime, sum};
}

WmonReport wmon_sweep(const Oracle& oracle, const Instance& base, const SweepConfig& config) {
  if (config.trials < 1) throw Error(Errc::PreconditionViolated, "a sweep needs at least one trial");
  std::vector<bool> frozen(base.size(), false);
  for (int id : config.frozen) {
    if (auto idx = base.find(id)) frozen[*idx] = true;
  }
  std::vector<int> movable;
  for (int i = 0; i < base.n(); ++i) {
    for (std::size_t j = 0; j < base.size(); ++j) {
      if (!frozen[j] && base.task(j).supports(i)) {
        movable.push_back(i);
        break;
      }
    }
  }
  WmonReport report;
  report.trials = config.trials;
  if (movable.empty()) return report;

  std::vector<std::optional<WmonViolation>> found(config.trials);
  parallel_for(config.trials, config.jobs, [&](std::size_t k) {
    Rng rng(config.seed, stream_key(0x57a7e, k));
    Instance t = base;
    if (config.resample_context) {
      for (std::size_t j = 0; j < t.size(); ++j) {
        if (frozen[j]) continue;
        const Task& x = t.task(j);
        if (x.is_loop()) {
          t.set_value(j, x.a, sample_value(rng, config.mode));
        } else {
          t.set_values(j, sample_value(rng, config.mode), sample_value(rng, config.mode));
        }
      }
    }
    int machine = movable[rng.uniform(0, movable.size() - 1)];
    if (config.resample_context) resample_machine(t, machine, frozen, rng, config.mode);
    Instance t_prime = t;
    resample_machine(t_prime, machine, frozen, rng, config.mode);
    perturb_ties(t, t_prime, machine, frozen);
    found[k] = wmon_pair(oracle, t, t_prime, machine);
  });
  for (auto& v : found) {
    if (v) report.violations.push_back(std::move(*v));
  }
  return report;
}

WmonReport restriction_check(const Oracle& oracle, const Instance& instance, const std::vector<int>& fixed,
                             std::size_t trials, std::uint64_t seed, int jobs) {
  SweepConfig config;
  config.trials = trials;
  config.seed = seed;
  config.jobs = jobs;
  config.frozen = fixed;
  return wmon_sweep(oracle, instance, config);
}

AgreementResult agreement_check(const Oracle& oracle, const Instance& t, int machine, const std::vector<int>& decrease,
                                const std::vector<int>& increase, const std::vector<Value>& deltas) {
  if (deltas.size() != decrease.size() + increase.size()) {
    throw Error(Errc::PreconditionViolated, "one delta per task in S and S' is required");
  }
  Allocation before = oracle.allocate(t);
  AgreementResult result;
  result.t_prime = t;
  std::vector<std::size_t> touched;
  for (std::size_t k = 0; k < decrease.size() + increase.size(); ++k) {
    bool lower = k < decrease.size();
    int id = lower ? decrease[k] : increase[k - decrease.size()];
    std::size_t idx = t.index_of(id);
    const Task& x = t.task(idx);
    if (!x.supports(machine) || x.is_loop()) {
      throw Error(Errc::PreconditionViolated, "task " + std::to_string(id) + " cannot move to or from the machine");
    }
    if (lower != (before[idx] == machine)) {
      throw Error(Errc::PreconditionViolated, "task " + std::to_string(id) + (lower ? " is not won" : " is already won") +
                                                  " by the machine at t");
    }
    if (deltas[k] <= 0) throw Error(Errc::PreconditionViolated, "deltas must be strictly positive");
    Value v = x.value_for(machine) + (lower ? Value(-deltas[k]) : deltas[k]);
    if (v < 0) throw Error(Errc::PreconditionViolated, "decrease below zero on task " + std::to_string(id));
    result.t_prime.set_value(idx, machine, v);
    touched.push_back(idx);
  }
  Allocation after = oracle.allocate(result.t_prime);
  for (auto idx : touched) {
    if ((before[idx] == machine) != (after[idx] == machine)) {
      result.pass = false;
      result.disagreeing_tasks.push_back(t.task(idx).id);
    }
  }
  return result;
}

Json wmon_report_to_json(const WmonReport& report) {
  Json violations = Json::array();
  for (const auto& v : report.violations) {
    violations.push_back({{"machine", v.machine},
                          {"t", instance_to_json(v.t)},
                          {"t_prime", instance_to_json(v.t_prime)},
                          {"sum", value_to_json(v.sum)}});
  }
  return Json{{"trials", report.trials}, {"violations", violations}};
}

}  // namespace truthlab
