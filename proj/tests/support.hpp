#pragma once

#include "truthlab/instance.hpp"
#include "truthlab/rng.hpp"

#include <vector>

namespace testing {

using truthlab::Allocation;
using truthlab::Instance;
using truthlab::Task;
using truthlab::Value;

/// Canonical a/b; mpq_class(a, b) alone leaves the fraction unreduced.
inline Value frac(long a, long b) { return Value(a) / b; }

/// The four-task example on three machines: machine 0 can run everything,
/// machine 1 only tasks 1 and 2, machine 2 only tasks 3 and 4.
inline Instance four_task_example() {
  return Instance(3, {Task{1, 0, 1, Value(5), Value(1)}, Task{2, 0, 1, Value(3), Value(2)},
                      Task{3, 0, 2, Value(7), Value(9)}, Task{4, 0, 2, Value(4), Value(6)}});
}

/// Plain enumeration of every allocation; no pinning, no pruning.
inline Value brute_force_opt(const Instance& inst) {
  const std::size_t m = inst.size();
  Value best = -1;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    std::vector<Value> load(static_cast<std::size_t>(inst.n()), Value(0));
    for (std::size_t j = 0; j < m; ++j) {
      const Task& t = inst.task(j);
      int machine = (mask >> j) & 1 ? t.b : t.a;
      load[static_cast<std::size_t>(machine)] += t.value_for(machine);
    }
    Value worst = 0;
    for (const auto& l : load) worst = l > worst ? l : worst;
    if (best < 0 || worst < best) best = worst;
  }
  return best;
}

/// Values k/4 with k in [0, 16], occasionally zero; ids 1..m.
inline Instance random_instance(std::uint64_t seed, int n, int m, bool loops = false) {
  truthlab::Rng rng(seed, 77);
  std::vector<Task> tasks;
  for (int id = 1; id <= m; ++id) {
    int a = static_cast<int>(rng.uniform(0, static_cast<std::uint64_t>(n - 1)));
    int b = static_cast<int>(rng.uniform(0, static_cast<std::uint64_t>(n - 1)));
    if (!loops && a == b) b = (a + 1) % n;
    Value va = frac(static_cast<long>(rng.uniform(0, 16)), 4);
    Value vb = a == b ? va : frac(static_cast<long>(rng.uniform(0, 16)), 4);
    tasks.push_back(Task{id, a, b, va, vb});
  }
  return Instance(n, std::move(tasks));
}

}  // namespace testing
