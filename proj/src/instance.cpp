#include "truthlab/instance.hpp"

#include "truthlab/error.hpp"

#include <algorithm>
#include <set>

namespace truthlab {

Instance::Instance(int machine_count, std::vector<Task> tasks) : n_(machine_count), tasks_(std::move(tasks)) {
  if (n_ < 1) throw Error(Errc::InvalidInstance, "machine count must be positive");
  std::sort(tasks_.begin(), tasks_.end(), [](const Task& x, const Task& y) { return x.id < y.id; });
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    const Task& t = tasks_[i];
    if (i > 0 && tasks_[i - 1].id == t.id) {
      throw Error(Errc::InvalidInstance, "duplicate task id " + std::to_string(t.id));
    }
    if (t.a < 0 || t.a >= n_ || t.b < 0 || t.b >= n_) {
      throw Error(Errc::InvalidInstance, "task " + std::to_string(t.id) + " has an endpoint outside [0, n)");
    }
    if (t.va < 0 || t.vb < 0) {
      throw Error(Errc::InvalidInstance, "task " + std::to_string(t.id) + " has a negative value");
    }
    if (t.is_loop() && t.va != t.vb) {
      throw Error(Errc::InvalidInstance, "loop task " + std::to_string(t.id) + " must carry one value");
    }
  }
}

std::optional<std::size_t> Instance::find(int id) const {
  auto it = std::lower_bound(tasks_.begin(), tasks_.end(), id, [](const Task& t, int key) { return t.id < key; });
  if (it == tasks_.end() || it->id != id) return std::nullopt;
  return static_cast<std::size_t>(it - tasks_.begin());
}

std::size_t Instance::index_of(int id) const {
  auto idx = find(id);
  if (!idx) throw Error(Errc::InvalidInstance, "no task with id " + std::to_string(id));
  return *idx;
}

void Instance::set_value(std::size_t index, int machine, const Value& v) {
  Task& t = tasks_.at(index);
  if (!t.supports(machine)) {
    throw Error(Errc::InvalidInstance,
                "machine " + std::to_string(machine) + " is not an endpoint of task " + std::to_string(t.id));
  }
  if (v < 0) throw Error(Errc::NegativeValue, "value for task " + std::to_string(t.id) + " would be negative");
  if (t.a == machine) t.va = v;
  if (t.b == machine) t.vb = v;
}

void Instance::set_values(std::size_t index, const Value& va, const Value& vb) {
  Task& t = tasks_.at(index);
  if (va < 0 || vb < 0) throw Error(Errc::NegativeValue, "value for task " + std::to_string(t.id) + " would be negative");
  if (t.is_loop() && va != vb) throw Error(Errc::InvalidInstance, "loop values must agree");
  t.va = va;
  t.vb = vb;
}

void validate_allocation(const Instance& instance, const Allocation& alloc) {
  if (alloc.size() != instance.size()) {
    throw Error(Errc::InvalidAllocation, "allocation covers " + std::to_string(alloc.size()) + " tasks, instance has " +
                                             std::to_string(instance.size()));
  }
  for (std::size_t i = 0; i < alloc.size(); ++i) {
    if (!instance.task(i).supports(alloc[i])) {
      throw Error(Errc::InvalidAllocation, "task " + std::to_string(instance.task(i).id) + " assigned to machine " +
                                               std::to_string(alloc[i]) + " outside its support");
    }
  }
}

std::vector<Value> loads(const Instance& instance, const Allocation& alloc) {
  validate_allocation(instance, alloc);
  std::vector<Value> load(static_cast<std::size_t>(instance.n()), Value(0));
  for (std::size_t i = 0; i < alloc.size(); ++i) {
    load[static_cast<std::size_t>(alloc[i])] += instance.task(i).value_for(alloc[i]);
  }
  return load;
}

Value makespan(const Instance& instance, const Allocation& alloc) {
  auto load = loads(instance, alloc);
  Value best = 0;
  for (const auto& l : load) {
    if (l > best) best = l;
  }
  return best;
}

namespace {

struct BranchSearch {
  const Instance& instance;
  std::vector<std::size_t> free_tasks;
  std::vector<Value> load;
  Allocation current;
  Allocation best_alloc;
  Value best;
  bool have_best = false;

  Value current_max() const {
    Value m = 0;
    for (const auto& l : load) {
      if (l > m) m = l;
    }
    return m;
  }

  void recurse(std::size_t depth, const Value& running_max) {
    if (have_best && running_max >= best) return;
    if (depth == free_tasks.size()) {
      best = running_max;
      best_alloc = current;
      have_best = true;
      return;
    }
    std::size_t idx = free_tasks[depth];
    const Task& t = instance.task(idx);
    int first = std::min(t.a, t.b);
    int second = std::max(t.a, t.b);
    for (int m : {first, second}) {
      auto slot = static_cast<std::size_t>(m);
      load[slot] += t.value_for(m);
      current.machine[idx] = m;
      Value next_max = running_max;
      if (load[slot] > next_max) next_max = load[slot];
      recurse(depth + 1, next_max);
      load[slot] -= t.value_for(m);
    }
  }
};

}  // namespace

OptResult opt_makespan(const Instance& instance, std::uint64_t cap) {
  BranchSearch search{instance, {}, std::vector<Value>(static_cast<std::size_t>(instance.n()), Value(0)),
                      Allocation{std::vector<int>(instance.size(), -1)}, {}, Value(0)};
  for (std::size_t i = 0; i < instance.size(); ++i) {
    const Task& t = instance.task(i);
    int pinned = -1;
    if (t.is_loop()) {
      pinned = t.a;
    } else if (t.va == 0 || t.vb == 0) {
      if (t.va == 0 && t.vb == 0) {
        pinned = std::min(t.a, t.b);
      } else {
        pinned = t.va == 0 ? t.a : t.b;
      }
    }
    if (pinned >= 0) {
      search.current.machine[i] = pinned;
      search.load[static_cast<std::size_t>(pinned)] += t.value_for(pinned);
    } else {
      search.free_tasks.push_back(i);
    }
  }
  if (search.free_tasks.size() >= 64 || (std::uint64_t{1} << search.free_tasks.size()) > cap) {
    throw Error(Errc::InstanceTooLarge, std::to_string(search.free_tasks.size()) +
                                            " tasks need enumeration, beyond the configured cap");
  }
  // Heavier tasks first prunes earlier; the witness is still a true optimum.
  std::stable_sort(search.free_tasks.begin(), search.free_tasks.end(), [&](std::size_t x, std::size_t y) {
    const Task& tx = instance.task(x);
    const Task& ty = instance.task(y);
    Value mx = tx.va < tx.vb ? tx.va : tx.vb;
    Value my = ty.va < ty.vb ? ty.va : ty.vb;
    return mx > my;
  });
  search.recurse(0, search.current_max());
  return OptResult{search.best, search.best_alloc};
}

}  // namespace truthlab
