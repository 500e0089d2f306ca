#pragma once

#include "truthlab/value.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace truthlab {

/// One task = one edge of the multi-graph. Machines other than the two
/// endpoints are excluded from the task's support; a == b is a loop.
struct Task {
  int id = 0;
  int a = 0;
  int b = 0;
  Value va;
  Value vb;

  bool is_loop() const { return a == b; }
  bool supports(int machine) const { return machine == a || machine == b; }
  /// Value of `machine` for this task; machine must be an endpoint.
  const Value& value_for(int machine) const { return machine == a ? va : vb; }
  /// The endpoint that is not `machine` (itself for loops).
  int other(int machine) const { return machine == a ? b : a; }

  friend bool operator==(const Task&, const Task&) = default;
};

/// A scheduling instance in multi-graph form. Tasks are kept sorted by id, so
/// positional order is id order everywhere in the library.
class Instance {
 public:
  Instance() = default;
  Instance(int machine_count, std::vector<Task> tasks);

  int n() const { return n_; }
  std::size_t size() const { return tasks_.size(); }
  const std::vector<Task>& tasks() const { return tasks_; }
  const Task& task(std::size_t index) const { return tasks_[index]; }

  /// Position of the task with this id; throws InvalidInstance if absent.
  std::size_t index_of(int id) const;
  std::optional<std::size_t> find(int id) const;

  /// Sets `machine`'s value on task `index` (both sides for a loop).
  void set_value(std::size_t index, int machine, const Value& v);
  void set_values(std::size_t index, const Value& va, const Value& vb);

  friend bool operator==(const Instance&, const Instance&) = default;

 private:
  int n_ = 1;
  std::vector<Task> tasks_;
};

/// Machine chosen for each task, aligned with Instance::tasks().
struct Allocation {
  std::vector<int> machine;

  std::size_t size() const { return machine.size(); }
  int operator[](std::size_t index) const { return machine[index]; }
  friend bool operator==(const Allocation&, const Allocation&) = default;
  friend auto operator<=>(const Allocation&, const Allocation&) = default;
};

/// Throws InvalidAllocation unless every task is assigned inside its support.
void validate_allocation(const Instance& instance, const Allocation& alloc);

/// Per-machine completion times.
std::vector<Value> loads(const Instance& instance, const Allocation& alloc);

Value makespan(const Instance& instance, const Allocation& alloc);

struct OptResult {
  Value value;
  Allocation witness;
};

inline constexpr std::uint64_t kDefaultEnumerationCap = std::uint64_t{1} << 26;

/// Exact optimal makespan. Tasks with a zero-valued endpoint are pinned to it
/// (this never raises any load, so some optimum agrees); the remaining
/// two-choice tasks are searched exhaustively with bound pruning. Throws
/// InstanceTooLarge when 2^(free tasks) exceeds `cap`.
OptResult opt_makespan(const Instance& instance, std::uint64_t cap = kDefaultEnumerationCap);

}  // namespace truthlab
