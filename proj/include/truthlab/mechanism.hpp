#pragma once

#include "truthlab/instance.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace truthlab {

/// A deterministic allocation rule. Implementations must be reentrant.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual Allocation allocate(const Instance& instance) const = 0;
  /// Machine receiving one task. Task-independent rules override this to
  /// avoid computing the whole allocation during bisection.
  virtual int allocate_task(const Instance& instance, std::size_t index) const {
    return allocate(instance)[index];
  }
};

struct Vcg {
  friend bool operator==(const Vcg&, const Vcg&) = default;
};

struct GammaEntry {
  int task = 0;
  int machine = 0;
  Value value;
  friend bool operator==(const GammaEntry&, const GammaEntry&) = default;
};

/// When a group term fires, relative to its machine r: some but not all group
/// tasks on r, all of them on r, or none of them on r.
enum class GroupWhen { Split, AllOn, AllAway };

/// Additive constant tied to a pattern over several tasks. A positive Split
/// constant penalizes splitting a bundle; a negative one rewards it.
struct GroupTerm {
  std::vector<int> tasks;
  int machine = 0;
  GroupWhen when = GroupWhen::Split;
  Value constant;
  friend bool operator==(const GroupTerm&, const GroupTerm&) = default;
};

/// Full per-allocation constant, keyed by the machine of each task in id
/// order. Only accepted on instances with at most four tasks.
struct TableEntry {
  std::vector<int> assignment;
  Value value;
  friend bool operator==(const TableEntry&, const TableEntry&) = default;
};

/// Minimizes sum_i lambda_i t_i(A_i) + constants(A).
struct AffineMinimizer {
  std::vector<Value> lambda;
  std::vector<GammaEntry> gamma;
  std::vector<GroupTerm> groups;
  std::vector<TableEntry> table;
  friend bool operator==(const AffineMinimizer&, const AffineMinimizer&) = default;
};

/// Nondecreasing piecewise-linear function through (x_k, y_k), starting at
/// x = 0 and extended past the last point with the last slope.
struct PiecewiseLinear {
  std::vector<std::pair<Value, Value>> points;

  Value operator()(const Value& x) const;
  /// sup{x >= 0 : f(x) <= y}; nullopt when unbounded.
  std::optional<Value> upper_inverse(const Value& y) const;
  static PiecewiseLinear identity();
  friend bool operator==(const PiecewiseLinear&, const PiecewiseLinear&) = default;
};

/// Task j goes to endpoint a iff va < g_j(vb); equality goes to b.
struct TaskIndependent {
  std::map<int, PiecewiseLinear> thresholds;
  PiecewiseLinear fallback = PiecewiseLinear::identity();
  friend bool operator==(const TaskIndependent&, const TaskIndependent&) = default;
};

/// Each group goes entirely to `machine` or entirely to the other endpoints,
/// whichever has the smaller weighted sum. Ungrouped tasks go to the smaller
/// weighted value.
struct BundleGroup {
  std::vector<int> tasks;
  int machine = 0;
  friend bool operator==(const BundleGroup&, const BundleGroup&) = default;
};

struct Bundling1D {
  std::vector<Value> lambda;
  std::vector<BundleGroup> groups;
  friend bool operator==(const Bundling1D&, const Bundling1D&) = default;
};

enum class Side { A, B };

struct Constant {
  Side fallback = Side::B;
  std::map<int, Side> overrides;
  friend bool operator==(const Constant&, const Constant&) = default;
};

/// Non-monotone test fixture: a task goes to endpoint a iff va lies in
/// [lo, hi].
struct WindowFixture {
  Value lo = 1;
  Value hi = 2;
  friend bool operator==(const WindowFixture&, const WindowFixture&) = default;
};

using MechanismSpec = std::variant<Vcg, AffineMinimizer, TaskIndependent, Bundling1D, Constant, WindowFixture>;

std::string variant_name(const MechanismSpec& spec);

/// Checks construction invariants (positive multipliers, monotone thresholds,
/// nonnegative per-assignment constants). Throws InvalidSpec.
void validate_spec(const MechanismSpec& spec);

Allocation allocate(const MechanismSpec& spec, const Instance& instance);

std::vector<Value> payments(const MechanismSpec& spec, const Instance& instance, const Allocation& alloc);

class SpecOracle : public Oracle {
 public:
  explicit SpecOracle(MechanismSpec spec);
  Allocation allocate(const Instance& instance) const override;
  int allocate_task(const Instance& instance, std::size_t index) const override;
  const MechanismSpec& spec() const { return spec_; }

 private:
  MechanismSpec spec_;
};

std::shared_ptr<const Oracle> make_oracle(const MechanismSpec& spec);

using PaymentRule = std::function<std::vector<Value>(const Instance&, const Allocation&)>;

struct UtilityComparison {
  Value truth_utility;
  Value deviation_utility;
  bool truthful = true;
};

/// Utility of `machine` when it reports its true values versus the deviated
/// report. `deviated` must differ from `truth` only in that machine's values.
UtilityComparison truthfulness_probe(const MechanismSpec& spec, const Instance& truth, int machine,
                                     const Instance& deviated);
UtilityComparison truthfulness_probe(const Oracle& oracle, const PaymentRule& pay, const Instance& truth,
                                     int machine, const Instance& deviated);

/// Throws BadDeviation unless the two instances have identical structure and
/// differ only in values belonging to `machine`.
void check_single_machine_deviation(const Instance& t, const Instance& t_prime, int machine);

}  // namespace truthlab
