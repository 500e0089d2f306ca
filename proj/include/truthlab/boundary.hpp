#pragma once

#include "truthlab/io.hpp"
#include "truthlab/mechanism.hpp"

#include <functional>
#include <vector>

namespace truthlab {

/// Probes the critical value of one task for one of its endpoints (the
/// probed side) while every other value of `context` stays fixed.
struct BoundaryProbe {
  const Oracle* oracle = nullptr;
  Instance context;
  std::size_t task = 0;  // index into context
  int side = 0;          // probed machine
  Value tolerance = pow2(-32);
};

BoundaryProbe make_probe(const Oracle& oracle, const Instance& context, int task_id, int side,
                         const Value& tolerance = pow2(-32));

struct CriticalInterval {
  Value lo;
  Value hi;
  bool unbounded = false;  // still on the probed side at the cap n*s + 1
  /// Simplest rational in [lo, hi]; exact whenever the true threshold is the
  /// simplest number in the bracket (grid values, integers).
  Value estimate() const;
};

/// Sets the other endpoint's value to s and bisects the probed side's value.
/// The task goes to the probed side at lo and away at hi, hi - lo <= tolerance.
/// Throws NotMonotone when the pilot probes contradict monotonicity and
/// Unbounded when the task never leaves the probed side below n*s + 1.
CriticalInterval critical_value(const BoundaryProbe& probe, const Value& s);

/// Same, but reports an unbounded threshold as a flagged interval [cap, cap].
CriticalInterval critical_value_or_cap(const BoundaryProbe& probe, const Value& s);

/// Flags a jump of more than 64 * 2^-20 between s - 2^-20, s, s + 2^-20.
bool suspected_discontinuity(const BoundaryProbe& probe, const Value& s);

struct TableEntryValue {
  Value z;
  Value psi;            // eps * floor(estimate / eps)
  bool breach = false;  // unbounded, or estimate >= n * z
  friend bool operator==(const TableEntryValue&, const TableEntryValue&) = default;
};

struct BoundaryTable {
  int edge = 0;  // task id
  int side = 0;
  Value eps;
  std::vector<TableEntryValue> values;  // z = eps, 2 eps, ..., 1

  /// Quantized value with breached entries read as 0.
  Value clean(std::size_t k) const { return values[k].breach ? Value(0) : values[k].psi; }
  /// Tables are equal as functions on the grid (the edge id is ignored).
  bool same_function(const BoundaryTable& other) const { return eps == other.eps && values == other.values; }
};

/// Requires 1/eps to be a positive integer.
BoundaryTable quantize(const BoundaryProbe& probe, const Value& eps);

Json table_to_json(const BoundaryTable& table);
BoundaryTable table_from_json(const Json& doc);

using RealFunction = std::function<Value(const Value&)>;

struct YoungResult {
  Value lhs;          // lower Riemann sum of both integrals
  Value target;       // a^2
  Value error_bound;  // step * (psi(a) + inverse(a))
  bool pass = false;
};

/// Throws NotMonotone when the samples of either function decrease.
YoungResult young_check(const RealFunction& psi, const RealFunction& inverse, const Value& a, const Value& step);

/// Young check on one edge of an instance, using the lower ends of the probed
/// intervals for both directions (a valid lower bound for the integrals).
YoungResult young_check_edge(const Oracle& oracle, const Instance& instance, int task_id, const Value& a,
                             const Value& step, const Value& tolerance = pow2(-32));

struct SlopeSample {
  Value x;
  CriticalInterval interval;
  bool flagged = false;
};

struct SlopeReport {
  std::vector<SlopeSample> samples;
  bool any_flag = false;
};

/// Flags every sample x with critical value >= n x. Samples must lie in
/// [0, 1]; x = 0 is skipped.
SlopeReport bounded_slope_check(const BoundaryProbe& probe, const std::vector<Value>& samples);

struct SiblingReport {
  std::vector<CriticalInterval> intervals;  // baseline first
  bool pass = false;
};

/// Re-probes the task at leaf value s under each (va, vb) assignment of a
/// parallel sibling; passes iff all intervals share a point.
SiblingReport sibling_independence_check(const BoundaryProbe& probe, const Value& s, int sibling_id,
                                         const std::vector<std::pair<Value, Value>>& perturbations);

struct LipschitzSample {
  Value difference;  // |estimate - estimate'|
  Value l1;          // size of the perturbation
  bool pass = false;
};

struct LipschitzReport {
  std::vector<LipschitzSample> samples;
  bool pass = true;
};

using Perturbation = std::vector<std::pair<int, Value>>;  // (task id, delta)

/// Each perturbation shifts the probed side's values on other tasks.
LipschitzReport lipschitz_check(const BoundaryProbe& probe, const Value& s, const std::vector<Perturbation>& deltas);

struct AlphaEdge {
  int task = 0;
  int root = 0;
  Value s;
  CriticalInterval interval;
  Value alpha;
  bool lower_ok = false;  // s / n < psi
  bool upper_ok = false;  // psi < n s
};

struct AlphaReport {
  std::vector<AlphaEdge> edges;
  bool pass = true;
};

/// For each (task id, root) the leaf value s is read from the instance and
/// must lie in (0, 1].
AlphaReport alpha_bounds_check(const Oracle& oracle, const Instance& instance,
                               const std::vector<std::pair<int, int>>& edges, const Value& tolerance = pow2(-32));

}  // namespace truthlab
