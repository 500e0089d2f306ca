#pragma once

#include "truthlab/boundary.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace truthlab {

/// Spanning star: every task is an edge between `root` and a leaf machine.
struct Star {
  int root = 0;
  std::vector<int> tasks;  // task ids, in coordinate order
  friend bool operator==(const Star&, const Star&) = default;
};

/// Throws PreconditionViolated unless every task is a non-loop edge at root.
void check_star(const Instance& instance, const Star& star);

/// Region R_P of root-value vectors that send every star task to the root,
/// described by facets sum_{i in I} t_i <= c_I. Keys are bitmasks over star
/// positions; singletons are always present.
struct RegionFacets {
  Star star;
  Value resolution;
  bool empty = false;  // origin itself is outside the region
  std::map<unsigned, Value> facets;

  std::optional<Value> facet(unsigned mask) const;
  /// c_I <= sum of singleton c_i for every facet.
  bool consistent() const;
  /// Membership predicted by the facets (nonnegative points only).
  bool predicts_inside(const std::vector<Value>& t) const;
};

/// Bisects each facet along -1_I from the corner built from the axis exits
/// and keeps the ones cutting deeper than `resolution`. Each facet is then
/// checked at 2k random points on both sides. Supports k <= 4. Throws
/// ResolutionTooCoarse when a check disagrees with the oracle.
RegionFacets probe_region(const Oracle& oracle, const Instance& instance, const Star& star, const Value& resolution,
                          std::uint64_t seed = 0);

enum class PairShape {
  Crossing,
  QuasiBundling,
  QuasiFlipping,
  HalfBundlingAtFirst,
  HalfBundlingAtSecond,
  FullyBundling,
  Degenerate,
  Unknown
};

std::string shape_name(PairShape shape);

struct PairReport {
  PairShape shape = PairShape::Unknown;
  RegionFacets region;
  std::optional<Value> cut;    // c_{12} when a bundling facet exists
  std::optional<Value> slope;  // measured slope of that facet
};

/// Two tasks sharing endpoint `root`; every other value stays fixed.
PairReport classify_pair(const Oracle& oracle, const Instance& instance, int first, int second, int root,
                         const Value& resolution, std::uint64_t seed = 0);

struct BoxReport {
  Star star;
  Value delta;
  std::vector<Value> psi;
  std::vector<Value> probe;  // psi - delta
  Allocation allocation;
  bool box = false;
};

/// Probes every edge's critical value at its current leaf value, moves the
/// root values to psi - delta and queries the oracle once. Throws
/// DeltaTooLarge unless delta < min psi.
BoxReport is_box(const Oracle& oracle, const Instance& instance, const Star& star, const Value& delta,
                 const Value& tolerance = pow2(-32));

struct NiceStarReport {
  bool pass = false;
  Value sum;
  Value threshold;  // (1 - 3 eps)(n - 1) z - k tolerance
};

NiceStarReport is_nice_star(const Oracle& oracle, const Instance& instance, const Star& star, const Value& eps,
                            const Value& z, const Value& tolerance = pow2(-32));

struct ChoppedReport {
  std::vector<bool> sub_boxes;  // P minus task i
  std::size_t grid_points = 0;
  bool grid_ok = true;
  bool chopped = false;
};

/// Every one-task-removed sub-star must be a box at delta = 4^(k-1) nu, and
/// the sub-star without the last task must stay a box while that task's leaf
/// value walks down the grid q nu / (4n). Needs k >= 3; throws GridTooFine
/// when 4n / nu exceeds `budget`.
ChoppedReport is_chopped_off_box(const Oracle& oracle, const Instance& instance, const Star& star, const Value& nu,
                                 std::uint64_t budget = 1 << 16, const Value& tolerance = pow2(-32));

/// Copy of `instance` with star root values set to psi - 4^k nu. Throws
/// NegativeValue when a value would drop below zero.
Instance shift_to_nu(const Oracle& oracle, const Instance& instance, const Star& star, const Value& nu,
                     const Value& tolerance = pow2(-32));

struct FourCycle {
  std::array<std::size_t, 2> rows;
  std::array<std::size_t, 2> cols;
};

std::optional<FourCycle> find_c4(const std::vector<std::vector<bool>>& adjacency);

/// Root 0 with leaves 1..L; leaf j carries one edge per value in
/// leaf_values[j-1], root value 0. Ids run from 1 in leaf order.
Instance standard_instance(const std::vector<std::vector<Value>>& leaf_values);

struct BaseCaseReport {
  std::vector<std::vector<bool>> boxes;  // [task of leaf 1][task of leaf 2]
  std::vector<std::vector<std::optional<Value>>> depths;
  bool depths_ok = true;  // every recorded depth >= 32 nu
  std::size_t box_count = 0;

  std::vector<std::vector<bool>> non_box_graph() const;
};

/// Box test at delta = 32 nu over every pair (x, y) in first x second. For a
/// non-box pair the bundling depth psi_x + psi_y - c_xy is read off the probed
/// region.
BaseCaseReport base_case_check(const Oracle& oracle, const Instance& instance, int root, const std::vector<int>& first,
                               const std::vector<int>& second, const Value& nu, const Value& tolerance = pow2(-32));

/// lambda = 1 minimizer with constant c on splitting {first, second} at root.
/// c > 0 penalizes the split (bundling), c < 0 rewards it (flipping).
AffineMinimizer split_gadget(int first, int second, int root, const Value& c);

Json region_to_json(const RegionFacets& region);
Json pair_report_to_json(const PairReport& report);
Json box_report_to_json(const BoxReport& report);

}  // namespace truthlab
