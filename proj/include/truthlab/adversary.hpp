#pragma once

#include "truthlab/boundary.hpp"
#include "truthlab/geometry.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace truthlab {

struct AdversaryConfig {
  int n = 3;
  Value eps = Value(1, 20);
  Value xi = Value(1, 2);
  Value nu = pow2(-12);
  int ell = 32;
  int q = 1;
  std::uint64_t seed = 1;
  Value tol = pow2(-32);
  std::uint64_t budget = 64;  // sibling swaps in the box search
  bool strict_nu = false;     // enforce nu < xi / (n^2 4^n)

  /// nu < xi / (n^2 4^n).
  bool nu_within_proof_range() const;
};

/// Throws InvalidConfig on any out-of-range parameter.
void validate_config(const AdversaryConfig& config);
Json config_to_json(const AdversaryConfig& config);
/// Missing keys keep their defaults.
AdversaryConfig config_from_json(const Json& doc);

/// Complete multi-graph on n machines with ell edges per pair and a zero loop
/// at every machine. Each edge has one zero endpoint; the other value is
/// drawn in (z, (1 + eps) z) for a uniform z on the eps grid, using 31 random
/// bits. Edge ids run from 1 in pair order; loop ids follow.
Instance sample_multi_clique(const AdversaryConfig& config);

/// Redraws one edge's values using its `attempt`-th stream.
void resample_edge(Instance& clique, const AdversaryConfig& config, std::size_t edge_index, int attempt);

/// Re-samples edges whose root-side critical value looks discontinuous at
/// the sampled leaf value, at most 8 times per edge. Returns the number of
/// redraws. Throws Discontinuity when an edge stays suspicious.
int stabilize_continuity(const Oracle& oracle, Instance& clique, const AdversaryConfig& config, int jobs);

/// Quantized tables of one edge for both directions: at_a maps the value of
/// b to the threshold of a, at_b the other way.
struct EdgeTables {
  int edge = 0;
  int a = 0;
  int b = 0;
  BoundaryTable at_a;
  BoundaryTable at_b;
  int slot_side = 0;  // machine holding the nonzero value
  Value slot_z;       // that value floored to the grid
};

std::vector<EdgeTables> build_tables(const Oracle& oracle, const Instance& clique, const Value& eps,
                                     const Value& tol, int jobs);

/// 2/eps parallel edges with identical tables covering every (side, z) slot.
struct DipoleSet {
  int i = 0;
  int j = 0;
  std::vector<int> edges;
  BoundaryTable at_i;
  BoundaryTable at_j;
};

using PairKey = std::pair<int, int>;

/// Edges of a pair are grouped by exact table pair; each group yields
/// dipoles greedily, one edge per slot.
std::map<PairKey, std::vector<DipoleSet>> find_dipoles(const std::vector<EdgeTables>& tables, const Value& eps);
std::map<PairKey, std::vector<DipoleSet>> find_dipoles(const Oracle& oracle, const Instance& clique, const Value& eps,
                                                       const Value& tol = pow2(-32), int jobs = 1);

/// All edges of a pair sharing one table pair.
struct TableClass {
  int i = 0;
  int j = 0;
  std::vector<int> edges;
  BoundaryTable at_i;
  BoundaryTable at_j;
  std::size_t dipoles = 0;  // complete dipoles inside the class
};

/// Per pair, the class holding the first dipole; without a dipole, the
/// largest class (ties to the class with the smallest edge id).
std::map<PairKey, TableClass> choose_classes(const std::vector<EdgeTables>& tables, const Value& eps);

struct RootCandidate {
  int root = 0;
  Value z;
  Value sum;    // sum over leaves of the quantized threshold at z
  Value ratio;  // sum / z
  bool meets_bar = false;
};

struct RootSelection {
  int root = 0;
  Value z;
  Value sum;
  Value counting_total;
  std::vector<RootCandidate> ranked;  // candidates meeting the bar, best first
};

/// Scans every (root, z); breached table entries count as 0. Ranked by
/// ratio, then larger z, then smaller root. Throws NoNiceStar when no
/// candidate reaches (1 - 3 eps)(n - 1) z.
RootSelection select_root_and_z(const std::map<PairKey, TableClass>& classes, const Value& eps, int n);

struct MultiStar {
  int root = 0;
  Value z;
  std::map<int, std::vector<int>> leaves;  // leaf machine -> edge ids
  std::size_t multiplicity() const;
  Star star(std::size_t k) const;          // k-th edge of every leaf
};

/// Tries ranked candidates until every leaf has q edges whose root side is 0
/// and whose leaf value floors to z. Checks isNiceStar on q stars; a failure
/// is CertificateMismatch. Throws InsufficientMultiplicity when no
/// candidate has enough edges.
MultiStar find_nice_multi_star(const Oracle& oracle, const Instance& clique, const std::map<PairKey, TableClass>& classes,
                               const RootSelection& selection, const AdversaryConfig& config);

/// Tests the star of first edges, then swaps one leaf at a time to its next
/// sibling, last leaf first. Each swap costs one unit of budget.
BoxReport find_box_star(const Oracle& oracle, const Instance& clique, const MultiStar& stars, const Value& delta,
                        std::uint64_t budget, const Value& tol = pow2(-32));

struct WitnessReport {
  Instance instance;
  Allocation allocation;
  Value makespan;
  OptResult opt;
  Value ratio;
  Value floor;  // z + (1 - 3 eps)(n - 1) z - 2 (n - 1) delta
  Star star;
  int root = 0;
  Value z;
  Value eps;
  Value delta;
};

/// Root loop set to z, star root values to psi - 2 delta; one oracle query
/// and an exact OPT. Throws AssertionFailed (with the instance dump) when the
/// makespan floor, OPT <= (1 + eps) z or OPT > 0 fails.
WitnessReport build_witness(const Oracle& oracle, const Instance& clique, const BoxReport& box, const Value& z,
                            const Value& eps, const Value& delta, const Value& tol = pow2(-32));

/// Recomputes makespan and OPT from the emitted instance and allocation.
bool verify_witness(const WitnessReport& report);

struct StageLog {
  std::vector<Json> stages;
  void add(const std::string& stage, Json detail);
};

/// The whole pipeline. Stages are appended to `log` as they finish, so a
/// failing run still carries its diagnostics.
WitnessReport run_adversary(const Oracle& oracle, const AdversaryConfig& config, int jobs, StageLog& log);

/// FNV-1a over the command name and canonical config document.
std::string manifest_id(const std::string& command, const AdversaryConfig& config);

Json witness_to_json(const WitnessReport& report, const AdversaryConfig& config, const StageLog& log,
                     const std::string& manifest);

struct BkEstimate {
  std::size_t samples = 0;
  std::size_t non_boxes = 0;
  Value frequency;
};

/// Samples stars with one task per leaf of a standard instance and tests
/// them at delta = 4^k nu. Without replacement unless samples exceed the
/// number of stars.
BkEstimate estimate_bk(const Oracle& oracle, const Instance& standard, int k, std::size_t samples, const Value& nu,
                       std::uint64_t seed, const Value& tol = pow2(-32));

struct RecurrenceBound {
  Value b2;                      // 2 / sqrt(ell)
  Value bk;                      // (5n/nu)^(k-2) 2 n^3 / (xi sqrt(ell))
  Value min_multiplicity;        // (5n/nu)^(2n)
  bool sqrt_exact = true;        // otherwise floor(sqrt(ell)) is used, an upper bound
};

RecurrenceBound recurrence_bound(int n, const Value& nu, const Value& xi, long ell, int k);

struct DipoleCliqueBound {
  Value K;        // (n/eps)^(4/eps)
  Value p;        // (2/eps)! (eps/2)^(2/eps)
  Value q_prime;  // 6 K q / (p eps)
};

DipoleCliqueBound dipole_clique_bound(long q, int n, const Value& eps);

}  // namespace truthlab
