#pragma once

#include "truthlab/io.hpp"
#include "truthlab/mechanism.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace truthlab {

struct WmonViolation {
  int machine = 0;
  Instance t;
  Instance t_prime;
  Value sum;
};

/// sum_j (a'_ij - a_ij)(t'_ij - t_ij) for the deviating machine. Throws
/// BadDeviation if any other machine's values differ.
Value wmon_sum(const Oracle& oracle, const Instance& t, const Instance& t_prime, int machine);

/// nullopt when the pair satisfies weak monotonicity.
std::optional<WmonViolation> wmon_pair(const Oracle& oracle, const Instance& t, const Instance& t_prime, int machine);

enum class SampleMode {
  Grid,    // values in {0, 1/4, ..., 4}
  Random,  // values in {k / 4096 : 0 <= k <= 4 * 4096}
};

struct SweepConfig {
  SampleMode mode = SampleMode::Random;
  std::uint64_t seed = 1;
  std::size_t trials = 1000;
  int jobs = 1;
  /// Draw fresh values for every non-frozen task in each trial; otherwise the
  /// base instance is kept and only the deviating machine's values move.
  bool resample_context = true;
  /// Task ids whose values stay at the base instance's values.
  std::vector<int> frozen;
};

struct WmonReport {
  std::size_t trials = 0;
  std::vector<WmonViolation> violations;  // ordered by trial
};

/// Checks weak monotonicity on sampled (t, t', i) triples. Sampled values that
/// sit on an exact tie between a task's two endpoints are moved by 2^-20.
WmonReport wmon_sweep(const Oracle& oracle, const Instance& base, const SweepConfig& config);

/// Sweep with the tasks in `fixed` frozen at their current values.
WmonReport restriction_check(const Oracle& oracle, const Instance& instance, const std::vector<int>& fixed,
                             std::size_t trials, std::uint64_t seed, int jobs = 1);

struct AgreementResult {
  bool pass = true;
  Instance t_prime;
  std::vector<int> disagreeing_tasks;
};

/// Lowers machine i's values on `decrease` (tasks it wins at t) and raises
/// them on `increase` (tasks others win), by the matching positive deltas
/// (decrease first, then increase). Passes iff i's allocation of those tasks
/// is unchanged.
AgreementResult agreement_check(const Oracle& oracle, const Instance& t, int machine, const std::vector<int>& decrease,
                                const std::vector<int>& increase, const std::vector<Value>& deltas);

Json wmon_report_to_json(const WmonReport& report);

}  // namespace truthlab
