#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"
#include "truthlab/error.hpp"
#include "truthlab/mechanism.hpp"

using namespace truthlab;
using testing::frac;

namespace {

template <typename F>
Errc error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::AssertionFailed;
}

Value weight(const AffineMinimizer& spec, int machine) {
  return spec.lambda.empty() ? Value(1) : spec.lambda[static_cast<std::size_t>(machine)];
}

/// Objective written out from the definition, with `excluded` costing
/// nothing.
Value objective(const AffineMinimizer& spec, const Instance& inst, const std::vector<int>& a, int excluded = -1) {
  Value total = 0;
  for (std::size_t j = 0; j < inst.size(); ++j) {
    const Task& t = inst.task(j);
    if (a[j] != excluded) total += weight(spec, a[j]) * t.value_for(a[j]);
    for (const auto& g : spec.gamma) {
      if (g.task == t.id && g.machine == a[j] && a[j] != excluded) total += g.value;
    }
  }
  for (const auto& g : spec.groups) {
    std::size_t on = 0;
    for (int id : g.tasks) on += a[inst.index_of(id)] == g.machine ? 1 : 0;
    bool fire = g.when == GroupWhen::Split ? (on > 0 && on < g.tasks.size())
                : g.when == GroupWhen::AllOn ? on == g.tasks.size()
                                             : on == 0;
    if (fire) total += g.constant;
  }
  for (const auto& e : spec.table) {
    if (e.assignment == a) total += e.value;
  }
  return total;
}

struct Brute {
  Allocation alloc;
  Value value;
};

/// Enumerates allocations in lexicographic order; the first strict minimum
/// is the lexicographically smallest minimizer. Machine `excluded` may only
/// keep loops.
Brute brute_affine(const AffineMinimizer& spec, const Instance& inst, int excluded = -1) {
  const std::size_t m = inst.size();
  Brute best{{}, Value(0)};
  bool have = false;
  std::vector<int> a(m, 0);
  std::function<void(std::size_t)> rec = [&](std::size_t j) {
    if (j == m) {
      Value v = objective(spec, inst, a, excluded);
      if (!have || v < best.value) {
        best = Brute{Allocation{a}, v};
        have = true;
      }
      return;
    }
    const Task& t = inst.task(j);
    std::vector<int> options{std::min(t.a, t.b)};
    if (!t.is_loop()) options.push_back(std::max(t.a, t.b));
    for (int mach : options) {
      if (mach == excluded && !t.is_loop()) continue;
      a[j] = mach;
      rec(j + 1);
    }
  };
  rec(0);
  return best;
}

AffineMinimizer random_affine(Rng& rng, const Instance& inst, bool with_table) {
  AffineMinimizer spec;
  for (int i = 0; i < inst.n(); ++i) spec.lambda.push_back(frac(static_cast<long>(rng.uniform(1, 8)), 4));
  for (const auto& t : inst.tasks()) {
    if (rng.coin()) spec.gamma.push_back(GammaEntry{t.id, t.b, frac(static_cast<long>(rng.uniform(0, 8)), 8)});
  }
  if (inst.size() >= 2 && rng.coin()) {
    const Task& x = inst.task(0);
    const Task& y = inst.task(1);
    int machine = y.supports(x.a) ? x.a : x.b;
    auto when = static_cast<GroupWhen>(rng.uniform(0, 2));
    Value c = frac(static_cast<long>(rng.uniform(0, 8)) - 4, 4);
    spec.groups.push_back(GroupTerm{{x.id, y.id}, machine, when, c});
  }
  if (with_table && inst.size() <= 4) {
    std::vector<int> assignment;
    for (const auto& t : inst.tasks()) assignment.push_back(rng.coin() ? t.a : t.b);
    spec.table.push_back(TableEntry{assignment, frac(static_cast<long>(rng.uniform(0, 8)), 4)});
  }
  return spec;
}

}  // namespace

TEST_CASE("VCG on the four-task example") {
  Instance inst = testing::four_task_example();
  Allocation a = allocate(Vcg{}, inst);
  CHECK(a == Allocation{{1, 1, 0, 0}});
  CHECK(makespan(inst, a) == 11);
  auto pay = payments(Vcg{}, inst, a);
  CHECK(pay == std::vector<Value>{Value(15), Value(8), Value(0)});
}

TEST_CASE("ties go to the lower machine") {
  Instance inst(3, {Task{1, 2, 0, Value(1), Value(1)}, Task{2, 1, 2, Value(3), Value(3)}});
  CHECK(allocate(Vcg{}, inst) == Allocation{{0, 1}});
  CHECK(allocate(AffineMinimizer{}, inst) == Allocation{{0, 1}});
}

TEST_CASE("affine minimizer matches exhaustive search") {
  Rng rng(11, 0);
  for (int trial = 0; trial < 300; ++trial) {
    int n = 2 + static_cast<int>(trial % 3);
    int m = 1 + static_cast<int>(trial % 5);
    Instance inst = testing::random_instance(1000 + trial, n, m, trial % 4 == 0);
    AffineMinimizer spec = random_affine(rng, inst, trial % 3 == 0);
    Brute want = brute_affine(spec, inst);
    CHECK(allocate(spec, inst) == want.alloc);
    SpecOracle oracle(spec);
    for (std::size_t j = 0; j < inst.size(); ++j) CHECK(oracle.allocate_task(inst, j) == want.alloc[j]);
  }
}

TEST_CASE("unit affine minimizer agrees with VCG") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Instance inst = testing::random_instance(seed, 4, 7);
    CHECK(allocate(AffineMinimizer{}, inst) == allocate(Vcg{}, inst));
  }
}

TEST_CASE("affine payments equal the Clarke pivot from exhaustive search") {
  Rng rng(5, 0);
  for (int trial = 0; trial < 150; ++trial) {
    Instance inst = testing::random_instance(2000 + trial, 3, 1 + trial % 4);
    AffineMinimizer spec = random_affine(rng, inst, trial % 2 == 0);
    Brute chosen = brute_affine(spec, inst);
    auto pay = payments(spec, inst, chosen.alloc);
    for (int i = 0; i < inst.n(); ++i) {
      Value own = 0;
      for (std::size_t j = 0; j < inst.size(); ++j) {
        if (chosen.alloc[j] == i) own += weight(spec, i) * inst.task(j).value_for(i);
      }
      Value pivot = brute_affine(spec, inst, i).value;
      CHECK(pay[static_cast<std::size_t>(i)] == (pivot - (chosen.value - own)) / weight(spec, i));
    }
  }
  Instance inst = testing::four_task_example();
  CHECK(error_of([&] { payments(AffineMinimizer{}, inst, Allocation{{0, 0, 0, 0}}); }) == Errc::InvalidAllocation);
}

TEST_CASE("task-independent thresholds") {
  TaskIndependent ti;
  ti.thresholds[1] = PiecewiseLinear{{{Value(0), Value(0)}, {Value(1), Value(2)}}};
  Instance inst(2, {Task{1, 0, 1, Value(1), Value(1)}, Task{2, 0, 1, Value(1), Value(1)}});
  Allocation a = allocate(ti, inst);
  CHECK(a == Allocation{{0, 1}});  // 1 < 2 wins for task 1; the tie on task 2 goes to b
  auto pay = payments(ti, inst, a);
  CHECK(pay[0] == 2);  // g(vb)
  CHECK(pay[1] == 1);  // largest va keeping task 2 on b under the identity
  TaskIndependent flat;
  flat.fallback = PiecewiseLinear{{{Value(0), Value(1)}, {Value(1), Value(1)}}};
  Instance far(2, {Task{1, 0, 1, Value(3), Value(1)}});
  CHECK(allocate(flat, far) == Allocation{{1}});
  CHECK(error_of([&] { payments(flat, far, Allocation{{1}}); }) == Errc::Unbounded);
}

TEST_CASE("piecewise-linear thresholds") {
  PiecewiseLinear g{{{Value(0), Value(1)}, {Value(2), Value(3)}, {Value(4), Value(4)}}};
  CHECK(g(Value(0)) == 1);
  CHECK(g(Value(1)) == 2);
  CHECK(g(Value(3)) == frac(7, 2));
  CHECK(g(Value(6)) == 5);
  CHECK(*g.upper_inverse(Value(2)) == 1);
  CHECK(*g.upper_inverse(Value(5)) == 6);
  CHECK(*g.upper_inverse(frac(1, 2)) == 0);
  PiecewiseLinear step{{{Value(0), Value(0)}, {Value(1), Value(1)}, {Value(2), Value(1)}}};
  CHECK_FALSE(step.upper_inverse(Value(1)).has_value());
  CHECK(PiecewiseLinear::identity()(frac(7, 3)) == frac(7, 3));
}

TEST_CASE("bundling keeps groups together") {
  Bundling1D b{{}, {BundleGroup{{1, 2}, 0}}};
  Instance inst(3, {Task{1, 0, 1, Value(1), Value(3)}, Task{2, 0, 2, Value(3), Value(2)}, Task{3, 0, 1, Value(2), Value(1)}});
  CHECK(allocate(b, inst) == Allocation{{0, 0, 1}});  // 1 + 3 <= 3 + 2
  inst.set_value(1, 0, Value(5));
  CHECK(allocate(b, inst) == Allocation{{1, 2, 1}});
  CHECK(error_of([&] { payments(b, inst, allocate(b, inst)); }) == Errc::UnsupportedVariant);
}

TEST_CASE("constant and window fixtures") {
  Constant c;
  c.overrides[2] = Side::A;
  Instance inst(2, {Task{1, 0, 1, Value(0), Value(9)}, Task{2, 0, 1, Value(9), Value(0)}});
  CHECK(allocate(c, inst) == Allocation{{1, 0}});
  WindowFixture w{Value(1), Value(2)};
  Instance win(2, {Task{1, 0, 1, frac(3, 2), Value(0)}, Task{2, 0, 1, Value(3), Value(9)}});
  CHECK(allocate(w, win) == Allocation{{0, 1}});
}

TEST_CASE("mechanism validation") {
  CHECK(error_of([] { validate_spec(AffineMinimizer{{Value(1), Value(0)}, {}, {}, {}}); }) == Errc::InvalidSpec);
  CHECK(error_of([] { validate_spec(Bundling1D{{Value(-1)}, {}}); }) == Errc::InvalidSpec);
  TaskIndependent bad;
  bad.fallback = PiecewiseLinear{{{Value(0), Value(2)}, {Value(1), Value(1)}}};
  CHECK(error_of([&] { validate_spec(bad); }) == Errc::InvalidSpec);
  AffineMinimizer negative_gamma{{}, {GammaEntry{1, 0, Value(-1)}}, {}, {}};
  CHECK(error_of([&] { validate_spec(negative_gamma); }) == Errc::InvalidSpec);
  CHECK(error_of([] { validate_spec(WindowFixture{Value(2), Value(1)}); }) == Errc::InvalidSpec);
  Instance inst = testing::four_task_example();
  CHECK(error_of([&] { allocate(AffineMinimizer{{Value(1), Value(1)}, {}, {}, {}}, inst); }) == Errc::InvalidSpec);
  AffineMinimizer big_table;
  big_table.table.push_back(TableEntry{{0, 0, 0, 0, 0}, Value(1)});
  CHECK(error_of([&] { allocate(big_table, testing::random_instance(1, 3, 5)); }) == Errc::InvalidSpec);
  CHECK(error_of([&] { allocate(AffineMinimizer{{}, {GammaEntry{9, 0, Value(1)}}, {}, {}}, inst); }) == Errc::InvalidSpec);
}

TEST_CASE("single-task fast path agrees with full allocation") {
  TaskIndependent ti;
  ti.fallback = PiecewiseLinear{{{Value(0), frac(1, 4)}, {Value(1), Value(2)}}};
  std::vector<MechanismSpec> specs{Vcg{}, AffineMinimizer{{Value(1), Value(2), Value(3)}, {}, {}, {}}, ti,
                                   Constant{Side::A, {}}, WindowFixture{}};
  for (const auto& spec : specs) {
    SpecOracle oracle(spec);
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
      Instance inst = testing::random_instance(seed, 3, 6, true);
      Allocation full = oracle.allocate(inst);
      for (std::size_t j = 0; j < inst.size(); ++j) CHECK(oracle.allocate_task(inst, j) == full[j]);
    }
  }
}

TEST_CASE("no machine gains by misreporting under the built-in payments") {
  Rng rng(99, 0);
  TaskIndependent ti;
  ti.fallback = PiecewiseLinear{{{Value(0), frac(1, 2)}, {Value(2), Value(3)}}};
  for (int trial = 0; trial < 200; ++trial) {
    Instance truth = testing::random_instance(3000 + trial, 3, 4);
    AffineMinimizer aff = random_affine(rng, truth, trial % 2 == 0);
    std::vector<MechanismSpec> specs{Vcg{}, aff, ti};
    int machine = static_cast<int>(rng.uniform(0, 2));
    Instance lie = truth;
    for (std::size_t j = 0; j < lie.size(); ++j) {
      if (lie.task(j).supports(machine)) lie.set_value(j, machine, frac(static_cast<long>(rng.uniform(0, 16)), 4));
    }
    for (const auto& spec : specs) {
      UtilityComparison u = truthfulness_probe(spec, truth, machine, lie);
      CHECK(u.truthful);
    }
  }
}

TEST_CASE("pay-your-bid is caught by the utility probe") {
  SpecOracle oracle(Vcg{});
  PaymentRule bid = [](const Instance& inst, const Allocation& a) {
    std::vector<Value> pay(static_cast<std::size_t>(inst.n()), Value(0));
    for (std::size_t j = 0; j < inst.size(); ++j) pay[static_cast<std::size_t>(a[j])] += inst.task(j).value_for(a[j]);
    return pay;
  };
  Instance truth(2, {Task{1, 0, 1, Value(1), Value(3)}});
  Instance lie = truth;
  lie.set_value(0, 0, frac(5, 2));
  UtilityComparison u = truthfulness_probe(oracle, bid, truth, 0, lie);
  CHECK_FALSE(u.truthful);
  CHECK(u.deviation_utility == frac(3, 2));
}

TEST_CASE("deviations must stay on one machine") {
  Instance t = testing::four_task_example();
  Instance other = t;
  other.set_value(0, 1, Value(4));
  CHECK(error_of([&] { check_single_machine_deviation(t, other, 0); }) == Errc::BadDeviation);
  CHECK_NOTHROW(check_single_machine_deviation(t, other, 1));
  CHECK(error_of([&] { check_single_machine_deviation(t, Instance(3, {}), 0); }) == Errc::BadDeviation);
  CHECK(error_of([&] { truthfulness_probe(Bundling1D{}, t, 0, t); }) == Errc::UnsupportedVariant);
}
