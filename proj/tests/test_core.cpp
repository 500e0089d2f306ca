#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"
#include "truthlab/error.hpp"
#include "truthlab/io.hpp"
#include "truthlab/parallel.hpp"

#include <atomic>
#include <set>

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

}  // namespace

TEST_CASE("rationals parse and print canonically") {
  CHECK(parse_value("6/8") == Value(3, 4));
  CHECK(parse_value("-2") == Value(-2));
  CHECK(parse_value("+5/10") == Value(1, 2));
  CHECK(to_string(Value(3, 4)) == "3/4");
  CHECK(to_string(Value(2)) == "2/1");
  for (const char* bad : {"", "1/0", "a/2", "1/-2", "1.5", "1//2", "/3"}) {
    CHECK(error_of([&] { parse_value(bad); }) == Errc::ParseError);
  }
}

TEST_CASE("grid helpers") {
  CHECK(floor_to_grid(Value(7, 10), Value(1, 4)) == Value(1, 2));
  CHECK(floor_to_grid(Value(1, 2), Value(1, 4)) == Value(1, 2));
  CHECK(pow2(-3) == Value(1, 8));
  CHECK(pow2(5) == Value(32));
  CHECK(pow(Value(2, 3), 3) == Value(8, 27));
  CHECK(is_unit_fraction_grid(Value(1, 3)));
  CHECK_FALSE(is_unit_fraction_grid(Value(2, 5)));
  CHECK_FALSE(is_unit_fraction_grid(Value(0)));
}

TEST_CASE("simplest rational in an interval") {
  CHECK(simplest_between(Value(1, 3) - pow2(-30), Value(1, 3) + pow2(-30)) == Value(1, 3));
  CHECK(simplest_between(Value(0), pow2(-32)) == 0);
  CHECK(simplest_between(Value(5), Value(5)) == 5);
  CHECK(simplest_between(frac(31, 20), frac(17, 10)) == frac(5, 3));
  CHECK(simplest_between(frac(3, 2), frac(7, 4)) == frac(3, 2));
  // Against a scan over denominators.
  Rng rng(3, 1);
  for (int trial = 0; trial < 200; ++trial) {
    Value lo = frac(static_cast<long>(rng.uniform(0, 400)), static_cast<long>(rng.uniform(1, 60)));
    Value hi = lo + frac(static_cast<long>(rng.uniform(0, 20)), static_cast<long>(rng.uniform(1, 200)));
    Value s = simplest_between(lo, hi);
    REQUIRE(lo <= s);
    REQUIRE(s <= hi);
    long q = s.get_den().get_si();
    for (long d = 1; d < q; ++d) {
      Value up = floor_value(Value(hi * d)) / d;
      CHECK(up < lo);
    }
  }
}

TEST_CASE("instance validation") {
  CHECK(error_of([] { Instance(0, {}); }) == Errc::InvalidInstance);
  CHECK(error_of([] { Instance(2, {Task{1, 0, 1, Value(1), Value(1)}, Task{1, 0, 1, Value(1), Value(1)}}); }) ==
        Errc::InvalidInstance);
  CHECK(error_of([] { Instance(2, {Task{1, 0, 2, Value(1), Value(1)}}); }) == Errc::InvalidInstance);
  CHECK(error_of([] { Instance(2, {Task{1, 0, 1, Value(-1), Value(1)}}); }) == Errc::InvalidInstance);
  CHECK(error_of([] { Instance(2, {Task{1, 1, 1, Value(1), Value(2)}}); }) == Errc::InvalidInstance);
  Instance inst(2, {Task{7, 0, 1, Value(1), Value(2)}, Task{3, 1, 1, Value(4), Value(4)}});
  CHECK(inst.task(0).id == 3);
  CHECK(inst.index_of(7) == 1);
  CHECK_FALSE(inst.find(5).has_value());
  inst.set_value(0, 1, Value(9));
  CHECK(inst.task(0).va == 9);
  CHECK(inst.task(0).vb == 9);
  CHECK(error_of([&] { inst.set_value(1, 0, Value(-1)); }) == Errc::NegativeValue);
  CHECK(error_of([&] { inst.set_value(0, 0, Value(1)); }) == Errc::InvalidInstance);
}

TEST_CASE("makespan of the four-task example") {
  Instance inst = testing::four_task_example();
  Allocation all_zero{{0, 0, 0, 0}};
  CHECK(makespan(inst, all_zero) == 19);
  auto load = loads(inst, Allocation{{1, 1, 0, 2}});
  CHECK(load == std::vector<Value>{Value(7), Value(3), Value(6)});
  OptResult opt = opt_makespan(inst);
  CHECK(opt.value == 7);
  CHECK(makespan(inst, opt.witness) == 7);
  CHECK(error_of([&] { makespan(inst, Allocation{{2, 0, 0, 0}}); }) == Errc::InvalidAllocation);
  CHECK(error_of([&] { makespan(inst, Allocation{{0, 0}}); }) == Errc::InvalidAllocation);
}

TEST_CASE("optimal makespan matches plain enumeration") {
  for (std::uint64_t seed = 1; seed <= 150; ++seed) {
    int n = 2 + static_cast<int>(seed % 3);
    int m = 1 + static_cast<int>(seed % 9);
    Instance inst = testing::random_instance(seed, n, m, seed % 2 == 0);
    OptResult opt = opt_makespan(inst);
    CHECK(opt.value == testing::brute_force_opt(inst));
    CHECK(makespan(inst, opt.witness) == opt.value);
  }
}

TEST_CASE("enumeration cap") {
  Instance inst = testing::random_instance(5, 3, 12);
  CHECK(error_of([&] { opt_makespan(inst, 16); }) == Errc::InstanceTooLarge);
  std::vector<Task> zeros;
  for (int id = 1; id <= 80; ++id) zeros.push_back(Task{id, 0, 1, Value(0), Value(1)});
  CHECK(opt_makespan(Instance(2, zeros), 2).value == 0);
}

TEST_CASE("instance documents round-trip") {
  Instance inst = testing::four_task_example();
  std::string text = serialize_instance(inst);
  CHECK(parse_instance(text) == inst);
  CHECK(serialize_instance(parse_instance(text)) == text);
  CHECK(error_of([] { parse_instance("{\"n\": 2, \"tasks\": [}"); }) == Errc::ParseError);
  try {
    parse_instance("{\n  \"n\": 2,\n  \"tasks\": [,]\n}");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK(error_of([] { parse_instance("{\"n\": 2, \"tasks\": [{\"id\": 1, \"a\": 0, \"b\": 1, \"va\": 0.5, \"vb\": \"1\"}]}"); }) ==
        Errc::ParseError);
}

TEST_CASE("mechanism documents round-trip") {
  AffineMinimizer aff;
  aff.lambda = {Value(1), Value(2)};
  aff.gamma = {GammaEntry{1, 0, Value(1, 3)}};
  aff.groups = {GroupTerm{{1, 2}, 0, GroupWhen::AllAway, Value(-1, 2)}};
  aff.table = {TableEntry{{0, 1}, Value(2)}};
  TaskIndependent ti;
  ti.thresholds[2] = PiecewiseLinear{{{Value(0), Value(0)}, {Value(1), Value(2)}}};
  Constant c;
  c.fallback = Side::A;
  c.overrides[3] = Side::B;
  std::vector<MechanismSpec> specs{Vcg{}, aff, ti, Bundling1D{{Value(1), Value(3)}, {BundleGroup{{1, 2}, 1}}}, c,
                                   WindowFixture{Value(1, 2), Value(3, 2)}};
  for (const auto& spec : specs) {
    Json doc = spec_to_json(spec);
    CHECK(spec_from_json(parse_document(dump_document(doc))) == spec);
  }
  CHECK(error_of([] { spec_from_json(parse_document("{\"type\": \"magic\"}")); }) == Errc::ParseError);
}

TEST_CASE("seeded streams are reproducible and in range") {
  Rng a(42, stream_key(1, 2));
  Rng b(42, stream_key(1, 2));
  Rng c(42, stream_key(2, 1));
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    auto x = a.next();
    CHECK(x == b.next());
    differs = differs || x != c.next();
  }
  CHECK(differs);
  Rng r(1, 1);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    auto v = r.uniform(3, 9);
    CHECK(v >= 3);
    CHECK(v <= 9);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("parallel_for covers every index and reports the lowest failure") {
  for (int jobs : {1, 3, 8}) {
    std::vector<int> hits(50, 0);
    parallel_for(hits.size(), jobs, [&](std::size_t i) { hits[i] += 1; });
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    std::atomic<int> ran{0};
    try {
      parallel_for(40, jobs, [&](std::size_t i) {
        ++ran;
        if (i % 7 == 3) throw Error(Errc::NotMonotone, std::to_string(i));
      });
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()) == "NotMonotone: 3");
    }
    CHECK(ran.load() >= 4);
  }
}
