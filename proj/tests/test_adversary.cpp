#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"
#include "truthlab/adversary.hpp"
#include "truthlab/error.hpp"

#include <cmath>
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

AdversaryConfig small(int n, const Value& eps, int ell, std::uint64_t seed) {
  AdversaryConfig c;
  c.n = n;
  c.eps = eps;
  c.ell = ell;
  c.seed = seed;
  return c;
}

/// True when v = z + eps z k / 2^31 for a grid point z and 0 < k < 2^31.
bool on_sampling_lattice(const Value& v, const Value& eps) {
  Value z = floor_to_grid(v, eps);
  if (z <= 0 || z > 1) return false;
  Value k = (v - z) / (eps * z) * pow2(31);
  return k.get_den() == 1 && k > 0 && k < pow2(31);
}

/// Two-machine clique with `copies` edges per (side, z) slot.
Instance slot_clique(const Value& eps, int copies) {
  std::vector<Task> tasks;
  int id = 1;
  auto steps = static_cast<int>(Value(1 / eps).get_num().get_si());
  for (int c = 0; c < copies; ++c) {
    for (int side = 0; side < 2; ++side) {
      for (int k = 1; k <= steps; ++k) {
        Value z = eps * k;
        Value u = z + eps * z / 2;
        tasks.push_back(side == 0 ? Task{id++, 0, 1, u, Value(0)} : Task{id++, 0, 1, Value(0), u});
      }
    }
  }
  tasks.push_back(Task{id++, 0, 0, Value(0), Value(0)});
  tasks.push_back(Task{id++, 1, 1, Value(0), Value(0)});
  return Instance(2, std::move(tasks));
}

}  // namespace

TEST_CASE("configuration") {
  AdversaryConfig c;
  CHECK_NOTHROW(validate_config(c));
  CHECK(c.nu_within_proof_range());
  c.n = 4;
  CHECK_FALSE(c.nu_within_proof_range());
  c.strict_nu = true;
  CHECK(error_of([&] { validate_config(c); }) == Errc::InvalidConfig);
  CHECK(error_of([] { validate_config(small(1, frac(1, 4), 4, 1)); }) == Errc::InvalidConfig);
  CHECK(error_of([] { validate_config(small(3, frac(2, 5), 4, 1)); }) == Errc::InvalidConfig);
  AdversaryConfig d = small(4, frac(1, 8), 12, 77);
  d.q = 2;
  AdversaryConfig back = config_from_json(config_to_json(d));
  CHECK(config_to_json(back) == config_to_json(d));
  CHECK(config_from_json(Json::object()).n == 3);
  CHECK(manifest_id("adversary", d) == manifest_id("adversary", back));
  CHECK(manifest_id("adversary", d) != manifest_id("adversary", small(4, frac(1, 8), 12, 78)));
}

TEST_CASE("sampler audit") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    AdversaryConfig c = small(2, frac(1, 2), 1, seed);
    Instance inst = sample_multi_clique(c);
    REQUIRE(inst.size() == 3);
    const Task& e = inst.task(0);
    CHECK(e.id == 1);
    CHECK((e.va == 0) != (e.vb == 0));
    Value u = e.va + e.vb;
    CHECK(on_sampling_lattice(u, c.eps));
    Value z = floor_to_grid(u, c.eps);
    CHECK((z == frac(1, 2) || z == 1));
    CHECK(u > z);
    CHECK(u < z * frac(3, 2));
    CHECK(inst.task(1) == Task{2, 0, 0, Value(0), Value(0)});
    CHECK(inst.task(2) == Task{3, 1, 1, Value(0), Value(0)});
  }
}

TEST_CASE("cliques have the requested structure and zero OPT") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    AdversaryConfig c = small(4, frac(1, 8), 6, seed);
    Instance inst = sample_multi_clique(c);
    CHECK(inst.size() == 6 * 6 + 4);
    std::map<std::pair<int, int>, int> per_pair;
    int loops = 0;
    for (const auto& t : inst.tasks()) {
      if (t.is_loop()) {
        ++loops;
        CHECK(t.va == 0);
        continue;
      }
      ++per_pair[{t.a, t.b}];
      CHECK((t.va == 0) != (t.vb == 0));
      CHECK(on_sampling_lattice(t.va + t.vb, c.eps));
    }
    CHECK(loops == 4);
    CHECK(per_pair.size() == 6);
    for (const auto& [pair, count] : per_pair) CHECK(count == 6);
    CHECK(opt_makespan(inst).value == 0);
    CHECK(sample_multi_clique(c) == inst);
  }
  CHECK_FALSE(sample_multi_clique(small(3, frac(1, 4), 8, 1)) == sample_multi_clique(small(3, frac(1, 4), 8, 2)));
}

TEST_CASE("edge redraws are reproducible") {
  AdversaryConfig c = small(3, frac(1, 4), 4, 5);
  Instance a = sample_multi_clique(c);
  Instance b = a;
  resample_edge(a, c, 2, 1);
  resample_edge(b, c, 2, 1);
  CHECK(a == b);
  CHECK_FALSE(a.task(2) == sample_multi_clique(c).task(2));
  resample_edge(b, c, 2, 0);
  CHECK(b == sample_multi_clique(c));
  SpecOracle vcg(Vcg{});
  Instance clique = sample_multi_clique(c);
  CHECK(stabilize_continuity(vcg, clique, c, 1) == 0);
  CHECK(clique == sample_multi_clique(c));
}

TEST_CASE("dipoles under VCG") {
  SpecOracle vcg(Vcg{});
  Value eps = frac(1, 4);
  for (int copies : {1, 2, 3}) {
    Instance clique = slot_clique(eps, copies);
    auto dipoles = find_dipoles(vcg, clique, eps);
    REQUIRE(dipoles.count({0, 1}) == 1);
    const auto& list = dipoles.at({0, 1});
    CHECK(list.size() == static_cast<std::size_t>(copies));
    std::set<int> seen;
    for (const auto& d : list) {
      CHECK(d.edges.size() == 8);
      std::set<std::pair<int, Value>> slots;
      for (int id : d.edges) {
        CHECK(seen.insert(id).second);
        const Task& t = clique.task(clique.index_of(id));
        int side = t.va == 0 ? 1 : 0;
        slots.insert({side, floor_to_grid(t.value_for(side), eps)});
      }
      CHECK(slots.size() == 8);
    }
  }
  // Dropping one slot leaves no complete dipole.
  Instance gap = slot_clique(eps, 1);
  std::vector<Task> tasks(gap.tasks().begin() + 1, gap.tasks().end());
  auto partial = find_dipoles(vcg, Instance(2, tasks), eps);
  CHECK((partial.count({0, 1}) == 0 || partial.at({0, 1}).empty()));
  auto none = find_dipoles(vcg, sample_multi_clique(small(3, eps, 7, 3)), eps);
  for (const auto& [pair, list] : none) CHECK(list.empty());
}

TEST_CASE("incompatible tables split dipoles") {
  Value eps = frac(1, 4);
  Instance clique = slot_clique(eps, 2);
  TaskIndependent patch;
  for (const auto& t : clique.tasks()) {
    if (t.id % 2 == 0) patch.thresholds[t.id] = PiecewiseLinear{{{Value(0), Value(0)}, {Value(1), frac(1, 2)}}};
  }
  SpecOracle oracle(patch);
  auto dipoles = find_dipoles(oracle, clique, eps);
  std::size_t count = dipoles.count({0, 1}) ? dipoles.at({0, 1}).size() : 0;
  CHECK(count < 2);
  for (const auto& d : dipoles[{0, 1}]) {
    for (std::size_t k = 1; k < d.edges.size(); ++k) CHECK(d.edges[k] % 2 == d.edges[0] % 2);
  }
}

TEST_CASE("root selection and the counting bound") {
  SpecOracle vcg(Vcg{});
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    AdversaryConfig c = small(3, frac(1, 4), 16, seed);
    Instance clique = sample_multi_clique(c);
    auto tables = build_tables(vcg, clique, c.eps, c.tol, 1);
    auto classes = choose_classes(tables, c.eps);
    RootSelection sel = select_root_and_z(classes, c.eps, c.n);

    Value total = 0;
    for (const auto& [pair, cls] : classes) {
      for (std::size_t k = 0; k < cls.at_i.values.size(); ++k) total += cls.at_i.clean(k) + cls.at_j.clean(k);
    }
    CHECK(sel.counting_total == total);
    CHECK(sel.counting_total >= 3 * (4 - 2));
    CHECK(sel.sum >= (1 - 3 * c.eps) * (c.n - 1) * sel.z);
    CHECK(sel.ranked.size() == 12);
    for (std::size_t k = 1; k < sel.ranked.size(); ++k) CHECK(sel.ranked[k - 1].ratio >= sel.ranked[k].ratio);
  }
  SpecOracle zero(Constant{Side::B, {}});
  AdversaryConfig c = small(3, frac(1, 4), 16, 1);
  Instance clique = sample_multi_clique(c);
  auto classes = choose_classes(build_tables(zero, clique, c.eps, c.tol, 1), c.eps);
  CHECK(error_of([&] { select_root_and_z(classes, c.eps, c.n); }) == Errc::NoNiceStar);
}

TEST_CASE("nice multi-stars") {
  SpecOracle vcg(Vcg{});
  AdversaryConfig c = small(3, frac(1, 4), 40, 2);
  Instance clique = sample_multi_clique(c);
  auto classes = choose_classes(build_tables(vcg, clique, c.eps, c.tol, 1), c.eps);
  RootSelection sel = select_root_and_z(classes, c.eps, c.n);
  MultiStar ms = find_nice_multi_star(vcg, clique, classes, sel, c);
  CHECK(ms.multiplicity() >= 1);
  CHECK(ms.leaves.size() == 2);
  for (std::size_t k = 0; k < ms.multiplicity(); ++k) {
    Star s = ms.star(k);
    CHECK(s.root == ms.root);
    CHECK(is_nice_star(vcg, clique, s, c.eps, ms.z).pass);
    for (int id : s.tasks) {
      const Task& t = clique.task(clique.index_of(id));
      CHECK(t.value_for(ms.root) == 0);
      CHECK(floor_to_grid(t.value_for(t.other(ms.root)), c.eps) == ms.z);
    }
  }
  c.q = 50;
  CHECK(error_of([&] { find_nice_multi_star(vcg, clique, classes, sel, c); }) == Errc::InsufficientMultiplicity);
}

TEST_CASE("box search with sibling swaps") {
  Instance inst = standard_instance({{frac(1, 2), frac(1, 2)}, {frac(1, 2), frac(1, 2)}});
  MultiStar ms{0, frac(1, 2), {{1, {1, 2}}, {2, {3, 4}}}};
  SpecOracle vcg(Vcg{});
  BoxReport v = find_box_star(vcg, inst, ms, pow2(-10), 0);
  CHECK(v.box);
  CHECK(v.star.tasks == std::vector<int>{1, 3});

  SpecOracle gadget(split_gadget(1, 3, 0, frac(1, 8)));
  BoxReport g = find_box_star(gadget, inst, ms, pow2(-10), 1);
  CHECK(g.box);
  CHECK(g.star.tasks == std::vector<int>{1, 4});
  CHECK(error_of([&] { find_box_star(gadget, inst, ms, pow2(-10), 0); }) == Errc::BoxNotFound);
  CHECK(error_of([&] { find_box_star(vcg, inst, ms, Value(1), 4); }) == Errc::DeltaTooLarge);
}

TEST_CASE("witness against VCG") {
  SpecOracle vcg(Vcg{});
  AdversaryConfig c;
  StageLog log;
  WitnessReport w = run_adversary(vcg, c, 1, log);
  CHECK(verify_witness(w));
  CHECK(w.makespan == makespan(w.instance, w.allocation));
  CHECK(w.opt.value == opt_makespan(w.instance).value);
  CHECK(w.ratio == w.makespan / w.opt.value);
  CHECK(w.makespan >= w.floor - c.n * c.tol);
  CHECK(w.floor == w.z + (1 - 3 * c.eps) * (c.n - 1) * w.z - 2 * (c.n - 1) * w.delta);
  CHECK(w.opt.value <= (1 + c.eps) * w.z);
  CHECK(w.ratio >= frac(5, 2));
  CHECK_FALSE(log.stages.empty());

  StageLog log4;
  WitnessReport w4 = run_adversary(vcg, c, 4, log4);
  std::string id = manifest_id("adversary", c);
  CHECK(witness_to_json(w, c, log, id).dump() == witness_to_json(w4, c, log4, id).dump());

  WitnessReport tampered = w;
  tampered.makespan += 1;
  CHECK_FALSE(verify_witness(tampered));
  tampered = w;
  tampered.allocation.machine[0] = tampered.instance.task(0).other(tampered.allocation[0]);
  CHECK_FALSE(verify_witness(tampered));
}

TEST_CASE("empirical b_k") {
  Value nu = pow2(-12);
  Instance inst = standard_instance({{frac(1, 2), frac(5, 8), frac(3, 4)}, {frac(1, 2), frac(5, 8), frac(3, 4)}});
  SpecOracle vcg(Vcg{});
  BkEstimate v = estimate_bk(vcg, inst, 2, 9, nu, 1);
  CHECK(v.samples == 9);
  CHECK(v.frequency == 0);
  AffineMinimizer all_pairs;
  for (int x : {1, 2, 3}) {
    for (int y : {4, 5, 6}) all_pairs.groups.push_back(GroupTerm{{x, y}, 0, GroupWhen::Split, frac(1, 8)});
  }
  SpecOracle bundled(all_pairs);
  BkEstimate b = estimate_bk(bundled, inst, 2, 20, nu, 1);
  CHECK(b.samples == 20);
  CHECK(b.frequency == 1);
  CHECK(error_of([&] { estimate_bk(vcg, inst, 2, 0, nu, 1); }) == Errc::PreconditionViolated);
}

TEST_CASE("closed-form bounds") {
  DipoleCliqueBound d = dipole_clique_bound(1, 2, frac(1, 2));
  CHECK(d.K == 65536);
  CHECK(d.p == frac(3, 32));
  CHECK(d.q_prime == 8388608);
  // p = (2/eps)! (eps/2)^(2/eps) written out for eps = 1/3.
  CHECK(dipole_clique_bound(1, 3, frac(1, 3)).p == Value(720) / Value(46656));

  RecurrenceBound r = recurrence_bound(3, frac(1, 100), frac(1, 2), 10000, 2);
  CHECK(r.b2 == frac(1, 50));
  CHECK(r.sqrt_exact);
  CHECK(r.bk == Value(2 * 27) / (frac(1, 2) * 100));
  mpz_class m;
  mpz_ui_pow_ui(m.get_mpz_t(), 1500, 6);
  CHECK(r.min_multiplicity == Value(m));

  RecurrenceBound odd = recurrence_bound(3, frac(1, 100), frac(1, 2), 10001, 2);
  CHECK_FALSE(odd.sqrt_exact);
  CHECK(odd.b2 >= Value(2.0 / std::sqrt(10001.0)) - pow2(-40));
  for (int k = 2; k < 6; ++k) {
    CHECK(recurrence_bound(3, frac(1, 100), frac(1, 2), 10000, k).bk <=
          recurrence_bound(3, frac(1, 100), frac(1, 2), 10000, k + 1).bk);
  }
  CHECK(recurrence_bound(3, frac(1, 100), frac(1, 2), 40000, 3).bk <
        recurrence_bound(3, frac(1, 100), frac(1, 2), 10000, 3).bk);
  CHECK(error_of([] { recurrence_bound(3, frac(1, 100), frac(1, 2), 100, 1); }) == Errc::PreconditionViolated);
}
