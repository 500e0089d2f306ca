#include "truthlab/geometry.hpp"

#include "truthlab/error.hpp"
#include "truthlab/rng.hpp"

#include <algorithm>
#include <bit>

namespace truthlab {

namespace {

Value power_of_two_at_least(const Value& x) {
  int e = 0;
  while (pow2(e) < x) ++e;
  return pow2(e);
}

/// Membership oracle for R_P on a private copy of the instance.
class RegionOracle {
 public:
  RegionOracle(const Oracle& oracle, const Instance& instance, const Star& star)
      : oracle_(oracle), inst_(instance), root_(star.root) {
    check_star(instance, star);
    Value leaf_sum = 0;
    for (int id : star.tasks) {
      std::size_t idx = inst_.index_of(id);
      idx_.push_back(idx);
      leaf_sum += inst_.task(idx).value_for(inst_.task(idx).other(root_));
    }
    cap_ = power_of_two_at_least(inst_.n() * leaf_sum + 1);
  }

  std::size_t size() const { return idx_.size(); }
  const Value& cap() const { return cap_; }

  bool inside(const std::vector<Value>& t) {
    for (std::size_t i = 0; i < idx_.size(); ++i) inst_.set_value(idx_[i], root_, t[i]);
    Allocation a = oracle_.allocate(inst_);
    return std::all_of(idx_.begin(), idx_.end(), [&](std::size_t idx) { return a[idx] == root_; });
  }

  int on_root(const std::vector<Value>& t) {
    for (std::size_t i = 0; i < idx_.size(); ++i) inst_.set_value(idx_[i], root_, t[i]);
    Allocation a = oracle_.allocate(inst_);
    return static_cast<int>(std::count_if(idx_.begin(), idx_.end(), [&](std::size_t idx) { return a[idx] == root_; }));
  }

  /// Largest value of coordinate i keeping the point inside, other
  /// coordinates taken from `base`. Zero when the axis start is outside.
  Value exit(std::vector<Value> base, std::size_t i, const Value& tol) {
    base[i] = 0;
    if (!inside(base)) return 0;
    base[i] = cap_;
    if (inside(base)) return cap_;
    Value lo = 0;
    Value hi = cap_;
    while (hi - lo > tol) {
      base[i] = (lo + hi) / 2;
      if (inside(base)) {
        lo = base[i];
      } else {
        hi = base[i];
      }
    }
    return simplest_between(lo, hi);
  }

 private:
  const Oracle& oracle_;
  Instance inst_;
  int root_;
  std::vector<std::size_t> idx_;
  Value cap_;
};

Value sum_over(const std::vector<Value>& v, unsigned mask) {
  Value s = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (mask & (1u << i)) s += v[i];
  }
  return s;
}

Value leaf_value(const Instance& inst, std::size_t idx, int root) {
  const Task& t = inst.task(idx);
  return t.value_for(t.other(root));
}

/// Uniform rational in [0, 1] on a 2^20 grid.
Value unit_sample(Rng& rng) { return Value(static_cast<unsigned long>(rng.uniform(0, 1 << 20))) / (1 << 20); }

void cross_validate(RegionOracle& region, const RegionFacets& facets, const std::vector<Value>& sigma,
                    std::uint64_t seed) {
  const std::size_t k = region.size();
  const Value& margin = facets.resolution;
  for (const auto& [mask, c] : facets.facets) {
    Rng rng(seed, stream_key(0x5245u, mask));
    for (std::size_t sample = 0; sample < 2 * k; ++sample) {
      std::vector<Value> w(k, Value(0));
      Value total = 0;
      for (std::size_t i = 0; i < k; ++i) {
        if (mask & (1u << i)) {
          w[i] = Value(static_cast<unsigned long>(rng.uniform(1, 64)));
          total += w[i];
        }
      }
      std::vector<Value> rest(k, Value(0));
      for (std::size_t i = 0; i < k; ++i) {
        if (!(mask & (1u << i))) rest[i] = unit_sample(rng) * sigma[i] / 4;
      }
      for (int side : {-1, 1}) {
        std::vector<Value> t = rest;
        Value level = c + side * margin;
        if (level < 0) continue;
        for (std::size_t i = 0; i < k; ++i) {
          if (mask & (1u << i)) t[i] = level * w[i] / total;
        }
        bool ambiguous = false;
        for (const auto& [other_mask, other_c] : facets.facets) {
          if (abs(Value(other_c - sum_over(t, other_mask))) < margin / 4) ambiguous = true;
        }
        if (ambiguous) continue;
        if (region.inside(t) != facets.predicts_inside(t)) {
          throw Error(Errc::ResolutionTooCoarse,
                      "probed facets disagree with the oracle at resolution " + to_string(margin));
        }
      }
    }
  }
}

}  // namespace

void check_star(const Instance& instance, const Star& star) {
  if (star.tasks.empty()) throw Error(Errc::PreconditionViolated, "a star needs at least one task");
  if (star.root < 0 || star.root >= instance.n()) throw Error(Errc::PreconditionViolated, "star root out of range");
  std::vector<int> seen;
  for (int id : star.tasks) {
    if (std::find(seen.begin(), seen.end(), id) != seen.end()) {
      throw Error(Errc::PreconditionViolated, "task " + std::to_string(id) + " repeated in star");
    }
    seen.push_back(id);
    const Task& t = instance.task(instance.index_of(id));
    if (t.is_loop() || !t.supports(star.root)) {
      throw Error(Errc::PreconditionViolated, "task " + std::to_string(id) + " is not an edge at the star root");
    }
  }
}

std::optional<Value> RegionFacets::facet(unsigned mask) const {
  auto it = facets.find(mask);
  if (it == facets.end()) return std::nullopt;
  return it->second;
}

bool RegionFacets::consistent() const {
  for (const auto& [mask, c] : facets) {
    Value singles = 0;
    bool all = true;
    for (std::size_t i = 0; i < star.tasks.size(); ++i) {
      if (!(mask & (1u << i))) continue;
      auto s = facet(1u << i);
      if (!s) {
        all = false;
        break;
      }
      singles += *s;
    }
    if (all && c > singles) return false;
  }
  return true;
}

bool RegionFacets::predicts_inside(const std::vector<Value>& t) const {
  if (empty) return false;
  for (const auto& x : t) {
    if (x < 0) return false;
  }
  for (const auto& [mask, c] : facets) {
    if (sum_over(t, mask) > c) return false;
  }
  return true;
}

RegionFacets probe_region(const Oracle& oracle, const Instance& instance, const Star& star, const Value& resolution,
                          std::uint64_t seed) {
  if (star.tasks.size() > 4) throw Error(Errc::PreconditionViolated, "facet maps are limited to stars of four tasks");
  if (resolution <= 0) throw Error(Errc::PreconditionViolated, "resolution must be positive");
  RegionOracle region(oracle, instance, star);
  RegionFacets out;
  out.star = star;
  out.resolution = resolution;
  const std::size_t k = star.tasks.size();
  const Value tol = resolution / 1024;
  std::vector<Value> zero(k, Value(0));
  if (!region.inside(zero)) {
    out.empty = true;
    return out;
  }
  std::vector<Value> sigma(k);
  for (std::size_t i = 0; i < k; ++i) {
    sigma[i] = region.exit(zero, i, tol);
    out.facets[1u << i] = sigma[i];
  }
  std::vector<unsigned> masks;
  for (unsigned m = 1; m < (1u << k); ++m) {
    if (std::popcount(m) >= 2) masks.push_back(m);
  }
  std::stable_sort(masks.begin(), masks.end(), [](unsigned x, unsigned y) { return std::popcount(x) < std::popcount(y); });
  for (unsigned mask : masks) {
    Value predicted = 0;
    for (unsigned sub = (mask - 1) & mask; sub != 0; sub = (sub - 1) & mask) {
      auto c = out.facet(sub);
      if (!c) continue;
      Value need = (sum_over(sigma, sub) - *c) / std::popcount(sub);
      if (need > predicted) predicted = need;
    }
    Value top = 0;
    for (std::size_t i = 0; i < k; ++i) {
      if ((mask & (1u << i)) && sigma[i] > top) top = sigma[i];
    }
    auto point = [&](const Value& lambda) {
      std::vector<Value> t(k, Value(0));
      for (std::size_t i = 0; i < k; ++i) {
        if (mask & (1u << i)) t[i] = sigma[i] > lambda ? Value(sigma[i] - lambda) : Value(0);
      }
      return t;
    };
    Value entry = 0;
    if (!region.inside(point(0))) {
      Value lo = 0;
      Value hi = top;
      while (hi - lo > tol) {
        Value mid = (lo + hi) / 2;
        if (region.inside(point(mid))) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      entry = simplest_between(lo, hi);
    }
    if (entry > predicted + resolution) {
      out.facets[mask] = sum_over(sigma, mask) - std::popcount(mask) * entry;
    }
  }
  cross_validate(region, out, sigma, seed);
  return out;
}

std::string shape_name(PairShape shape) {
  switch (shape) {
    case PairShape::Crossing: return "Crossing";
    case PairShape::QuasiBundling: return "QuasiBundling";
    case PairShape::QuasiFlipping: return "QuasiFlipping";
    case PairShape::HalfBundlingAtFirst: return "HalfBundlingAtFirst";
    case PairShape::HalfBundlingAtSecond: return "HalfBundlingAtSecond";
    case PairShape::FullyBundling: return "FullyBundling";
    case PairShape::Degenerate: return "Degenerate";
    case PairShape::Unknown: return "Unknown";
  }
  return "Unknown";
}

PairReport classify_pair(const Oracle& oracle, const Instance& instance, int first, int second, int root,
                         const Value& resolution, std::uint64_t seed) {
  Star star{root, {first, second}};
  PairReport report;
  report.region = probe_region(oracle, instance, star, resolution, seed);
  const RegionFacets& r = report.region;
  if (r.empty) {
    report.shape = PairShape::Degenerate;
    return report;
  }
  Value s1 = *r.facet(1);
  Value s2 = *r.facet(2);
  if (s1 < resolution || s2 < resolution) {
    report.shape = PairShape::Degenerate;
    return report;
  }
  RegionOracle region(oracle, instance, star);
  const Value tol = resolution / 1024;
  auto cut = r.facet(3);
  if (!cut) {
    int on = region.on_root({s1 + resolution, s2 + resolution});
    report.shape = on == 0 ? PairShape::Crossing : on == 1 ? PairShape::QuasiFlipping : PairShape::Unknown;
    return report;
  }
  report.cut = *cut;
  // Own facet of task 1 is the segment t1 = s1 for t2 in [0, c - s1].
  Value own1 = *cut - s1;
  Value own2 = *cut - s2;
  auto grade = [&](const Value& len) { return len > resolution ? 1 : len < resolution / 64 ? 0 : -1; };
  int g1 = grade(own1);
  int g2 = grade(own2);
  if (g1 < 0 || g2 < 0) {
    report.shape = PairShape::Unknown;
    return report;
  }
  if (g1 == 1 && abs(Value(region.exit({Value(0), own1 / 2}, 0, tol) - s1)) > resolution) {
    report.shape = PairShape::Unknown;
    return report;
  }
  if (g2 == 1 && abs(Value(region.exit({own2 / 2, Value(0)}, 1, tol) - s2)) > resolution) {
    report.shape = PairShape::Unknown;
    return report;
  }
  Value y_lo = own1 > 0 ? own1 : Value(0);
  Value ya = y_lo + (s2 - y_lo) / 3;
  Value yb = y_lo + 2 * (s2 - y_lo) / 3;
  Value xa = region.exit({Value(0), ya}, 0, tol);
  Value xb = region.exit({Value(0), yb}, 0, tol);
  if (xa == xb) {
    report.shape = PairShape::Unknown;
    return report;
  }
  report.slope = (yb - ya) / (xb - xa);
  if (g1 == 1 && g2 == 1) {
    report.shape = PairShape::QuasiBundling;
  } else if (g1 == 0 && g2 == 1) {
    report.shape = PairShape::HalfBundlingAtFirst;
  } else if (g1 == 1 && g2 == 0) {
    report.shape = PairShape::HalfBundlingAtSecond;
  } else {
    report.shape = PairShape::FullyBundling;
  }
  return report;
}

BoxReport is_box(const Oracle& oracle, const Instance& instance, const Star& star, const Value& delta,
                 const Value& tolerance) {
  check_star(instance, star);
  BoxReport report;
  report.star = star;
  report.delta = delta;
  for (int id : star.tasks) {
    BoundaryProbe probe = make_probe(oracle, instance, id, star.root, tolerance);
    report.psi.push_back(critical_value(probe, leaf_value(instance, probe.task, star.root)).estimate());
  }
  Value smallest = *std::min_element(report.psi.begin(), report.psi.end());
  if (delta >= smallest) {
    throw Error(Errc::DeltaTooLarge, "delta " + to_string(delta) + " is not below min psi " + to_string(smallest));
  }
  Instance inst = instance;
  for (std::size_t i = 0; i < star.tasks.size(); ++i) {
    report.probe.push_back(report.psi[i] - delta);
    inst.set_value(inst.index_of(star.tasks[i]), star.root, report.probe.back());
  }
  report.allocation = oracle.allocate(inst);
  report.box = std::all_of(star.tasks.begin(), star.tasks.end(),
                           [&](int id) { return report.allocation[inst.index_of(id)] == star.root; });
  return report;
}

NiceStarReport is_nice_star(const Oracle& oracle, const Instance& instance, const Star& star, const Value& eps,
                            const Value& z, const Value& tolerance) {
  if (eps <= 0) throw Error(Errc::PreconditionViolated, "eps must be positive");
  check_star(instance, star);
  NiceStarReport report;
  report.sum = 0;
  for (int id : star.tasks) {
    BoundaryProbe probe = make_probe(oracle, instance, id, star.root, tolerance);
    report.sum += critical_value(probe, leaf_value(instance, probe.task, star.root)).estimate();
  }
  report.threshold = (1 - 3 * eps) * (instance.n() - 1) * z - static_cast<long>(star.tasks.size()) * tolerance;
  report.pass = report.sum >= report.threshold;
  return report;
}

ChoppedReport is_chopped_off_box(const Oracle& oracle, const Instance& instance, const Star& star, const Value& nu,
                                 std::uint64_t budget, const Value& tolerance) {
  check_star(instance, star);
  const std::size_t k = star.tasks.size();
  if (k < 3) throw Error(Errc::PreconditionViolated, "chopped-off boxes need at least three tasks");
  if (nu <= 0) throw Error(Errc::PreconditionViolated, "nu must be positive");
  const int n = instance.n();
  if (Value(4 * n) / nu > Value(static_cast<unsigned long>(budget))) {
    throw Error(Errc::GridTooFine, "grid of 4n/nu points exceeds the probe budget");
  }
  const Value delta = pow(Value(4), k - 1) * nu;
  ChoppedReport report;
  for (std::size_t i = 0; i < k; ++i) {
    Star sub{star.root, {}};
    for (std::size_t j = 0; j < k; ++j) {
      if (j != i) sub.tasks.push_back(star.tasks[j]);
    }
    report.sub_boxes.push_back(is_box(oracle, instance, sub, delta, tolerance).box);
  }
  Star without_last{star.root, std::vector<int>(star.tasks.begin(), star.tasks.end() - 1)};
  std::size_t last = instance.index_of(star.tasks.back());
  const Value leaf = leaf_value(instance, last, star.root);
  const int leaf_machine = instance.task(last).other(star.root);
  const Value step = nu / (4 * n);
  Instance moved = instance;
  for (long q = 1; q * step < leaf; ++q) {
    moved.set_value(last, leaf_machine, leaf - q * step);
    ++report.grid_points;
    if (!is_box(oracle, moved, without_last, delta, tolerance).box) {
      report.grid_ok = false;
      break;
    }
  }
  report.chopped = report.grid_ok && std::all_of(report.sub_boxes.begin(), report.sub_boxes.end(), [](bool b) { return b; });
  return report;
}

Instance shift_to_nu(const Oracle& oracle, const Instance& instance, const Star& star, const Value& nu,
                     const Value& tolerance) {
  check_star(instance, star);
  if (nu < 0) throw Error(Errc::PreconditionViolated, "nu must be nonnegative");
  const Value shift = pow(Value(4), star.tasks.size()) * nu;
  Instance out = instance;
  for (int id : star.tasks) {
    BoundaryProbe probe = make_probe(oracle, instance, id, star.root, tolerance);
    Value psi = critical_value(probe, leaf_value(instance, probe.task, star.root)).estimate();
    if (psi < shift) {
      throw Error(Errc::NegativeValue, "shift by " + to_string(shift) + " overshoots psi of task " + std::to_string(id));
    }
    out.set_value(probe.task, star.root, psi - shift);
  }
  return out;
}

std::optional<FourCycle> find_c4(const std::vector<std::vector<bool>>& adjacency) {
  for (std::size_t r1 = 0; r1 < adjacency.size(); ++r1) {
    for (std::size_t r2 = r1 + 1; r2 < adjacency.size(); ++r2) {
      std::vector<std::size_t> common;
      std::size_t width = std::min(adjacency[r1].size(), adjacency[r2].size());
      for (std::size_t c = 0; c < width && common.size() < 2; ++c) {
        if (adjacency[r1][c] && adjacency[r2][c]) common.push_back(c);
      }
      if (common.size() == 2) return FourCycle{{r1, r2}, {common[0], common[1]}};
    }
  }
  return std::nullopt;
}

Instance standard_instance(const std::vector<std::vector<Value>>& leaf_values) {
  std::vector<Task> tasks;
  int id = 1;
  for (std::size_t leaf = 0; leaf < leaf_values.size(); ++leaf) {
    for (const auto& s : leaf_values[leaf]) {
      tasks.push_back(Task{id++, 0, static_cast<int>(leaf + 1), Value(0), s});
    }
  }
  return Instance(static_cast<int>(leaf_values.size()) + 1, std::move(tasks));
}

std::vector<std::vector<bool>> BaseCaseReport::non_box_graph() const {
  std::vector<std::vector<bool>> g = boxes;
  for (auto& row : g) row.flip();
  return g;
}

BaseCaseReport base_case_check(const Oracle& oracle, const Instance& instance, int root, const std::vector<int>& first,
                               const std::vector<int>& second, const Value& nu, const Value& tolerance) {
  if (nu <= 0) throw Error(Errc::PreconditionViolated, "nu must be positive");
  const Value delta = 32 * nu;
  BaseCaseReport report;
  report.boxes.assign(first.size(), std::vector<bool>(second.size(), false));
  report.depths.assign(first.size(), std::vector<std::optional<Value>>(second.size()));
  for (std::size_t x = 0; x < first.size(); ++x) {
    for (std::size_t y = 0; y < second.size(); ++y) {
      Star star{root, {first[x], second[y]}};
      BoxReport box = is_box(oracle, instance, star, delta, tolerance);
      report.boxes[x][y] = box.box;
      if (box.box) {
        ++report.box_count;
        continue;
      }
      RegionFacets region = probe_region(oracle, instance, star, nu);
      auto cut = region.facet(3);
      if (!cut) {
        report.depths_ok = false;
        continue;
      }
      Value depth = box.psi[0] + box.psi[1] - *cut;
      report.depths[x][y] = depth;
      if (depth < delta) report.depths_ok = false;
    }
  }
  return report;
}

AffineMinimizer split_gadget(int first, int second, int root, const Value& c) {
  AffineMinimizer spec;
  spec.groups.push_back(GroupTerm{{first, second}, root, GroupWhen::Split, c});
  return spec;
}

Json region_to_json(const RegionFacets& region) {
  Json facets = Json::array();
  for (const auto& [mask, c] : region.facets) {
    Json ids = Json::array();
    for (std::size_t i = 0; i < region.star.tasks.size(); ++i) {
      if (mask & (1u << i)) ids.push_back(region.star.tasks[i]);
    }
    facets.push_back(Json{{"tasks", ids}, {"c", value_to_json(c)}});
  }
  return Json{{"root", region.star.root},
              {"tasks", region.star.tasks},
              {"resolution", value_to_json(region.resolution)},
              {"empty", region.empty},
              {"facets", facets}};
}

Json pair_report_to_json(const PairReport& report) {
  Json doc{{"shape", shape_name(report.shape)}, {"region", region_to_json(report.region)}};
  doc["cut"] = report.cut ? value_to_json(*report.cut) : Json(nullptr);
  doc["slope"] = report.slope ? value_to_json(*report.slope) : Json(nullptr);
  return doc;
}

Json box_report_to_json(const BoxReport& report) {
  Json psi = Json::array();
  Json probe = Json::array();
  for (const auto& v : report.psi) psi.push_back(value_to_json(v));
  for (const auto& v : report.probe) probe.push_back(value_to_json(v));
  return Json{{"root", report.star.root},
              {"tasks", report.star.tasks},
              {"delta", value_to_json(report.delta)},
              {"psi", psi},
              {"probe", probe},
              {"allocation", report.allocation.machine},
              {"verdict", report.box ? "box" : "notBox"}};
}

}  // namespace truthlab
