#include "truthlab/boundary.hpp"

#include "truthlab/error.hpp"

#include <algorithm>

namespace truthlab {

namespace {

Value smallest_power_of_two_at_least(const Value& x) {
  int e = 0;
  while (pow2(e) < x) ++e;
  while (e > -64 && pow2(e - 1) >= x) --e;
  return pow2(e);
}

struct Bisector {
  const BoundaryProbe& probe;
  Instance inst;
  int other;

  Bisector(const BoundaryProbe& p, const Value& s) : probe(p), inst(p.context) {
    const Task& t = inst.task(probe.task);
    if (t.is_loop()) throw Error(Errc::PreconditionViolated, "loops have no critical value");
    if (!t.supports(probe.side)) throw Error(Errc::PreconditionViolated, "probed side is not an endpoint");
    if (s < 0) throw Error(Errc::NegativeValue, "leaf value must be nonnegative");
    other = t.other(probe.side);
    inst.set_value(probe.task, other, s);
  }

  bool to_side(const Value& t) {
    inst.set_value(probe.task, probe.side, t);
    return probe.oracle->allocate_task(inst, probe.task) == probe.side;
  }
};

CriticalInterval bisect(const BoundaryProbe& probe, const Value& s, bool allow_unbounded) {
  if (probe.tolerance <= 0) throw Error(Errc::PreconditionViolated, "tolerance must be positive");
  Bisector b(probe, s);
  Value cap = b.inst.n() * s + 1;
  Value half = cap / 2;
  bool at_zero = b.to_side(0);
  bool at_half = b.to_side(half);
  bool at_cap = b.to_side(cap);
  if ((!at_zero && at_half) || (!at_half && at_cap)) {
    throw Error(Errc::NotMonotone, "allocation of task " + std::to_string(b.inst.task(probe.task).id) +
                                       " is not monotone in the probed value");
  }
  if (!at_zero) return CriticalInterval{Value(0), Value(0), false};
  if (at_cap) {
    if (!allow_unbounded) {
      throw Error(Errc::Unbounded, "task " + std::to_string(b.inst.task(probe.task).id) +
                                       " stays on the probed side up to n*s + 1");
    }
    return CriticalInterval{cap, cap, true};
  }
  Value lo = 0;
  Value hi = smallest_power_of_two_at_least(cap);
  if (hi != cap && b.to_side(hi)) {
    throw Error(Errc::NotMonotone, "task returns to the probed side above the cap");
  }
  while (hi - lo > probe.tolerance) {
    Value mid = (lo + hi) / 2;
    if (b.to_side(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return CriticalInterval{lo, hi, false};
}

}  // namespace

BoundaryProbe make_probe(const Oracle& oracle, const Instance& context, int task_id, int side, const Value& tolerance) {
  return BoundaryProbe{&oracle, context, context.index_of(task_id), side, tolerance};
}

Value CriticalInterval::estimate() const { return simplest_between(lo, hi); }

CriticalInterval critical_value(const BoundaryProbe& probe, const Value& s) { return bisect(probe, s, false); }

CriticalInterval critical_value_or_cap(const BoundaryProbe& probe, const Value& s) { return bisect(probe, s, true); }

bool suspected_discontinuity(const BoundaryProbe& probe, const Value& s) {
  const Value h = pow2(-20);
  std::vector<Value> points;
  if (s - h >= 0) points.push_back(s - h);
  points.push_back(s);
  points.push_back(s + h);
  std::vector<CriticalInterval> seen;
  for (const auto& p : points) seen.push_back(critical_value_or_cap(probe, p));
  bool all_unbounded = std::all_of(seen.begin(), seen.end(), [](const auto& c) { return c.unbounded; });
  if (all_unbounded) return false;
  for (const auto& c : seen) {
    if (c.unbounded) return true;
  }
  Value lo = seen.front().estimate();
  Value hi = lo;
  for (const auto& c : seen) {
    Value e = c.estimate();
    lo = std::min(lo, e);
    hi = std::max(hi, e);
  }
  return hi - lo > 64 * h;
}

BoundaryTable quantize(const BoundaryProbe& probe, const Value& eps) {
  if (!is_unit_fraction_grid(eps)) throw Error(Errc::PreconditionViolated, "1/eps must be a positive integer");
  BoundaryTable table;
  table.edge = probe.context.task(probe.task).id;
  table.side = probe.side;
  table.eps = eps;
  long steps = eps.get_den().get_si();
  int n = probe.context.n();
  for (long k = 1; k <= steps; ++k) {
    Value z = k * eps;
    CriticalInterval c = critical_value_or_cap(probe, z);
    Value est = c.estimate();
    TableEntryValue entry{z, floor_to_grid(est, eps), c.unbounded || est >= n * z};
    table.values.push_back(std::move(entry));
  }
  return table;
}

Json table_to_json(const BoundaryTable& table) {
  Json values = Json::array();
  Json breaches = Json::array();
  for (const auto& e : table.values) {
    values.push_back(Json::array({value_to_json(e.z), value_to_json(e.psi)}));
    if (e.breach) breaches.push_back(value_to_json(e.z));
  }
  return Json{{"edge", table.edge},
              {"side", table.side},
              {"eps", value_to_json(table.eps)},
              {"values", values},
              {"breach", breaches}};
}

BoundaryTable table_from_json(const Json& doc) {
  BoundaryTable table;
  table.edge = int_from_json(doc, "edge", "table");
  auto side = doc.find("side");
  if (side != doc.end() && side->is_number_integer()) table.side = side->get<int>();
  table.eps = value_from_json(member(doc, "eps", "table"), "table.eps");
  const Json& values = member(doc, "values", "table");
  if (!values.is_array()) throw Error(Errc::ParseError, "table.values: expected an array");
  std::vector<Value> breached;
  auto br = doc.find("breach");
  if (br != doc.end() && br->is_array()) {
    for (std::size_t k = 0; k < br->size(); ++k) breached.push_back(value_from_json((*br)[k], "table.breach"));
  }
  for (std::size_t k = 0; k < values.size(); ++k) {
    std::string where = "table.values[" + std::to_string(k) + "]";
    const Json& pair = values[k];
    if (!pair.is_array() || pair.size() != 2) throw Error(Errc::ParseError, where + ": expected [\"z\", \"psi\"]");
    TableEntryValue e{value_from_json(pair[0], where), value_from_json(pair[1], where), false};
    e.breach = std::find(breached.begin(), breached.end(), e.z) != breached.end();
    table.values.push_back(std::move(e));
  }
  return table;
}

YoungResult young_check(const RealFunction& psi, const RealFunction& inverse, const Value& a, const Value& step) {
  if (step <= 0 || a < 0) throw Error(Errc::PreconditionViolated, "need a >= 0 and a positive step");
  YoungResult r;
  r.lhs = 0;
  r.target = a * a;
  Value prev_psi = -1;
  Value prev_inv = -1;
  for (Value x = 0; x < a; x += step) {
    Value width = std::min(Value(step), Value(a - x));
    Value p = psi(x);
    Value q = inverse(x);
    if (p < prev_psi || q < prev_inv) throw Error(Errc::NotMonotone, "boundary samples decrease");
    prev_psi = p;
    prev_inv = q;
    r.lhs += width * (p + q);
  }
  Value pa = psi(a);
  Value qa = inverse(a);
  if (pa < prev_psi || qa < prev_inv) throw Error(Errc::NotMonotone, "boundary samples decrease");
  r.error_bound = step * (pa + qa);
  r.pass = r.lhs >= r.target - r.error_bound;
  return r;
}

YoungResult young_check_edge(const Oracle& oracle, const Instance& instance, int task_id, const Value& a,
                             const Value& step, const Value& tolerance) {
  std::size_t idx = instance.index_of(task_id);
  const Task& t = instance.task(idx);
  BoundaryProbe forward{&oracle, instance, idx, t.a, tolerance};
  BoundaryProbe backward{&oracle, instance, idx, t.b, tolerance};
  auto psi = [&](const Value& x) { return critical_value_or_cap(forward, x).lo; };
  auto inv = [&](const Value& x) { return critical_value_or_cap(backward, x).lo; };
  return young_check(psi, inv, a, step);
}

SlopeReport bounded_slope_check(const BoundaryProbe& probe, const std::vector<Value>& samples) {
  SlopeReport report;
  int n = probe.context.n();
  for (const auto& x : samples) {
    if (x < 0 || x > 1) throw Error(Errc::PreconditionViolated, "slope samples must lie in (0, 1]");
    if (x == 0) continue;
    SlopeSample s{x, critical_value_or_cap(probe, x), false};
    s.flagged = s.interval.unbounded || s.interval.hi >= n * x;
    report.any_flag = report.any_flag || s.flagged;
    report.samples.push_back(std::move(s));
  }
  return report;
}

SiblingReport sibling_independence_check(const BoundaryProbe& probe, const Value& s, int sibling_id,
                                         const std::vector<std::pair<Value, Value>>& perturbations) {
  std::size_t sib = probe.context.index_of(sibling_id);
  const Task& e = probe.context.task(probe.task);
  const Task& f = probe.context.task(sib);
  if (sib == probe.task || std::minmax(e.a, e.b) != std::minmax(f.a, f.b)) {
    throw Error(Errc::PreconditionViolated, "sibling must be a distinct parallel edge");
  }
  SiblingReport report;
  report.intervals.push_back(critical_value_or_cap(probe, s));
  for (const auto& [va, vb] : perturbations) {
    BoundaryProbe moved = probe;
    moved.context.set_values(sib, va, vb);
    report.intervals.push_back(critical_value_or_cap(moved, s));
  }
  Value max_lo = report.intervals.front().lo;
  Value min_hi = report.intervals.front().hi;
  for (const auto& c : report.intervals) {
    max_lo = std::max(max_lo, c.lo);
    min_hi = std::min(min_hi, c.hi);
  }
  report.pass = max_lo <= min_hi;
  return report;
}

LipschitzReport lipschitz_check(const BoundaryProbe& probe, const Value& s, const std::vector<Perturbation>& deltas) {
  LipschitzReport report;
  Value base = critical_value_or_cap(probe, s).estimate();
  for (const auto& pert : deltas) {
    BoundaryProbe moved = probe;
    Value l1 = 0;
    for (const auto& [id, delta] : pert) {
      std::size_t idx = moved.context.index_of(id);
      if (idx == probe.task) throw Error(Errc::PreconditionViolated, "perturbations must avoid the probed task");
      const Task& t = moved.context.task(idx);
      if (!t.supports(probe.side)) throw Error(Errc::PreconditionViolated, "perturbed task does not touch the probed side");
      Value v = t.value_for(probe.side) + delta;
      if (v < 0) throw Error(Errc::PreconditionViolated, "perturbation drives a value below zero");
      moved.context.set_value(idx, probe.side, v);
      l1 += abs(delta);
    }
    Value diff = abs(critical_value_or_cap(moved, s).estimate() - base);
    LipschitzSample sample{diff, l1, diff <= l1 + 2 * probe.tolerance};
    report.pass = report.pass && sample.pass;
    report.samples.push_back(std::move(sample));
  }
  return report;
}

AlphaReport alpha_bounds_check(const Oracle& oracle, const Instance& instance,
                               const std::vector<std::pair<int, int>>& edges, const Value& tolerance) {
  AlphaReport report;
  int n = instance.n();
  for (const auto& [id, root] : edges) {
    BoundaryProbe probe = make_probe(oracle, instance, id, root, tolerance);
    const Task& t = instance.task(probe.task);
    if (!t.supports(root) || t.is_loop()) throw Error(Errc::PreconditionViolated, "root must be one endpoint of an edge");
    Value s = t.value_for(t.other(root));
    if (s <= 0 || s > 1) throw Error(Errc::PreconditionViolated, "leaf values must lie in (0, 1]");
    AlphaEdge e{id, root, s, critical_value_or_cap(probe, s), Value(0)};
    e.alpha = e.interval.estimate();
    e.lower_ok = e.interval.lo > s / n;
    e.upper_ok = !e.interval.unbounded && e.interval.hi < n * s;
    report.pass = report.pass && e.lower_ok && e.upper_ok;
    report.edges.push_back(std::move(e));
  }
  return report;
}

}  // namespace truthlab
