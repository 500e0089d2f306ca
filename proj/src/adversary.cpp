#include "truthlab/adversary.hpp"

#include "truthlab/error.hpp"
#include "truthlab/parallel.hpp"
#include "truthlab/rng.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <set>

namespace truthlab {

namespace {

constexpr std::uint64_t kSampleStream = 0xC11C;
constexpr std::uint64_t kBkStream = 0xB0C5;
constexpr int kMaxRedraws = 8;

long grid_size(const Value& eps) { return eps.get_den().get_si(); }

std::vector<PairKey> machine_pairs(int n) {
  std::vector<PairKey> out;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) out.emplace_back(i, j);
  }
  return out;
}

std::pair<Value, Value> draw_edge(const AdversaryConfig& config, std::size_t edge, int attempt) {
  Rng rng(config.seed, stream_key(kSampleStream, edge, static_cast<std::uint64_t>(attempt)));
  bool on_a = rng.coin();
  Value z = config.eps * Value(static_cast<unsigned long>(rng.uniform(1, static_cast<std::uint64_t>(grid_size(config.eps)))));
  Value bits(static_cast<unsigned long>(rng.uniform(1, (std::uint64_t{1} << 31) - 1)));
  Value u = z + config.eps * z * bits / pow2(31);
  return on_a ? std::make_pair(u, Value(0)) : std::make_pair(Value(0), u);
}

/// Machine holding the zero value of a clique edge (the root side).
int zero_side(const Task& t) { return t.va == 0 ? t.a : t.b; }
int value_side(const Task& t) { return t.va == 0 ? t.b : t.a; }

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Value uint_value(std::uint64_t x) { return Value(static_cast<unsigned long>(x)); }

Value factorial(long k) {
  mpz_class f;
  mpz_fac_ui(f.get_mpz_t(), static_cast<unsigned long>(k));
  return Value(f);
}

}  // namespace

bool AdversaryConfig::nu_within_proof_range() const {
  return nu < xi / (Value(n) * n * pow(Value(4), static_cast<unsigned long>(n)));
}

void validate_config(const AdversaryConfig& c) {
  auto bad = [](const std::string& what) { throw Error(Errc::InvalidConfig, what); };
  if (c.n < 2) bad("n must be at least 2 (a clique needs a machine pair)");
  if (!is_unit_fraction_grid(c.eps)) bad("1/eps must be a positive integer, got eps = " + to_string(c.eps));
  if (c.eps > 1) bad("eps must be at most 1");
  if (c.xi <= 0 || c.xi >= 1) bad("xi must lie in (0, 1)");
  if (c.nu <= 0) bad("nu must be positive");
  if (c.strict_nu && !c.nu_within_proof_range()) bad("nu must be below xi / (n^2 4^n)");
  if (c.ell < 1) bad("ell must be positive");
  if (c.q < 1) bad("q must be positive");
  if (c.tol <= 0) bad("tol must be positive");
}

Json config_to_json(const AdversaryConfig& c) {
  return Json{{"n", c.n},
              {"eps", value_to_json(c.eps)},
              {"xi", value_to_json(c.xi)},
              {"nu", value_to_json(c.nu)},
              {"ell", c.ell},
              {"q", c.q},
              {"seed", c.seed},
              {"tol", value_to_json(c.tol)},
              {"budget", c.budget},
              {"strict_nu", c.strict_nu}};
}

AdversaryConfig config_from_json(const Json& doc) {
  if (!doc.is_object()) throw Error(Errc::ParseError, "config: expected an object");
  AdversaryConfig c;
  auto rational = [&](const char* key, Value& out) {
    if (doc.contains(key)) out = value_from_json(doc.at(key), std::string("config.") + key);
  };
  auto integer = [&](const char* key, auto& out) {
    if (!doc.contains(key)) return;
    const Json& j = doc.at(key);
    if (!j.is_number_integer()) throw Error(Errc::ParseError, std::string("config.") + key + ": expected an integer");
    out = j.get<std::remove_reference_t<decltype(out)>>();
  };
  integer("n", c.n);
  rational("eps", c.eps);
  rational("xi", c.xi);
  rational("nu", c.nu);
  integer("ell", c.ell);
  integer("q", c.q);
  integer("seed", c.seed);
  rational("tol", c.tol);
  integer("budget", c.budget);
  if (doc.contains("strict_nu")) {
    if (!doc.at("strict_nu").is_boolean()) throw Error(Errc::ParseError, "config.strict_nu: expected a boolean");
    c.strict_nu = doc.at("strict_nu").get<bool>();
  }
  return c;
}

Instance sample_multi_clique(const AdversaryConfig& config) {
  validate_config(config);
  std::vector<Task> tasks;
  int id = 1;
  std::size_t edge = 0;
  for (const auto& [i, j] : machine_pairs(config.n)) {
    for (int k = 0; k < config.ell; ++k, ++edge) {
      auto [va, vb] = draw_edge(config, edge, 0);
      tasks.push_back(Task{id++, i, j, va, vb});
    }
  }
  for (int m = 0; m < config.n; ++m) tasks.push_back(Task{id++, m, m, Value(0), Value(0)});
  return Instance(config.n, std::move(tasks));
}

void resample_edge(Instance& clique, const AdversaryConfig& config, std::size_t edge_index, int attempt) {
  auto [va, vb] = draw_edge(config, edge_index, attempt);
  clique.set_values(edge_index, va, vb);
}

int stabilize_continuity(const Oracle& oracle, Instance& clique, const AdversaryConfig& config, int jobs) {
  std::vector<std::size_t> edges;
  for (std::size_t e = 0; e < clique.size(); ++e) {
    if (!clique.task(e).is_loop()) edges.push_back(e);
  }
  auto suspicious = [&](const Instance& inst, std::size_t e) {
    const Task& t = inst.task(e);
    BoundaryProbe probe{&oracle, inst, e, zero_side(t), config.tol};
    return suspected_discontinuity(probe, t.value_for(value_side(t)));
  };
  std::vector<char> flagged(edges.size(), 0);
  parallel_for(edges.size(), jobs, [&](std::size_t k) { flagged[k] = suspicious(clique, edges[k]) ? 1 : 0; });
  int redraws = 0;
  for (std::size_t k = 0; k < edges.size(); ++k) {
    if (!flagged[k]) continue;
    bool fixed = false;
    for (int attempt = 1; attempt <= kMaxRedraws && !fixed; ++attempt) {
      resample_edge(clique, config, edges[k], attempt);
      ++redraws;
      fixed = !suspicious(clique, edges[k]);
    }
    if (!fixed) {
      throw Error(Errc::Discontinuity, "task " + std::to_string(clique.task(edges[k]).id) + " stays discontinuous after " +
                                           std::to_string(kMaxRedraws) + " redraws");
    }
  }
  return redraws;
}

std::vector<EdgeTables> build_tables(const Oracle& oracle, const Instance& clique, const Value& eps, const Value& tol,
                                     int jobs) {
  std::vector<std::size_t> edges;
  for (std::size_t e = 0; e < clique.size(); ++e) {
    if (!clique.task(e).is_loop()) edges.push_back(e);
  }
  std::vector<EdgeTables> out(edges.size());
  parallel_for(edges.size(), jobs, [&](std::size_t k) {
    const Task& t = clique.task(edges[k]);
    EdgeTables& et = out[k];
    et.edge = t.id;
    et.a = t.a;
    et.b = t.b;
    et.at_a = quantize(BoundaryProbe{&oracle, clique, edges[k], t.a, tol}, eps);
    et.at_b = quantize(BoundaryProbe{&oracle, clique, edges[k], t.b, tol}, eps);
    et.slot_side = value_side(t);
    et.slot_z = floor_to_grid(t.value_for(et.slot_side), eps);
  });
  return out;
}

namespace {

struct Group {
  const EdgeTables* first = nullptr;
  std::vector<const EdgeTables*> members;
};

std::map<PairKey, std::vector<Group>> group_tables(const std::vector<EdgeTables>& tables) {
  std::map<PairKey, std::vector<Group>> out;
  for (const auto& et : tables) {
    auto& groups = out[{et.a, et.b}];
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
      return g.first->at_a.same_function(et.at_a) && g.first->at_b.same_function(et.at_b);
    });
    if (it == groups.end()) {
      groups.push_back(Group{&et, {}});
      it = groups.end() - 1;
    }
    it->members.push_back(&et);
  }
  return out;
}

std::vector<DipoleSet> extract_dipoles(const Group& g, const Value& eps) {
  const long grid = grid_size(eps);
  // buckets[side][z index], side 0 = value on a, 1 = value on b
  std::vector<std::vector<std::deque<int>>> buckets(2, std::vector<std::deque<int>>(static_cast<std::size_t>(grid)));
  for (const EdgeTables* et : g.members) {
    long zi = Value(et->slot_z / eps).get_num().get_si() - 1;
    if (zi < 0 || zi >= grid) continue;
    buckets[et->slot_side == et->a ? 0 : 1][static_cast<std::size_t>(zi)].push_back(et->edge);
  }
  std::vector<DipoleSet> out;
  for (;;) {
    for (const auto& side : buckets) {
      for (const auto& b : side) {
        if (b.empty()) return out;
      }
    }
    DipoleSet d{g.first->a, g.first->b, {}, g.first->at_a, g.first->at_b};
    for (auto& side : buckets) {
      for (auto& b : side) {
        d.edges.push_back(b.front());
        b.pop_front();
      }
    }
    std::sort(d.edges.begin(), d.edges.end());
    out.push_back(std::move(d));
  }
}

}  // namespace

std::map<PairKey, std::vector<DipoleSet>> find_dipoles(const std::vector<EdgeTables>& tables, const Value& eps) {
  std::map<PairKey, std::vector<DipoleSet>> out;
  for (const auto& [key, groups] : group_tables(tables)) {
    auto& list = out[key];
    for (const auto& g : groups) {
      auto found = extract_dipoles(g, eps);
      list.insert(list.end(), std::make_move_iterator(found.begin()), std::make_move_iterator(found.end()));
    }
  }
  return out;
}

std::map<PairKey, std::vector<DipoleSet>> find_dipoles(const Oracle& oracle, const Instance& clique, const Value& eps,
                                                       const Value& tol, int jobs) {
  return find_dipoles(build_tables(oracle, clique, eps, tol, jobs), eps);
}

std::map<PairKey, TableClass> choose_classes(const std::vector<EdgeTables>& tables, const Value& eps) {
  std::map<PairKey, TableClass> out;
  for (const auto& [key, groups] : group_tables(tables)) {
    const Group* chosen = nullptr;
    std::size_t chosen_dipoles = 0;
    for (const auto& g : groups) {
      std::size_t d = extract_dipoles(g, eps).size();
      if (d > 0) {
        chosen = &g;
        chosen_dipoles = d;
        break;
      }
    }
    if (!chosen) {
      for (const auto& g : groups) {
        if (!chosen || g.members.size() > chosen->members.size()) chosen = &g;
      }
    }
    TableClass tc{key.first, key.second, {}, chosen->first->at_a, chosen->first->at_b, chosen_dipoles};
    for (const EdgeTables* et : chosen->members) tc.edges.push_back(et->edge);
    out[key] = std::move(tc);
  }
  return out;
}

RootSelection select_root_and_z(const std::map<PairKey, TableClass>& classes, const Value& eps, int n) {
  if (!is_unit_fraction_grid(eps)) throw Error(Errc::PreconditionViolated, "1/eps must be a positive integer");
  const long grid = grid_size(eps);
  for (const auto& key : machine_pairs(n)) {
    if (!classes.count(key)) {
      throw Error(Errc::PreconditionViolated,
                  "no table class for pair (" + std::to_string(key.first) + ", " + std::to_string(key.second) + ")");
    }
  }
  RootSelection sel;
  sel.counting_total = 0;
  std::vector<RootCandidate> all;
  for (int i = 0; i < n; ++i) {
    for (long k = 1; k <= grid; ++k) {
      RootCandidate c{i, k * eps, Value(0), Value(0), false};
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const TableClass& tc = classes.at({std::min(i, j), std::max(i, j)});
        const BoundaryTable& table = i < j ? tc.at_i : tc.at_j;
        c.sum += table.clean(static_cast<std::size_t>(k - 1));
      }
      c.ratio = c.sum / c.z;
      c.meets_bar = c.sum >= (1 - 3 * eps) * (n - 1) * c.z;
      sel.counting_total += c.sum;
      all.push_back(std::move(c));
    }
  }
  std::stable_sort(all.begin(), all.end(), [](const RootCandidate& x, const RootCandidate& y) {
    if (x.ratio != y.ratio) return x.ratio > y.ratio;
    if (x.z != y.z) return x.z > y.z;
    return x.root < y.root;
  });
  for (const auto& c : all) {
    if (c.meets_bar) sel.ranked.push_back(c);
  }
  if (sel.ranked.empty()) {
    const RootCandidate& best = all.front();
    throw Error(Errc::NoNiceStar, "no (root, z) reaches (1 - 3 eps)(n - 1) z; best sum/z = " + to_string(best.ratio) +
                                      " at root " + std::to_string(best.root) + ", z = " + to_string(best.z));
  }
  sel.root = sel.ranked.front().root;
  sel.z = sel.ranked.front().z;
  sel.sum = sel.ranked.front().sum;
  return sel;
}

std::size_t MultiStar::multiplicity() const {
  std::size_t m = SIZE_MAX;
  for (const auto& [leaf, edges] : leaves) m = std::min(m, edges.size());
  return leaves.empty() ? 0 : m;
}

Star MultiStar::star(std::size_t k) const {
  Star s{root, {}};
  for (const auto& [leaf, edges] : leaves) s.tasks.push_back(edges.at(k));
  return s;
}

MultiStar find_nice_multi_star(const Oracle& oracle, const Instance& clique,
                               const std::map<PairKey, TableClass>& classes, const RootSelection& selection,
                               const AdversaryConfig& config) {
  const auto q = static_cast<std::size_t>(config.q);
  for (const auto& cand : selection.ranked) {
    MultiStar ms;
    ms.root = cand.root;
    ms.z = cand.z;
    for (int j = 0; j < clique.n(); ++j) {
      if (j == cand.root) continue;
      auto& list = ms.leaves[j];
      for (int id : classes.at({std::min(cand.root, j), std::max(cand.root, j)}).edges) {
        const Task& t = clique.task(clique.index_of(id));
        const Value& leaf_value = t.value_for(j);
        if (t.value_for(cand.root) == 0 && leaf_value > 0 && floor_to_grid(leaf_value, config.eps) == cand.z) {
          list.push_back(id);
        }
      }
    }
    if (ms.multiplicity() < q) continue;
    for (std::size_t k = 0; k < q; ++k) {
      NiceStarReport nice = is_nice_star(oracle, clique, ms.star(k), config.eps, ms.z, config.tol);
      if (!nice.pass) {
        throw Error(Errc::CertificateMismatch, "selected star " + std::to_string(k) + " at root " +
                                                   std::to_string(ms.root) + " has sum " + to_string(nice.sum) +
                                                   " below " + to_string(nice.threshold));
      }
    }
    return ms;
  }
  throw Error(Errc::InsufficientMultiplicity,
              "no ranked (root, z) has " + std::to_string(q) + " qualifying edges on every leaf");
}

BoxReport find_box_star(const Oracle& oracle, const Instance& clique, const MultiStar& stars, const Value& delta,
                        std::uint64_t budget, const Value& tol) {
  std::vector<std::pair<int, const std::vector<int>*>> leaves;
  for (const auto& [leaf, edges] : stars.leaves) {
    if (edges.empty()) throw Error(Errc::PreconditionViolated, "leaf " + std::to_string(leaf) + " has no edges");
    leaves.emplace_back(leaf, &edges);
  }
  std::vector<std::size_t> choice(leaves.size(), 0);
  auto current = [&] {
    Star s{stars.root, {}};
    for (std::size_t l = 0; l < leaves.size(); ++l) s.tasks.push_back((*leaves[l].second)[choice[l]]);
    return s;
  };
  BoxReport report = is_box(oracle, clique, current(), delta, tol);
  if (report.box) return report;
  std::uint64_t swaps = 0;
  for (std::size_t l = leaves.size(); l-- > 0;) {
    for (std::size_t alt = 1; alt < leaves[l].second->size(); ++alt) {
      if (swaps == budget) {
        throw Error(Errc::BoxNotFound, "no box after " + std::to_string(swaps) + " sibling swaps (budget exhausted)");
      }
      ++swaps;
      choice[l] = alt;
      report = is_box(oracle, clique, current(), delta, tol);
      if (report.box) return report;
    }
    choice[l] = 0;
  }
  throw Error(Errc::BoxNotFound, "no box after " + std::to_string(swaps) + " sibling swaps (siblings exhausted)");
}

WitnessReport build_witness(const Oracle& oracle, const Instance& clique, const BoxReport& box, const Value& z,
                            const Value& eps, const Value& delta, const Value& tol) {
  const int root = box.star.root;
  WitnessReport w;
  w.instance = clique;
  w.star = box.star;
  w.root = root;
  w.z = z;
  w.eps = eps;
  w.delta = delta;
  auto loop = std::find_if(clique.tasks().begin(), clique.tasks().end(),
                           [&](const Task& t) { return t.is_loop() && t.a == root; });
  if (loop == clique.tasks().end()) throw Error(Errc::PreconditionViolated, "no loop at the root machine");
  w.instance.set_value(static_cast<std::size_t>(loop - clique.tasks().begin()), root, z);
  if (box.psi.size() != box.star.tasks.size()) throw Error(Errc::PreconditionViolated, "box report lacks psi values");
  for (std::size_t k = 0; k < box.star.tasks.size(); ++k) {
    w.instance.set_value(w.instance.index_of(box.star.tasks[k]), root, box.psi[k] - 2 * delta);
  }
  w.allocation = oracle.allocate(w.instance);
  w.makespan = makespan(w.instance, w.allocation);
  w.opt = opt_makespan(w.instance);
  const int n = clique.n();
  w.floor = z + (1 - 3 * eps) * (n - 1) * z - 2 * (n - 1) * delta;
  std::string failed;
  if (w.makespan < w.floor - n * tol) failed = "makespan " + to_string(w.makespan) + " below floor " + to_string(w.floor);
  if (w.opt.value > (1 + eps) * z) failed = "OPT " + to_string(w.opt.value) + " exceeds (1 + eps) z";
  if (w.opt.value <= 0) failed = "OPT is zero";
  if (!failed.empty()) {
    throw Error(Errc::AssertionFailed, failed + "\n" + serialize_instance(w.instance));
  }
  w.ratio = w.makespan / w.opt.value;
  return w;
}

bool verify_witness(const WitnessReport& report) {
  Value ms = makespan(report.instance, report.allocation);
  OptResult opt = opt_makespan(report.instance);
  return ms == report.makespan && opt.value == report.opt.value && opt.value > 0 && ms / opt.value == report.ratio &&
         makespan(report.instance, report.opt.witness) == opt.value;
}

void StageLog::add(const std::string& stage, Json detail) {
  stages.push_back(Json{{"stage", stage}, {"detail", std::move(detail)}});
}

WitnessReport run_adversary(const Oracle& oracle, const AdversaryConfig& config, int jobs, StageLog& log) {
  validate_config(config);
  Instance clique = sample_multi_clique(config);
  log.add("sample", Json{{"tasks", clique.size()}, {"n", clique.n()}, {"ell", config.ell}});
  int redraws = stabilize_continuity(oracle, clique, config, jobs);
  log.add("continuity", Json{{"redraws", redraws}});

  auto tables = build_tables(oracle, clique, config.eps, config.tol, jobs);
  auto classes = choose_classes(tables, config.eps);
  Json pairs = Json::array();
  for (const auto& [key, tc] : classes) {
    pairs.push_back(Json{{"pair", {key.first, key.second}}, {"class_size", tc.edges.size()}, {"dipoles", tc.dipoles}});
  }
  log.add("dipoles", pairs);

  RootSelection sel = select_root_and_z(classes, config.eps, config.n);
  log.add("select", Json{{"root", sel.root},
                         {"z", value_to_json(sel.z)},
                         {"sum", value_to_json(sel.sum)},
                         {"counting_total", value_to_json(sel.counting_total)},
                         {"candidates", sel.ranked.size()}});

  MultiStar ms = find_nice_multi_star(oracle, clique, classes, sel, config);
  Json leaves = Json::object();
  for (const auto& [leaf, edges] : ms.leaves) leaves[std::to_string(leaf)] = edges;
  log.add("multistar", Json{{"root", ms.root}, {"z", value_to_json(ms.z)}, {"multiplicity", ms.multiplicity()}, {"leaves", leaves}});

  const Value delta = pow(Value(4), static_cast<unsigned long>(config.n - 1)) * config.nu;
  BoxReport box = find_box_star(oracle, clique, ms, delta, config.budget, config.tol);
  log.add("box", box_report_to_json(box));

  WitnessReport w = build_witness(oracle, clique, box, ms.z, config.eps, delta, config.tol);
  log.add("witness", Json{{"makespan", value_to_json(w.makespan)}, {"opt", value_to_json(w.opt.value)},
                          {"ratio", value_to_json(w.ratio)}});
  return w;
}

std::string manifest_id(const std::string& command, const AdversaryConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(command + "\n" + config_to_json(config).dump())));
  return buf;
}

Json witness_to_json(const WitnessReport& w, const AdversaryConfig& config, const StageLog& log,
                     const std::string& manifest) {
  return Json{{"manifest_id", manifest},
              {"config", config_to_json(config)},
              {"nu_within_proof_range", config.nu_within_proof_range()},
              {"root", w.root},
              {"z", value_to_json(w.z)},
              {"eps", value_to_json(w.eps)},
              {"delta", value_to_json(w.delta)},
              {"star", Json{{"root", w.star.root}, {"tasks", w.star.tasks}}},
              {"instance", instance_to_json(w.instance)},
              {"allocation", allocation_to_json(w.instance, w.allocation)},
              {"makespan", value_to_json(w.makespan)},
              {"opt", value_to_json(w.opt.value)},
              {"opt_allocation", allocation_to_json(w.instance, w.opt.witness)},
              {"ratio", value_to_json(w.ratio)},
              {"ratio_approx", to_double(w.ratio)},
              {"floor", value_to_json(w.floor)},
              {"verified", verify_witness(w)},
              {"stages", log.stages}};
}

BkEstimate estimate_bk(const Oracle& oracle, const Instance& standard, int k, std::size_t samples, const Value& nu,
                       std::uint64_t seed, const Value& tol) {
  if (samples == 0) throw Error(Errc::PreconditionViolated, "sampleCount must be positive");
  if (k < 1 || k > standard.n() - 1) throw Error(Errc::PreconditionViolated, "k must lie in [1, n - 1]");
  std::vector<std::vector<int>> by_leaf(static_cast<std::size_t>(k));
  for (const auto& t : standard.tasks()) {
    if (t.is_loop() || !t.supports(0)) continue;
    int leaf = t.other(0);
    if (leaf >= 1 && leaf <= k) by_leaf[static_cast<std::size_t>(leaf - 1)].push_back(t.id);
  }
  Value total = 1;
  for (const auto& ids : by_leaf) {
    if (ids.empty()) throw Error(Errc::PreconditionViolated, "every leaf needs at least one task");
    total *= static_cast<long>(ids.size());
  }
  const bool with_replacement = Value(static_cast<unsigned long>(samples)) > total;
  const Value delta = pow(Value(4), static_cast<unsigned long>(k)) * nu;
  Rng rng(seed, kBkStream);
  std::set<std::vector<std::size_t>> seen;
  BkEstimate est;
  while (est.samples < samples) {
    std::vector<std::size_t> pick;
    for (const auto& ids : by_leaf) pick.push_back(static_cast<std::size_t>(rng.uniform(0, ids.size() - 1)));
    if (!with_replacement && !seen.insert(pick).second) continue;
    Star star{0, {}};
    for (std::size_t l = 0; l < by_leaf.size(); ++l) star.tasks.push_back(by_leaf[l][pick[l]]);
    ++est.samples;
    if (!is_box(oracle, standard, star, delta, tol).box) ++est.non_boxes;
  }
  est.frequency = uint_value(est.non_boxes) / uint_value(est.samples);
  return est;
}

RecurrenceBound recurrence_bound(int n, const Value& nu, const Value& xi, long ell, int k) {
  if (k < 2) throw Error(Errc::PreconditionViolated, "k must be at least 2");
  if (ell < 1 || nu <= 0 || xi <= 0) throw Error(Errc::PreconditionViolated, "ell, nu and xi must be positive");
  mpz_class root;
  mpz_class l(ell);
  mpz_sqrt(root.get_mpz_t(), l.get_mpz_t());
  RecurrenceBound r;
  r.sqrt_exact = root * root == l;
  const Value sqrt_ell(root);
  const Value base = Value(5 * n) / nu;
  r.b2 = 2 / sqrt_ell;
  r.bk = pow(base, static_cast<unsigned long>(k - 2)) * 2 * Value(n) * n * n / (xi * sqrt_ell);
  r.min_multiplicity = pow(base, static_cast<unsigned long>(2 * n));
  return r;
}

DipoleCliqueBound dipole_clique_bound(long q, int n, const Value& eps) {
  if (!is_unit_fraction_grid(eps)) throw Error(Errc::PreconditionViolated, "1/eps must be a positive integer");
  const long inv = grid_size(eps);
  DipoleCliqueBound b;
  b.K = pow(Value(n) / eps, static_cast<unsigned long>(4 * inv));
  b.p = factorial(2 * inv) * pow(eps / 2, static_cast<unsigned long>(2 * inv));
  b.q_prime = 6 * b.K * q / (b.p * eps);
  return b;
}

}  // namespace truthlab
