#include "truthlab/io.hpp"

#include "truthlab/error.hpp"

#include <fstream>
#include <sstream>

namespace truthlab {

namespace {

std::string line_and_column(std::string_view text, std::size_t offset) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw Error(Errc::ParseError, where + ": " + what);
}

const char* side_name(Side s) { return s == Side::A ? "a" : "b"; }

Side side_from(const Json& j, const std::string& where) {
  if (!j.is_string()) fail(where, "expected \"a\" or \"b\"");
  auto s = j.get<std::string>();
  if (s == "a") return Side::A;
  if (s == "b") return Side::B;
  fail(where, "expected \"a\" or \"b\", got \"" + s + "\"");
}

const char* when_name(GroupWhen w) {
  switch (w) {
    case GroupWhen::Split: return "split";
    case GroupWhen::AllOn: return "all_on";
    case GroupWhen::AllAway: return "all_away";
  }
  return "split";
}

GroupWhen when_from(const Json& j, const std::string& where) {
  if (!j.is_string()) fail(where, "expected a pattern name");
  auto s = j.get<std::string>();
  if (s == "split") return GroupWhen::Split;
  if (s == "all_on") return GroupWhen::AllOn;
  if (s == "all_away") return GroupWhen::AllAway;
  fail(where, "unknown pattern \"" + s + "\"");
}

Json values_to_json(const std::vector<Value>& vs) {
  Json arr = Json::array();
  for (const auto& v : vs) arr.push_back(value_to_json(v));
  return arr;
}

std::vector<Value> values_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of rationals");
  std::vector<Value> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(value_from_json(j[k], where + "[" + std::to_string(k) + "]"));
  return out;
}

std::vector<int> ints_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of integers");
  std::vector<int> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number_integer()) fail(where + "[" + std::to_string(k) + "]", "expected an integer");
    out.push_back(j[k].get<int>());
  }
  return out;
}

Json threshold_to_json(const PiecewiseLinear& g) {
  Json arr = Json::array();
  for (const auto& [x, y] : g.points) arr.push_back(Json::array({value_to_json(x), value_to_json(y)}));
  return arr;
}

PiecewiseLinear threshold_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected a list of breakpoints");
  PiecewiseLinear g;
  for (std::size_t k = 0; k < j.size(); ++k) {
    std::string at = where + "[" + std::to_string(k) + "]";
    if (!j[k].is_array() || j[k].size() != 2) fail(at, "expected a [\"x\", \"y\"] pair");
    g.points.emplace_back(value_from_json(j[k][0], at + "[0]"), value_from_json(j[k][1], at + "[1]"));
  }
  return g;
}

}  // namespace

Json parse_document(std::string_view text, const std::string& source) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::ParseError, source + ": malformed document at " + line_and_column(text, e.byte > 0 ? e.byte - 1 : 0));
  }
}

std::string dump_document(const Json& doc) { return doc.dump(2) + "\n"; }

Json value_to_json(const Value& v) { return to_string(v); }

Value value_from_json(const Json& j, const std::string& field) {
  if (j.is_string()) {
    try {
      return parse_value(j.get<std::string>());
    } catch (const Error& e) {
      fail(field, e.what());
    }
  }
  if (j.is_number_integer()) return Value(j.get<long>());
  fail(field, "expected a rational string \"p/q\"");
}

const Json& member(const Json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object()) fail(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(where, "missing field \"" + key + "\"");
  return *it;
}

int int_from_json(const Json& obj, const std::string& key, const std::string& where) {
  const Json& j = member(obj, key, where);
  if (!j.is_number_integer()) fail(where + "." + key, "expected an integer");
  return j.get<int>();
}

Json instance_to_json(const Instance& instance) {
  Json tasks = Json::array();
  for (const auto& t : instance.tasks()) {
    tasks.push_back({{"id", t.id}, {"a", t.a}, {"b", t.b}, {"va", value_to_json(t.va)}, {"vb", value_to_json(t.vb)}});
  }
  return Json{{"n", instance.n()}, {"tasks", tasks}};
}

Instance instance_from_json(const Json& doc) {
  int n = int_from_json(doc, "n", "instance");
  const Json& tasks = member(doc, "tasks", "instance");
  if (!tasks.is_array()) fail("instance.tasks", "expected an array");
  std::vector<Task> out;
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    std::string where = "instance.tasks[" + std::to_string(k) + "]";
    const Json& tj = tasks[k];
    Task t;
    t.id = int_from_json(tj, "id", where);
    t.a = int_from_json(tj, "a", where);
    t.b = int_from_json(tj, "b", where);
    t.va = value_from_json(member(tj, "va", where), where + ".va");
    t.vb = value_from_json(member(tj, "vb", where), where + ".vb");
    out.push_back(std::move(t));
  }
  try {
    return Instance(n, std::move(out));
  } catch (const Error& e) {
    fail("instance", e.what());
  }
}

std::string serialize_instance(const Instance& instance) { return dump_document(instance_to_json(instance)); }

Instance parse_instance(std::string_view text) { return instance_from_json(parse_document(text, "instance")); }

Json allocation_to_json(const Instance& instance, const Allocation& alloc) {
  Json arr = Json::array();
  for (std::size_t j = 0; j < alloc.size(); ++j) {
    arr.push_back({{"task", instance.task(j).id}, {"machine", alloc[j]}});
  }
  return arr;
}

Json spec_to_json(const MechanismSpec& spec) {
  Json doc{{"type", variant_name(spec)}};
  if (const auto* a = std::get_if<AffineMinimizer>(&spec)) {
    doc["lambda"] = values_to_json(a->lambda);
    Json gamma = Json::array();
    for (const auto& g : a->gamma) gamma.push_back({{"task", g.task}, {"machine", g.machine}, {"value", value_to_json(g.value)}});
    doc["gamma"] = gamma;
    Json groups = Json::array();
    for (const auto& g : a->groups) {
      groups.push_back({{"tasks", g.tasks}, {"machine", g.machine}, {"when", when_name(g.when)},
                        {"constant", value_to_json(g.constant)}});
    }
    doc["groups"] = groups;
    Json table = Json::array();
    for (const auto& e : a->table) table.push_back({{"assignment", e.assignment}, {"value", value_to_json(e.value)}});
    doc["table"] = table;
  } else if (const auto* ti = std::get_if<TaskIndependent>(&spec)) {
    Json thresholds = Json::object();
    for (const auto& [id, g] : ti->thresholds) thresholds[std::to_string(id)] = threshold_to_json(g);
    doc["thresholds"] = thresholds;
    doc["default"] = threshold_to_json(ti->fallback);
  } else if (const auto* b = std::get_if<Bundling1D>(&spec)) {
    doc["lambda"] = values_to_json(b->lambda);
    Json groups = Json::array();
    for (const auto& g : b->groups) groups.push_back({{"tasks", g.tasks}, {"machine", g.machine}});
    doc["groups"] = groups;
  } else if (const auto* c = std::get_if<Constant>(&spec)) {
    doc["default"] = side_name(c->fallback);
    Json overrides = Json::object();
    for (const auto& [id, s] : c->overrides) overrides[std::to_string(id)] = side_name(s);
    doc["overrides"] = overrides;
  } else if (const auto* w = std::get_if<WindowFixture>(&spec)) {
    doc["name"] = "window";
    doc["lo"] = value_to_json(w->lo);
    doc["hi"] = value_to_json(w->hi);
  }
  return doc;
}

MechanismSpec spec_from_json(const Json& doc) {
  const Json& type_j = member(doc, "type", "mechanism");
  if (!type_j.is_string()) fail("mechanism.type", "expected a string");
  std::string type = type_j.get<std::string>();
  auto optional_array = [&](const char* key) -> Json {
    auto it = doc.find(key);
    return it == doc.end() ? Json::array() : *it;
  };
  auto parse_id = [](const std::string& key, const std::string& where) {
    try {
      std::size_t used = 0;
      int id = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
      return id;
    } catch (const std::exception&) {
      fail(where, "task key \"" + key + "\" is not an integer");
    }
  };
  MechanismSpec spec;
  if (type == "vcg") {
    spec = Vcg{};
  } else if (type == "affine") {
    AffineMinimizer a;
    a.lambda = values_from_json(optional_array("lambda"), "mechanism.lambda");
    Json gamma = optional_array("gamma");
    for (std::size_t k = 0; k < gamma.size(); ++k) {
      std::string where = "mechanism.gamma[" + std::to_string(k) + "]";
      a.gamma.push_back({int_from_json(gamma[k], "task", where), int_from_json(gamma[k], "machine", where),
                         value_from_json(member(gamma[k], "value", where), where + ".value")});
    }
    Json groups = optional_array("groups");
    for (std::size_t k = 0; k < groups.size(); ++k) {
      std::string where = "mechanism.groups[" + std::to_string(k) + "]";
      GroupTerm g;
      g.tasks = ints_from_json(member(groups[k], "tasks", where), where + ".tasks");
      g.machine = int_from_json(groups[k], "machine", where);
      auto w = groups[k].find("when");
      g.when = w == groups[k].end() ? GroupWhen::Split : when_from(*w, where + ".when");
      g.constant = value_from_json(member(groups[k], "constant", where), where + ".constant");
      a.groups.push_back(std::move(g));
    }
    Json table = optional_array("table");
    for (std::size_t k = 0; k < table.size(); ++k) {
      std::string where = "mechanism.table[" + std::to_string(k) + "]";
      a.table.push_back({ints_from_json(member(table[k], "assignment", where), where + ".assignment"),
                         value_from_json(member(table[k], "value", where), where + ".value")});
    }
    spec = std::move(a);
  } else if (type == "task_independent") {
    TaskIndependent ti;
    auto th = doc.find("thresholds");
    if (th != doc.end()) {
      if (!th->is_object()) fail("mechanism.thresholds", "expected an object keyed by task id");
      for (auto it = th->begin(); it != th->end(); ++it) {
        std::string where = "mechanism.thresholds." + it.key();
        ti.thresholds[parse_id(it.key(), where)] = threshold_from_json(it.value(), where);
      }
    }
    auto def = doc.find("default");
    if (def != doc.end()) ti.fallback = threshold_from_json(*def, "mechanism.default");
    spec = std::move(ti);
  } else if (type == "bundling") {
    Bundling1D b;
    b.lambda = values_from_json(optional_array("lambda"), "mechanism.lambda");
    Json groups = optional_array("groups");
    for (std::size_t k = 0; k < groups.size(); ++k) {
      std::string where = "mechanism.groups[" + std::to_string(k) + "]";
      b.groups.push_back({ints_from_json(member(groups[k], "tasks", where), where + ".tasks"),
                          int_from_json(groups[k], "machine", where)});
    }
    spec = std::move(b);
  } else if (type == "constant") {
    Constant c;
    auto def = doc.find("default");
    if (def != doc.end()) c.fallback = side_from(*def, "mechanism.default");
    auto ov = doc.find("overrides");
    if (ov != doc.end()) {
      if (!ov->is_object()) fail("mechanism.overrides", "expected an object keyed by task id");
      for (auto it = ov->begin(); it != ov->end(); ++it) {
        std::string where = "mechanism.overrides." + it.key();
        c.overrides[parse_id(it.key(), where)] = side_from(it.value(), where);
      }
    }
    spec = std::move(c);
  } else if (type == "fixture") {
    auto name = doc.find("name");
    if (name != doc.end() && (!name->is_string() || name->get<std::string>() != "window")) {
      fail("mechanism.name", "unknown fixture");
    }
    WindowFixture w;
    auto lo = doc.find("lo");
    if (lo != doc.end()) w.lo = value_from_json(*lo, "mechanism.lo");
    auto hi = doc.find("hi");
    if (hi != doc.end()) w.hi = value_from_json(*hi, "mechanism.hi");
    spec = w;
  } else {
    fail("mechanism.type", "unknown mechanism type \"" + type + "\"");
  }
  validate_spec(spec);
  return spec;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << contents;
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace truthlab
