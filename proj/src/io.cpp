#include "otcert/io.hpp"

#include <cstdint>
#include <cstdio>

namespace otcert {

namespace {

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument(what); }

std::string scalar_text(const Json& j, const std::string& where) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer() || j.is_number_unsigned()) return j.dump();
  if (j.is_number_float()) return j.dump();
  fail(where + ": expected a number or a string");
}

template <class T>
T finite_from_json(const Json& j, const std::string& where) {
  auto v = ext_from_json<T>(j);
  if (!v.is_finite()) fail(where + ": value must be finite");
  return v.value();
}

template <class T>
void flatten_dense(const Json& j, std::size_t depth, std::size_t arity, std::vector<ExtReal<T>>& out) {
  if (depth == arity) {
    out.push_back(ext_from_json<T>(j));
    return;
  }
  if (!j.is_array()) fail("cost.dense: nesting depth does not match the number of spaces");
  for (const auto& e : j) flatten_dense<T>(e, depth + 1, arity, out);
}

template <class T>
CostTensor<T> rule_cost(const std::string& rule, const std::vector<Space>& spaces) {
  std::vector<std::vector<T>> coords;
  for (const auto& s : spaces) {
    std::vector<T> c;
    for (const auto& l : s.labels()) {
      try {
        c.push_back(NumberTraits<T>::parse(l));
      } catch (const std::invalid_argument&) {
        fail("cost rule '" + rule + "' needs numeric labels, got '" + l + "'");
      }
    }
    coords.push_back(std::move(c));
  }
  const bool quadratic = rule == "quadratic";
  if (!quadratic && rule != "absolute") fail("unknown cost rule '" + rule + "'");
  return CostTensor<T>::tabulate(spaces, [&](std::span<const std::size_t> idx) {
    T total(0);
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = i + 1; j < idx.size(); ++j) {
        T d = coords[i][idx[i]] - coords[j][idx[j]];
        total += quadratic ? T(d * d / T(2)) : NumberTraits<T>::abs(d);
      }
    return ExtReal<T>(total);
  });
}

template <class T>
Json dense_json(const CostTensor<T>& c) {
  auto entries = c.entries();
  std::size_t pos = 0;
  std::function<Json(std::size_t)> build = [&](std::size_t depth) {
    Json arr = Json::array();
    for (std::size_t i = 0; i < c.shape()[depth]; ++i)
      arr.push_back(depth + 1 == c.arity() ? ext_json(entries[pos++]) : build(depth + 1));
    return arr;
  };
  return build(0);
}

}  // namespace

std::string problem_mode(const Json& doc) {
  if (!doc.is_object()) fail("problem file must be a JSON object");
  std::string mode = doc.value("mode", std::string("rational"));
  if (mode != "rational" && mode != "float") fail("mode must be 'rational' or 'float'");
  return mode;
}

std::string instance_hash(const Json& doc) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : doc.dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json tuple_json(const Index& idx, const std::vector<Space>& spaces) {
  Json arr = Json::array();
  for (std::size_t d = 0; d < idx.size(); ++d) arr.push_back(spaces.at(d).label(idx[d]));
  return arr;
}

Index tuple_from_json(const Json& j, const std::vector<Space>& spaces) {
  if (!j.is_array() || j.size() != spaces.size())
    fail("tuple " + j.dump() + " must list one label per space (" + std::to_string(spaces.size()) + ")");
  Index idx;
  for (std::size_t d = 0; d < spaces.size(); ++d) idx.push_back(spaces[d].index_of(scalar_text(j[d], "tuple")));
  return idx;
}

template <class T>
ExtReal<T> ext_from_json(const Json& j) {
  std::string text = scalar_text(j, "value");
  if (text == "nan" || text == "NaN") fail("NaN is not a valid value");
  return parse_ext<T>(text);
}

template <class T>
Json coupling_json(const Coupling<T>& g) {
  Json arr = Json::array();
  for (const auto& [idx, w] : g.atoms)
    arr.push_back({{"at", tuple_json(idx, g.spaces)}, {"weight", NumberTraits<T>::format(w)}});
  return arr;
}

template <class T>
Coupling<T> coupling_from_json(const Json& j, const std::vector<Space>& spaces) {
  if (!j.is_array()) fail("plan must be an array of {at, weight} atoms");
  Coupling<T> g{spaces, {}};
  for (const auto& atom : j) {
    if (!atom.is_object() || !atom.contains("at") || !atom.contains("weight")) fail("plan atom needs 'at' and 'weight'");
    T w = finite_from_json<T>(atom["weight"], "plan weight");
    if (w < T(0)) fail("plan weights must be nonnegative");
    if (w == T(0)) continue;
    g.add(tuple_from_json(atom["at"], spaces), w);
  }
  return g;
}

template <class T>
Json potential_json(const PotentialVector<T>& p) {
  Json values = Json::object();
  for (std::size_t i = 0; i < p.size(); ++i) values[p.space.label(i)] = ext_json(p.values[i]);
  return values;
}

template <class T>
Json splitting_json(const SplittingTuple<T>& t) {
  Json parts = Json::array();
  for (const auto& p : t.parts) parts.push_back(potential_json(p));
  return parts;
}

template <class T>
ProblemData<T> parse_problem(const Json& doc) {
  problem_mode(doc);
  ProblemData<T> p;
  if (!doc.contains("spaces") || !doc["spaces"].is_array() || doc["spaces"].size() < 2)
    fail("'spaces' must list at least two spaces");
  for (const auto& s : doc["spaces"]) {
    if (s.is_number_unsigned() || s.is_number_integer()) {
      p.spaces.push_back(Space::numbered(s.get<std::size_t>()));
      continue;
    }
    if (!s.is_array()) fail("each space is a label array or a size");
    std::vector<std::string> labels;
    for (const auto& l : s) labels.push_back(scalar_text(l, "space label"));
    p.spaces.push_back(Space(std::move(labels)));
  }
  const std::size_t n = p.spaces.size();

  if (doc.contains("measures")) {
    const auto& ms = doc["measures"];
    if (!ms.is_array() || ms.size() != n) fail("'measures' must have one weight vector per space");
    for (std::size_t d = 0; d < n; ++d) {
      if (!ms[d].is_array() || ms[d].size() != p.spaces[d].size())
        fail("measure " + std::to_string(d + 1) + " must have one weight per label");
      Measure<T> m{p.spaces[d], {}};
      for (const auto& w : ms[d]) m.weights.push_back(finite_from_json<T>(w, "measure weight"));
      if (auto v = validate_measure(m); !v) fail("measure " + std::to_string(d + 1) + ": " + v.reason);
      p.measures.push_back(std::move(m));
    }
  }

  if (doc.contains("cost")) {
    const auto& c = doc["cost"];
    if (c.is_array()) {
      std::vector<ExtReal<T>> entries;
      flatten_dense<T>(c, 0, n, entries);
      p.cost = CostTensor<T>(p.spaces, std::move(entries));
    } else if (c.is_object() && c.contains("dense")) {
      std::vector<ExtReal<T>> entries;
      flatten_dense<T>(c["dense"], 0, n, entries);
      p.cost = CostTensor<T>(p.spaces, std::move(entries));
    } else if (c.is_object() && c.contains("rule")) {
      p.cost_rule = c["rule"].get<std::string>();
      p.cost = rule_cost<T>(p.cost_rule, p.spaces);
    } else if (c.is_object() && c.contains("table")) {
      const auto& t = c["table"];
      ExtReal<T> fallback = t.contains("default") ? ext_from_json<T>(t["default"]) : ExtReal<T>::pos_inf();
      CostTensor<T> shape_only(p.spaces, [](std::span<const std::size_t>) { return ExtReal<T>(T(0)); });
      std::vector<ExtReal<T>> entries(shape_only.entry_count(), fallback);
      for (const auto& e : t.value("entries", Json::array())) {
        if (!e.contains("at") || !e.contains("value")) fail("table entry needs 'at' and 'value'");
        entries[shape_only.flat(tuple_from_json(e["at"], p.spaces))] = ext_from_json<T>(e["value"]);
      }
      p.cost_rule = "table";
      p.cost = CostTensor<T>(p.spaces, std::move(entries));
    } else {
      fail("'cost' must be an array or an object with 'dense', 'rule' or 'table'");
    }
  }

  if (doc.contains("plan")) p.plan = coupling_from_json<T>(doc["plan"], p.spaces);
  if (doc.contains("support")) {
    if (!doc["support"].is_array()) fail("'support' must be an array of tuples");
    SupportSet s{p.spaces, {}};
    for (const auto& t : doc["support"]) s.tuples.insert(tuple_from_json(t, p.spaces));
    p.support = std::move(s);
  }
  if (doc.contains("potentials")) {
    const auto& ps = doc["potentials"];
    if (!ps.is_array() || ps.size() > n) fail("'potentials' must be an array of at most one vector per space");
    for (std::size_t d = 0; d < ps.size(); ++d) {
      if (!ps[d].is_array() || ps[d].size() != p.spaces[d].size())
        fail("potential " + std::to_string(d + 1) + " must have one value per label");
      PotentialVector<T> v{p.spaces[d], {}, std::nullopt};
      for (const auto& x : ps[d]) v.values.push_back(ext_from_json<T>(x));
      p.potentials.push_back(std::move(v));
    }
  }
  if (doc.contains("constraints")) {
    std::vector<std::vector<ExtReal<T>>> m;
    for (const auto& row : doc["constraints"]) {
      std::vector<ExtReal<T>> r;
      for (const auto& x : row) r.push_back(ext_from_json<T>(x));
      m.push_back(std::move(r));
    }
    p.constraints = std::move(m);
  }
  if (doc.contains("base")) p.base = tuple_from_json(doc["base"], p.spaces);
  if (doc.contains("metadata")) p.metadata = doc["metadata"];
  return p;
}

template <class T>
Json serialize_problem(const ProblemData<T>& p) {
  Json doc = Json::object();
  doc["mode"] = NumberTraits<T>::mode_name;
  Json spaces = Json::array();
  for (const auto& s : p.spaces) spaces.push_back(s.labels());
  doc["spaces"] = spaces;
  if (!p.measures.empty()) {
    Json ms = Json::array();
    for (const auto& m : p.measures) {
      Json w = Json::array();
      for (const auto& x : m.weights) w.push_back(NumberTraits<T>::format(x));
      ms.push_back(w);
    }
    doc["measures"] = ms;
  }
  if (p.cost) {
    if (p.cost_rule == "quadratic" || p.cost_rule == "absolute") {
      doc["cost"] = {{"rule", p.cost_rule}};
    } else if (p.cost_rule == "table") {
      Json entries = Json::array();
      for_each_index(p.cost->shape(), [&](const Index& idx) {
        auto v = (*p.cost)(idx);
        if (v.is_finite()) entries.push_back({{"at", tuple_json(idx, p.spaces)}, {"value", ext_json(v)}});
      });
      doc["cost"] = {{"table", {{"default", "inf"}, {"entries", entries}}}};
    } else {
      doc["cost"] = {{"dense", dense_json(*p.cost)}};
    }
  }
  if (p.plan) doc["plan"] = coupling_json(*p.plan);
  if (p.support) {
    Json s = Json::array();
    for (const auto& t : p.support->tuples) s.push_back(tuple_json(t, p.spaces));
    doc["support"] = s;
  }
  if (!p.potentials.empty()) {
    Json ps = Json::array();
    for (const auto& v : p.potentials) {
      Json arr = Json::array();
      for (const auto& x : v.values) arr.push_back(ext_json(x));
      ps.push_back(arr);
    }
    doc["potentials"] = ps;
  }
  if (p.constraints) {
    Json m = Json::array();
    for (const auto& row : *p.constraints) {
      Json r = Json::array();
      for (const auto& x : row) r.push_back(ext_json(x));
      m.push_back(r);
    }
    doc["constraints"] = m;
  }
  if (p.base) doc["base"] = tuple_json(*p.base, p.spaces);
  if (!p.metadata.empty()) doc["metadata"] = p.metadata;
  return doc;
}

template <class T>
Json witness_json(const Witness<T>& w, const std::vector<Space>& spaces) {
  auto tuples = [&](const std::vector<Index>& ts) {
    Json arr = Json::array();
    for (const auto& t : ts) arr.push_back(tuple_json(t, spaces));
    return arr;
  };
  return std::visit(
      [&](const auto& x) -> Json {
        using W = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<W, std::monostate>) {
          return nullptr;
        } else if constexpr (std::is_same_v<W, CycleWitness<T>>) {
          return {{"kind", "cycle"}, {"tuples", tuples(x.tuples)}, {"gain", NumberTraits<T>::format(x.gain)}};
        } else if constexpr (std::is_same_v<W, ComponentWitness>) {
          Json comps = Json::array();
          for (const auto& c : x.components) comps.push_back(tuples(c));
          return {{"kind", "components"},
                  {"from", tuple_json(x.from, spaces)},
                  {"to", tuple_json(x.to, spaces)},
                  {"components", comps}};
        } else if constexpr (std::is_same_v<W, TupleWitness<T>>) {
          return {{"kind", "tuple"}, {"tuple", tuple_json(x.tuple, spaces)}, {"slack", ext_json(x.slack)}};
        } else if constexpr (std::is_same_v<W, TripleWitness<T>>) {
          return {{"kind", "triple"},
                  {"x", spaces.at(0).label(x.x)},
                  {"y", spaces.at(1).label(x.y)},
                  {"z", spaces.at(0).label(x.z)},
                  {"lhs", ext_json(x.lhs)},
                  {"rhs", ext_json(x.rhs)}};
        } else if constexpr (std::is_same_v<W, SubsetWitness<T>>) {
          Json labels = Json::array();
          for (auto i : x.subset) labels.push_back(spaces.at(0).label(i));
          return {{"kind", "subset"},
                  {"subset", labels},
                  {"mass", NumberTraits<T>::format(x.mass)},
                  {"blocked_mass", NumberTraits<T>::format(x.blocked_mass)}};
        } else if constexpr (std::is_same_v<W, PermutationWitness<T>>) {
          return {{"kind", "permutation"},
                  {"points", tuples(x.points)},
                  {"permutations", x.permutations},
                  {"original", ext_json(x.original)},
                  {"permuted", ext_json(x.permuted)}};
        } else if constexpr (std::is_same_v<W, SubmeasureWitness<T>>) {
          return {{"kind", "submeasure"},
                  {"submeasure", coupling_json(x.submeasure)},
                  {"better", coupling_json(x.better)},
                  {"submeasure_value", ext_json(x.submeasure_value)},
                  {"better_value", ext_json(x.better_value)}};
        } else {
          Json neg = x.negative_index ? Json(*x.negative_index) : Json(nullptr);
          return {{"kind", "mass"}, {"negative_index", neg}, {"deficit", NumberTraits<T>::format(x.deficit)}};
        }
      },
      w);
}

template <class T>
Witness<T> witness_from_json(const Json& j, const std::vector<Space>& spaces) {
  if (j.is_null()) return std::monostate{};
  const std::string kind = j.at("kind").get<std::string>();
  auto tuples = [&](const Json& arr) {
    std::vector<Index> out;
    for (const auto& t : arr) out.push_back(tuple_from_json(t, spaces));
    return out;
  };
  if (kind == "cycle") {
    CycleWitness<T> w;
    w.tuples = tuples(j.at("tuples"));
    w.gain = finite_from_json<T>(j.at("gain"), "gain");
    for (std::size_t i = 0; i < w.tuples.size(); ++i) w.nodes.push_back(i);
    return w;
  }
  if (kind == "components") {
    ComponentWitness w;
    w.from = tuple_from_json(j.at("from"), spaces);
    w.to = tuple_from_json(j.at("to"), spaces);
    for (const auto& c : j.at("components")) w.components.push_back(tuples(c));
    return w;
  }
  if (kind == "tuple") return TupleWitness<T>{tuple_from_json(j.at("tuple"), spaces), ext_from_json<T>(j.at("slack"))};
  if (kind == "triple") {
    return TripleWitness<T>{spaces.at(0).index_of(j.at("x").get<std::string>()),
                            spaces.at(1).index_of(j.at("y").get<std::string>()),
                            spaces.at(0).index_of(j.at("z").get<std::string>()), ext_from_json<T>(j.at("lhs")),
                            ext_from_json<T>(j.at("rhs"))};
  }
  if (kind == "subset") {
    SubsetWitness<T> w;
    for (const auto& l : j.at("subset")) w.subset.push_back(spaces.at(0).index_of(l.get<std::string>()));
    w.mass = finite_from_json<T>(j.at("mass"), "mass");
    w.blocked_mass = finite_from_json<T>(j.at("blocked_mass"), "blocked_mass");
    return w;
  }
  if (kind == "permutation") {
    PermutationWitness<T> w;
    w.points = tuples(j.at("points"));
    w.permutations = j.at("permutations").get<std::vector<std::vector<std::size_t>>>();
    w.original = ext_from_json<T>(j.at("original"));
    w.permuted = ext_from_json<T>(j.at("permuted"));
    return w;
  }
  if (kind == "submeasure") {
    return SubmeasureWitness<T>{coupling_from_json<T>(j.at("submeasure"), spaces),
                                coupling_from_json<T>(j.at("better"), spaces), ext_from_json<T>(j.at("submeasure_value")),
                                ext_from_json<T>(j.at("better_value"))};
  }
  if (kind == "mass") {
    MassWitness<T> w;
    if (!j.at("negative_index").is_null()) w.negative_index = j["negative_index"].get<std::size_t>();
    w.deficit = finite_from_json<T>(j.at("deficit"), "deficit");
    return w;
  }
  fail("unknown witness kind '" + kind + "'");
}

#define OTCERT_INSTANTIATE(T)                                                                 \
  template ExtReal<T> ext_from_json<T>(const Json&);                                          \
  template Json coupling_json<T>(const Coupling<T>&);                                         \
  template Coupling<T> coupling_from_json<T>(const Json&, const std::vector<Space>&);         \
  template Json potential_json<T>(const PotentialVector<T>&);                                 \
  template Json splitting_json<T>(const SplittingTuple<T>&);                                  \
  template ProblemData<T> parse_problem<T>(const Json&);                                      \
  template Json serialize_problem<T>(const ProblemData<T>&);                                  \
  template Json witness_json<T>(const Witness<T>&, const std::vector<Space>&);                \
  template Witness<T> witness_from_json<T>(const Json&, const std::vector<Space>&);

OTCERT_INSTANTIATE(Rational)
OTCERT_INSTANTIATE(double)

}  // namespace otcert
