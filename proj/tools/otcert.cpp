#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "otcert/fixtures.hpp"
#include "otcert/io.hpp"
#include "otcert/monotone.hpp"
#include "otcert/multi.hpp"
#include "otcert/potential.hpp"
#include "otcert/solve.hpp"

namespace {

using namespace otcert;

enum Exit { kPositive = 0, kNegative = 1, kInputError = 2, kBudget = 3 };

struct Options {
  std::string group;
  std::string command;
  std::string file;
  std::string verify;
  std::string method = "exact";
  std::string mode = "integral";
  std::string direction = "x-to-y";
  std::string number = "rational";
  std::vector<std::string> base;
  std::optional<std::size_t> kmax;
  unsigned p = 8;
  unsigned depth = 6;
  std::size_t n = 8;
  double shift = std::sqrt(2.0) / 4.0;
  std::uint64_t seed = 1;
  std::size_t arity = 2;
  double inf_prob = 0.0;
  bool pretty = false;
};

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

template <class T>
const CostTensor<T>& need_cost(const ProblemData<T>& p) {
  if (!p.cost) throw InputError("problem has no 'cost'");
  return *p.cost;
}

template <class T>
SupportSet need_support(const ProblemData<T>& p) {
  if (p.support) return *p.support;
  if (p.plan) return support_of(*p.plan);
  throw InputError("problem needs a 'support' or a 'plan'");
}

template <class T>
const std::vector<Measure<T>>& need_measures(const ProblemData<T>& p) {
  if (p.measures.size() != p.spaces.size()) throw InputError("problem needs 'measures' for every space");
  return p.measures;
}

void need_pair(std::size_t arity, const std::string& what) {
  if (arity != 2) throw InputError(what + " needs exactly two spaces");
}

template <class T>
Index resolve_base(const Options& o, const ProblemData<T>& p, const SupportSet& g) {
  if (!o.base.empty()) {
    Json labels = Json::array();
    for (const auto& l : o.base) labels.push_back(l);
    return tuple_from_json(labels, p.spaces);
  }
  if (p.base) return *p.base;
  if (g.tuples.empty()) throw InputError("support is empty");
  return *g.tuples.begin();
}

Aggregate aggregate_of(const Options& o) {
  if (o.mode == "integral") return Aggregate::Sum;
  if (o.mode == "linf") return Aggregate::Max;
  throw InputError("--mode must be 'integral' or 'linf'");
}

std::size_t default_kmax(const Options& o, const SupportSet& g) {
  return o.kmax ? *o.kmax : std::max<std::size_t>(g.size(), 2);
}

template <class T>
Json matrix_json(const std::vector<std::vector<ExtReal<T>>>& m) {
  Json out = Json::array();
  for (const auto& row : m) {
    Json r = Json::array();
    for (const auto& v : row) r.push_back(ext_json(v));
    out.push_back(r);
  }
  return out;
}

template <class T>
std::vector<std::vector<ExtReal<T>>> system_matrix(const ProblemData<T>& p) {
  if (p.constraints) return *p.constraints;
  return PairGraph<T>::build(need_support(p), need_cost(p)).gain;
}

template <class T>
SplittingTuple<T> shifted(SplittingTuple<T> t, const T& shift) {
  if (!t.parts.empty())
    for (auto& v : t.parts.front().values) v = v + ExtReal<T>(shift);
  return t;
}

template <class T>
void put_verdict(Json& report, const Verdict<T>& v, const std::vector<Space>& spaces) {
  report["verdict"] = v.holds;
  report["reason"] = v.reason;
  report["witness"] = witness_json(v.witness, spaces);
}

template <class T>
int put_solve(Json& report, const SolveResult<T>& r, const T& shift) {
  report["verdict"] = to_string(r.status);
  report["status"] = to_string(r.status);
  report["value"] = ext_json(r.value.is_finite() ? r.value + ExtReal<T>(shift) : r.value);
  report["plan"] = coupling_json(r.plan);
  if (r.dual) report["dual"] = splitting_json(shifted(*r.dual, shift));
  if (r.power_integral) report["power_integral"] = NumberTraits<T>::format(*r.power_integral);
  report["cost_shift"] = NumberTraits<T>::format(shift);
  return kPositive;
}

template <class T>
int run_check(const Options& o, const ProblemData<T>& p, Json& report) {
  const auto& c = need_cost(p);
  const auto& cmd = o.command;
  if (cmd == "compat") {
    need_pair(c.arity(), "compat");
    const auto& ms = need_measures(p);
    auto r = check_compatibility(ms[0], ms[1], c);
    put_verdict(report, r.verdict, p.spaces);
    report["level"] = to_string(r.level);
    return r.verdict.holds ? kPositive : kNegative;
  }
  if (cmd == "finitely-optimal") {
    if (!p.plan) throw InputError("finitely-optimal needs a 'plan'");
    auto g = support_of(*p.plan);
    std::size_t k = default_kmax(o, g);
    report["kmax"] = k;
    auto v = check_finitely_optimal(*p.plan, c, k, aggregate_of(o));
    put_verdict(report, v, p.spaces);
    return v.holds ? kPositive : kNegative;
  }

  auto g = need_support(p);
  Verdict<T> v;
  if (cmd == "ccm") {
    if (o.method != "exact" && o.method != "bruteforce" && o.method != "lp")
      throw InputError("--method must be exact, bruteforce or lp");
    std::size_t k = default_kmax(o, g);
    if (c.arity() == 2 && o.method != "lp") {
      auto method = o.method == "exact" ? CcmMethod::Exact : CcmMethod::BruteForce;
      if (method == CcmMethod::BruteForce) report["kmax"] = k;
      v = check_ccm2(g, c, method, k);
    } else {
      report["kmax"] = k;
      v = check_ccm_multi(g, c, k, o.method == "lp" ? MultiMethod::Lp : MultiMethod::Enumerate);
    }
  } else if (cmd == "icm") {
    std::size_t k = default_kmax(o, g);
    report["kmax"] = k;
    v = check_icm(g, c, k);
  } else if (cmd == "connecting") {
    need_pair(c.arity(), "connecting");
    v = check_connecting(g, c);
  } else if (cmd == "path-bounded") {
    need_pair(c.arity(), "path-bounded");
    auto pb = check_path_bounded(g, c);
    v = pb.verdict;
    Json nodes = Json::array();
    for (const auto& t : g.ordered()) nodes.push_back(tuple_json(t, p.spaces));
    report["nodes"] = nodes;
    report["value"] = matrix_json(pb.bound);
  } else if (cmd == "splitting") {
    if (p.potentials.size() == c.arity()) {
      SplittingTuple<T> t{p.potentials, std::nullopt};
      v = verify_splitting(t, c, g);
      if (v.holds && (!o.base.empty() || p.base)) {
        Index base = resolve_base(o, p, g);
        t.base = base;
        v = check_normalization(t, c, base);
      }
    } else if (!p.potentials.empty()) {
      throw InputError("splitting check needs one potential vector per space");
    } else {
      Index base = resolve_base(o, p, g);
      report["base"] = tuple_json(base, p.spaces);
      auto out = construct_splitting(g, c, base);
      v = out.verdict;
      if (out.value) report["dual"] = splitting_json(*out.value);
    }
  } else {
    throw InputError("unknown check '" + cmd + "'");
  }
  put_verdict(report, v, p.spaces);
  return v.holds ? kPositive : kNegative;
}

template <class T>
int run_potential(const Options& o, const ProblemData<T>& p, Json& report) {
  const auto& cmd = o.command;
  if (cmd == "system") {
    auto gain = system_matrix(p);
    auto s = solve_inequality_system(gain);
    if (s.values) {
      report["verdict"] = true;
      report["reason"] = "";
      Json a = Json::array();
      for (const auto& x : *s.values) a.push_back(NumberTraits<T>::format(x));
      report["value"] = a;
      if (p.cost && (p.support || p.plan) && p.spaces.size() == 2)
        report["potential"] = potential_json(potential_from_constants(*s.values, need_support(p), *p.cost));
      report["witness"] = nullptr;
      return kPositive;
    }
    report["verdict"] = false;
    report["reason"] = "the constraints contain a cycle with positive total";
    report["witness"] = {{"kind", "constraint-cycle"}, {"nodes", s.cycle}, {"sum", NumberTraits<T>::format(s.cycle_sum)}};
    return kNegative;
  }

  const auto& c = need_cost(p);
  need_pair(c.arity(), "potential " + cmd);
  if (cmd == "rockafellar") {
    auto g = need_support(p);
    Index base = resolve_base(o, p, g);
    report["base"] = tuple_json(base, p.spaces);
    auto out = rockafellar_potential(g, c, base);
    put_verdict(report, out.verdict, p.spaces);
    if (out.value) report["value"] = potential_json(*out.value);
    return out.verdict.holds ? kPositive : kNegative;
  }
  if (cmd == "transform") {
    TransformDirection dir;
    if (o.direction == "x-to-y")
      dir = TransformDirection::XToY;
    else if (o.direction == "y-to-x")
      dir = TransformDirection::YToX;
    else
      throw InputError("--direction must be x-to-y or y-to-x");
    std::size_t slot = dir == TransformDirection::XToY ? 0 : 1;
    if (p.potentials.size() <= slot) throw InputError("transform needs 'potentials' entry " + std::to_string(slot + 1));
    auto r = c_transform(p.potentials[slot], c, dir);
    report["verdict"] = r.infinite_entries.empty();
    report["reason"] = r.infinite_entries.empty() ? "" : "some infima are +inf";
    report["witness"] = nullptr;
    report["value"] = potential_json(r.potential);
    Json inf = Json::array();
    for (auto i : r.infinite_entries) inf.push_back(r.potential.space.label(i));
    report["infinite_entries"] = inf;
    return kPositive;
  }
  throw InputError("unknown potential command '" + cmd + "'");
}

template <class T>
int run_solve(const Options& o, const ProblemData<T>& p, Json& report) {
  const auto& c = need_cost(p);
  const auto& ms = need_measures(p);
  const auto& cmd = o.command;
  if (cmd == "p") {
    for (const auto& v : c.entries())
      if (v.is_finite() && v.value() < T(0)) throw InputError("solve p needs nonnegative costs");
    if (o.p == 0) throw InputError("--p must be positive");
    report["p"] = o.p;
    return put_solve(report, solve_p(ms, c, o.p), T(0));
  }
  auto norm = normalize_costs(c);
  if (cmd == "ot") {
    need_pair(c.arity(), "solve ot");
    return put_solve(report, solve_ot2(ms[0], ms[1], norm.cost), norm.shift);
  }
  if (cmd == "multi") return put_solve(report, solve_multi(ms, norm.cost), norm.shift);
  if (cmd == "linf") return put_solve(report, solve_linf(ms, norm.cost), norm.shift);
  throw InputError("unknown solve command '" + cmd + "'");
}

template <class T>
Json generate(const Options& o) {
  ProblemData<T> p;
  const auto& cmd = o.command;
  if (cmd == "petrache") {
    auto fx = gen_petrache<T>(o.depth);
    p.spaces = fx.cost.spaces();
    p.measures = fx.marginals;
    p.cost = fx.cost;
    p.cost_rule = "table";
    p.plan = fx.monotone_plan;
    p.metadata = {{"fixture", "petrache"},
                  {"depth", fx.depth},
                  {"monotone_cost", NumberTraits<T>::format(fx.monotone_cost)},
                  {"better_cost", NumberTraits<T>::format(fx.better_cost)},
                  {"tail_mass", NumberTraits<T>::format(fx.tail_mass)},
                  {"condition_sum", NumberTraits<T>::format(fx.condition_sum)},
                  {"better_plan", coupling_json(fx.better_plan)}};
  } else if (cmd == "appendix-a") {
    auto fx = gen_appendix_a<T>(o.n, o.shift);
    p.spaces = fx.cost.spaces();
    p.measures = fx.marginals;
    p.cost = fx.cost;
    p.cost_rule = "table";
    p.support = fx.support;
    p.metadata = {{"fixture", "appendix-a"},
                  {"n", o.n},
                  {"shift", o.shift},
                  {"expect", {{"path-bounded", true}, {"connecting", o.n == 1}, {"ccm", true}}}};
  } else if (cmd == "random") {
    if (o.arity < 2) throw InputError("--N must be at least 2");
    if (o.n == 0) throw InputError("--n must be positive");
    if (o.inf_prob < 0.0 || o.inf_prob >= 1.0) throw InputError("--inf-prob must lie in [0, 1)");
    std::mt19937_64 rng(o.seed);
    std::uniform_int_distribution<int> digit(0, 9);
    std::bernoulli_distribution blocked(o.inf_prob);
    Space s = Space::numbered(o.n);
    p.spaces.assign(o.arity, s);
    p.measures.assign(o.arity, uniform_measure<T>(s));
    std::vector<std::size_t> shape(o.arity, o.n);
    std::vector<ExtReal<T>> entries;
    for_each_index(shape, [&](const Index&) {
      entries.push_back(blocked(rng) ? ExtReal<T>::pos_inf() : ExtReal<T>(T(digit(rng))));
    });
    p.cost = CostTensor<T>(p.spaces, std::move(entries));
    p.metadata = {{"fixture", "random"}, {"seed", o.seed}, {"inf_prob", o.inf_prob}};
  } else {
    throw InputError("unknown generator '" + cmd + "'");
  }
  return serialize_problem(p);
}

template <class T>
bool subset_reproduces(const SubsetWitness<T>& w, const ProblemData<T>& p) {
  const auto& ms = need_measures(p);
  auto again = evaluate_subset(w.subset, ms[0], ms[1], need_cost(p));
  if (!nearly_equal(again.mass, w.mass) || !nearly_equal(again.blocked_mass, w.blocked_mass)) return false;
  T total = again.mass + again.blocked_mass;
  if (definitely_less(T(1), total)) return true;
  return definitely_less(T(0), again.mass) && definitely_less(again.mass, T(1)) && !definitely_less(total, T(1));
}

template <class T>
bool replay(const Options& o, const ProblemData<T>& p, const Json& witness) {
  if (witness.is_null()) throw InputError("report carries no witness");
  const std::string kind = witness.value("kind", "");
  if (kind == "constraint-cycle") {
    auto cycle = witness.at("nodes").get<std::vector<std::size_t>>();
    auto gain = system_matrix(p);
    for (auto i : cycle)
      if (i >= gain.size()) return false;
    auto sum = system_cycle_sum(gain, cycle);
    auto claimed = ext_from_json<T>(witness.at("sum"));
    return sum.is_finite() && definitely_less(T(0), sum.value()) && nearly_equal(sum, claimed);
  }
  auto w = witness_from_json<T>(witness, p.spaces);
  const auto& c = need_cost(p);
  return std::visit(
      [&](const auto& x) -> bool {
        using W = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<W, CycleWitness<T>>) {
          return replay_cycle(x, c);
        } else if constexpr (std::is_same_v<W, ComponentWitness>) {
          return replay_components(x, c);
        } else if constexpr (std::is_same_v<W, TupleWitness<T>>) {
          if (o.command == "splitting" && p.potentials.size() == c.arity()) {
            SplittingTuple<T> t{p.potentials, std::nullopt};
            if (replay_splitting(x, t, c, need_support(p))) return true;
            Index base = resolve_base(o, p, need_support(p));
            t.base = base;
            return !check_normalization(t, c, base).holds;
          }
          return !c(x.tuple).is_finite();
        } else if constexpr (std::is_same_v<W, TripleWitness<T>>) {
          if (p.potentials.empty()) throw InputError("triple witness needs the problem's potentials");
          return replay_triple(x, p.potentials[0], c);
        } else if constexpr (std::is_same_v<W, SubsetWitness<T>>) {
          return subset_reproduces(x, p);
        } else if constexpr (std::is_same_v<W, PermutationWitness<T>>) {
          return replay_permutation(x, c, o.command == "icm" ? Aggregate::Max : Aggregate::Sum);
        } else if constexpr (std::is_same_v<W, SubmeasureWitness<T>>) {
          Aggregate how = o.command == "icm" || (o.command == "finitely-optimal" && o.mode == "linf") ? Aggregate::Max
                                                                                                      : Aggregate::Sum;
          return replay_submeasure(x, c, how);
        } else {
          return false;
        }
      },
      w);
}

template <class T>
int dispatch(const Options& o, const Json& doc, Json& report) {
  ProblemData<T> p;
  try {
    p = parse_problem<T>(doc);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  if (!o.verify.empty()) {
    Json prior = read_json(o.verify);
    bool ok = replay(o, p, prior.value("witness", Json()));
    report["command"] = "verify-witness " + o.group + " " + o.command;
    report["witness"] = prior.value("witness", Json());
    report["verdict"] = ok;
    report["reason"] = ok ? "violation reproduced" : "violation not reproduced";
    return ok ? kPositive : kNegative;
  }
  try {
    if (o.group == "check") return run_check(o, p, report);
    if (o.group == "potential") return run_potential(o, p, report);
    return run_solve(o, p, report);
  } catch (const PreconditionError<T>& e) {
    report["verdict"] = nullptr;
    report["reason"] = e.what();
    report["witness"] = witness_json(e.verdict().witness, p.spaces);
    return kInputError;
  }
}

void print_pretty(const Json& r, std::ostream& out) {
  out << r.value("command", "") << "  [" << r.value("mode", "") << "]";
  if (r.contains("instance_hash")) out << "  instance " << r["instance_hash"].get<std::string>();
  out << "\n";
  if (r.contains("error")) {
    out << "error: " << r["error"].get<std::string>() << "\n";
    return;
  }
  out << "verdict: " << r["verdict"].dump();
  if (r.contains("level")) out << " (" << r["level"].get<std::string>() << ")";
  out << "\n";
  if (!r.value("reason", "").empty()) out << "reason: " << r["reason"].get<std::string>() << "\n";
  for (const char* key : {"status", "value", "power_integral", "cost_shift", "kmax", "base"})
    if (r.contains(key) && !r[key].is_null()) out << key << ": " << r[key].dump() << "\n";
  if (r.contains("witness") && !r["witness"].is_null()) out << "witness:\n" << r["witness"].dump(2) << "\n";
  if (r.contains("dual") && !r["dual"].is_null()) out << "dual:\n" << r["dual"].dump(2) << "\n";
  if (r.contains("plan")) out << "plan atoms: " << r["plan"].size() << "\n";
  out << "time: " << r["timings"]["total_ms"].get<double>() << " ms\n";
}

int execute(const Options& o) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  Json report = Json::object();
  report["command"] = o.group + " " + o.command;
  int code = kPositive;
  try {
    if (o.group == "gen") {
      if (o.number != "float" && o.number != "rational") throw InputError("--number must be rational or float");
      Json doc = o.number == "float" ? generate<double>(o) : generate<Rational>(o);
      std::cout << doc.dump(2) << "\n";
      return kPositive;
    }
    Json doc = read_json(o.file);
    std::string mode;
    try {
      mode = problem_mode(doc);
    } catch (const std::invalid_argument& e) {
      throw InputError(e.what());
    }
    report["instance_hash"] = instance_hash(doc);
    report["mode"] = mode;
    report["verdict"] = nullptr;
    report["reason"] = "";
    report["witness"] = nullptr;
    report["value"] = nullptr;
    report["dual"] = nullptr;
    code = mode == "float" ? dispatch<double>(o, doc, report) : dispatch<Rational>(o, doc, report);
  } catch (const BudgetExceeded& e) {
    report["error"] = e.what();
    report["estimate"] = e.estimate();
    report["budget"] = e.budget();
    code = kBudget;
  } catch (const InputError& e) {
    report["error"] = e.what();
    code = kInputError;
  } catch (const std::invalid_argument& e) {
    report["error"] = e.what();
    code = kInputError;
  } catch (const std::out_of_range& e) {
    report["error"] = e.what();
    code = kInputError;
  } catch (const Json::exception& e) {
    report["error"] = e.what();
    code = kInputError;
  }
  report["timings"] = {{"total_ms", std::chrono::duration<double, std::milli>(Clock::now() - start).count()}};
  if (o.pretty)
    print_pretty(report, std::cout);
  else
    std::cout << report.dump() << "\n";
  if (report.contains("error")) std::cerr << "otcert: " << report["error"].get<std::string>() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certificates and solvers for discrete optimal transport with extended-real costs"};
  app.require_subcommand(1);
  Options o;

  const std::vector<std::pair<std::string, std::vector<std::string>>> groups = {
      {"check", {"ccm", "icm", "connecting", "path-bounded", "splitting", "compat", "finitely-optimal"}},
      {"potential", {"rockafellar", "transform", "system"}},
      {"solve", {"ot", "multi", "linf", "p"}},
      {"gen", {"petrache", "appendix-a", "random"}},
  };
  for (const auto& [group, commands] : groups) {
    auto* g = app.add_subcommand(group, group + " commands");
    g->require_subcommand(1);
    for (const auto& cmd : commands) {
      auto* leaf = g->add_subcommand(cmd);
      leaf->callback([&o, group = group, cmd = cmd] {
        o.group = group;
        o.command = cmd;
      });
      leaf->add_flag("--pretty", o.pretty, "Human-readable summary instead of JSON");
      if (group == "gen") {
        leaf->add_option("--number", o.number, "rational or float")->capture_default_str();
        if (cmd == "petrache") leaf->add_option("--K", o.depth, "Truncation depth")->capture_default_str();
        if (cmd == "appendix-a") {
          leaf->add_option("--n", o.n, "Grid size")->capture_default_str();
          leaf->add_option("--shift", o.shift, "Shift in (0, 1), off the grid")->capture_default_str();
        }
        if (cmd == "random") {
          leaf->add_option("--n", o.n, "Points per space")->capture_default_str();
          leaf->add_option("--N", o.arity, "Number of marginals")->capture_default_str();
          leaf->add_option("--seed", o.seed, "Generator seed")->capture_default_str();
          leaf->add_option("--inf-prob", o.inf_prob, "Probability of a +inf entry")->capture_default_str();
        }
        continue;
      }
      leaf->add_option("file", o.file, "Problem file (JSON)")->required()->check(CLI::ExistingFile);
      leaf->add_option("--verify-witness", o.verify, "Replay the witness of an earlier report")
          ->check(CLI::ExistingFile);
      leaf->add_option("--kmax", o.kmax, "Largest subset size to enumerate");
      leaf->add_option("--method", o.method, "exact, bruteforce or lp")->capture_default_str();
      leaf->add_option("--mode", o.mode, "integral or linf")->capture_default_str();
      leaf->add_option("--direction", o.direction, "x-to-y or y-to-x")->capture_default_str();
      leaf->add_option("--base", o.base, "Base tuple labels");
      leaf->add_option("--p", o.p, "Exponent for solve p")->capture_default_str();
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kInputError;
  }
  return execute(o);
}
