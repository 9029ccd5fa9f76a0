// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include "oracles.hpp"
#include "otcert/fixtures.hpp"
#include "otcert/monotone.hpp"
#include "otcert/multi.hpp"
#include "otcert/potential.hpp"
#include "otcert/solve.hpp"

using namespace otcert;
using oracle::EQ;
using oracle::Q;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

struct Tally {
  long agree = 0;
  long total = 0;
  void add(bool same) {
    ++total;
    if (same) ++agree;
  }
  bool all() const { return total > 0 && agree == total; }
  std::string text() const { return std::to_string(agree) + "/" + std::to_string(total); }
};

int failures = 0;

void run(int id, const char* title, double limit_s, const std::function<Outcome()>& body) {
  auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  bool pass = out.ok && secs < limit_s;
  if (!pass) ++failures;
  std::printf("criterion %2d %s: %s; %s (%.2f s, limit %.0f s)\n", id, pass ? "PASS" : "FAIL", title,
              out.detail.c_str(), secs, limit_s);
  std::fflush(stdout);
}

std::vector<Measure<Q>> marginals_of(const std::vector<Space>& spaces, oracle::Rng& rng, bool allow_zero = false) {
  std::vector<Measure<Q>> mus;
  for (const auto& s : spaces) mus.push_back(oracle::random_measure(rng, s, 5, allow_zero));
  return mus;
}

bool optimal(const Coupling<Q>& plan, const CostTensor<Q>& c, const EQ& best) {
  return integral_cost(plan, c) == best;
}

Outcome finite_space_equivalence() {
  oracle::Rng rng(1001);
  Tally t;
  long optimal_count = 0;
  for (int trial = 0; trial < 500; ++trial) {
    Space x = Space::numbered(1 + rng.below(7)), y = Space::numbered(1 + rng.below(7));
    auto c = oracle::random_cost(rng, {x, y}, 0.0);
    auto mus = marginals_of({x, y}, rng);
    auto best = solve_ot2(mus[0], mus[1], c).value;
    auto vertex = oracle::random_vertex(rng, mus[0], mus[1]);
    bool opt = optimal(vertex, c, best);
    optimal_count += opt;
    t.add(opt == check_ccm2(support_of(vertex), c).holds);
  }
  return {t.all(), t.text() + " vertices agree, " + std::to_string(optimal_count) + " optimal"};
}

Outcome optimal_ccm_with_infinities() {
  oracle::Rng rng(1002);
  Tally optimal_side, vertex_side;
  int instances = 0;
  while (instances < 500) {
    Space x = Space::numbered(1 + rng.below(7)), y = Space::numbered(1 + rng.below(7));
    auto c = oracle::random_cost(rng, {x, y}, 0.3);
    auto mus = marginals_of({x, y}, rng);
    if (!oracle::finite_plan_exists(mus[0], mus[1], c)) continue;
    ++instances;
    auto r = solve_ot2(mus[0], mus[1], c);
    optimal_side.add(r.status == SolveStatus::Optimal && check_ccm2(support_of(r.plan), c).holds);
    for (int draw = 0; draw < 20; ++draw) {
      auto vertex = oracle::random_vertex(rng, mus[0], mus[1]);
      if (!integral_cost(vertex, c).is_finite()) continue;
      vertex_side.add(check_ccm2(support_of(vertex), c).holds == optimal(vertex, c, r.value));
    }
  }
  return {optimal_side.all() && vertex_side.all(),
          "optimal supports ccm " + optimal_side.text() + ", finite vertices ccm iff optimal " + vertex_side.text()};
}

SupportSet optimal_support(oracle::Rng& rng, std::size_t n, double inf_prob, CostTensor<Q>& c,
                           std::vector<Measure<Q>>& mus) {
  Space s = Space::numbered(n);
  for (;;) {
    c = oracle::random_cost(rng, {s, s}, inf_prob);
    mus = marginals_of({s, s}, rng);
    auto r = solve_ot2(mus[0], mus[1], c);
    if (r.status == SolveStatus::Optimal) return support_of(r.plan);
  }
}

Outcome rockafellar_round_trip() {
  oracle::Rng rng(1003);
  Tally subgradient, chain;
  for (int trial = 0; trial < 200; ++trial) {
    CostTensor<Q> c;
    std::vector<Measure<Q>> mus;
    auto g = optimal_support(rng, 1 + rng.below(10), 0.0, c, mus);
    auto nodes = g.ordered();
    std::size_t b = rng.below(nodes.size());
    auto out = rockafellar_potential(g, c, nodes[b]);
    subgradient.add(out.value && verify_subgradient(*out.value, g, c).holds);
    chain.add(out.value && out.value->values == oracle::chain_potential(nodes, c, b));
  }
  return {subgradient.all() && chain.all(),
          "subgradient " + subgradient.text() + ", chain oracle " + chain.text()};
}

Outcome system_equivalence() {
  oracle::Rng rng(1004);
  Tally same, witnesses;
  long infeasible = 0;
  for (int trial = 0; trial < 500; ++trial) {
    std::size_t n = 1 + rng.below(7);
    Space s = Space::numbered(n);
    auto c = oracle::random_cost(rng, {s, s}, 0.3);
    SupportSet g{{s, s}, {}};
    for (std::size_t k = 0; k < n + 2; ++k) {
      Index t{rng.below(n), rng.below(n)};
      if (c(t).is_finite()) g.tuples.insert(t);
    }
    if (g.tuples.empty()) {
      --trial;
      continue;
    }
    auto pg = PairGraph<Q>::build(g, c);
    auto sys = solve_inequality_system(pg.gain);
    auto pb = check_path_bounded(g, c);
    same.add(sys.values.has_value() == pb.verdict.holds);
    if (sys.values) {
      // Bounded path sums: no +inf entry in the bound matrix.
      bool bounded = true;
      for (const auto& row : pb.bound)
        for (const auto& m : row) bounded = bounded && !m.is_pos_inf();
      witnesses.add(bounded);
    } else {
      ++infeasible;
      bool cycle_ok = Q(0) < sys.cycle_sum && system_cycle_sum(pg.gain, sys.cycle) == EQ(sys.cycle_sum);
      bool replay = !pb.verdict.holds && std::holds_alternative<CycleWitness<Q>>(pb.verdict.witness) &&
                    replay_cycle(std::get<CycleWitness<Q>>(pb.verdict.witness), c);
      witnesses.add(cycle_ok && replay);
    }
  }
  return {same.all() && witnesses.all(), "feasibility agrees " + same.text() + ", witnesses " + witnesses.text() +
                                             ", " + std::to_string(infeasible) + " infeasible"};
}

Outcome connecting_route() {
  oracle::Rng rng(1005);
  Tally t;
  long from_vertices = 0, attempts = 0;
  while (t.total < 200 && attempts < 200000) {
    ++attempts;
    std::size_t n = 2 + rng.below(6);
    Space s = Space::numbered(n);
    auto c = oracle::random_cost(rng, {s, s}, 0.3);
    bool has_inf = false;
    for (const auto& v : c.entries()) has_inf = has_inf || v.is_pos_inf();
    if (!has_inf) continue;
    auto mus = marginals_of({s, s}, rng);
    auto r = solve_ot2(mus[0], mus[1], c);
    if (r.status != SolveStatus::Optimal) continue;
    // Prefer a sampled vertex over the solver's own plan.
    std::optional<Coupling<Q>> plan;
    for (int draw = 0; draw < 10 && !plan; ++draw) {
      auto v = oracle::random_vertex(rng, mus[0], mus[1]);
      auto g = support_of(v);
      if (integral_cost(v, c).is_finite() && check_connecting(g, c) && check_ccm2(g, c)) plan = v;
    }
    if (plan) ++from_vertices;
    else if (check_connecting(support_of(r.plan), c)) plan = r.plan;
    else continue;
    auto g = support_of(*plan);
    auto out = rockafellar_potential(g, c, *g.tuples.begin());
    bool ok = out.value.has_value() && verify_subgradient(*out.value, g, c).holds;
    if (ok)
      for (const auto& tup : g.tuples) ok = ok && out.value->values[tup[0]].is_finite();
    ok = ok && optimal(*plan, c, r.value);
    t.add(ok);
  }
  return {t.all() && t.total == 200,
          t.text() + " instances (" + std::to_string(from_vertices) + " sampled vertices)"};
}

Outcome strong_compatibility() {
  oracle::Rng rng(1006);
  Tally feasibility, strong_route;
  for (int trial = 0; trial < 200; ++trial) {
    Space x = Space::numbered(1 + rng.below(10)), y = Space::numbered(1 + rng.below(10));
    auto c = oracle::random_cost(rng, {x, y}, trial % 2 ? 0.5 : 0.25);
    auto mu = oracle::random_measure(rng, x, 4, true), nu = oracle::random_measure(rng, y, 4, true);
    auto r = check_compatibility(mu, nu, c);
    bool feasible = oracle::finite_plan_exists(mu, nu, c);
    feasibility.add((r.level != Compatibility::Incompatible) == feasible);
    if (r.level != Compatibility::StronglyCompatible) continue;
    auto sol = solve_ot2(mu, nu, c);
    auto g = support_of(sol.plan);
    bool ok = sol.status == SolveStatus::Optimal && check_connecting(g, c).holds;
    if (ok) {
      auto pot = rockafellar_potential(g, c, *g.tuples.begin());
      ok = pot.value && verify_subgradient(*pot.value, g, c).holds;
    }
    strong_route.add(ok);
  }
  return {feasibility.all() && strong_route.all(),
          "compatible iff feasible " + feasibility.text() + ", strong cases connecting with potential " +
              strong_route.text()};
}

Outcome petrache() {
  auto fx = gen_petrache<Q>(6);
  auto best = solve_multi(fx.marginals, fx.cost);
  Q gap = integral_cost(fx.monotone_plan, fx.cost).value() - best.value.value();
  Q closed = fx.monotone_cost - fx.better_cost;
  bool exact = gap == closed && Q(17, 100) < gap;

  auto fd = gen_petrache<double>(6);
  auto bd = solve_multi(fd.marginals, fd.cost);
  double gap_d = integral_cost(fd.monotone_plan, fd.cost).value() - bd.value.value();
  bool close = std::fabs(gap_d - closed.get_d()) <= 1e-6 && gap_d > 0.17;

  auto g = support_of(fx.monotone_plan);
  bool ccm = check_ccm_multi(g, fx.cost, 4).holds;
  bool finop = check_finitely_optimal(fx.monotone_plan, fx.cost, 3, Aggregate::Sum).holds;
  char buf[256];
  std::snprintf(buf, sizeof buf, "gap %s (= %.9f, closed form %s), float gap %.9f, ccm(kmax 4) %s, finop(kmax 3) %s",
                NumberTraits<Q>::format(gap).c_str(), gap.get_d(), exact ? "matches" : "differs", gap_d,
                ccm ? "true" : "false", finop ? "true" : "false");
  return {exact && close && ccm && finop, buf};
}

Outcome multi_equivalences() {
  oracle::Rng rng(1008);
  Tally sum2, max2, sum3, max3;
  std::size_t sum3_ccm_only = 0, max3_icm_only = 0, sum3_confirmed = 0, sum3_fractional = 0;
  int instances = 0;
  while (instances < 1000) {
    const std::size_t arity = instances % 2 ? 3 : 2;
    std::vector<Space> spaces;
    for (std::size_t d = 0; d < arity; ++d) spaces.push_back(Space::numbered(1 + rng.below(3)));
    std::vector<EQ> entries;
    CostTensor<Q> shape(spaces, [](std::span<const std::size_t>) { return EQ(Q(0)); });
    for (std::size_t i = 0; i < shape.entry_count(); ++i) {
      auto k = rng.below(4);
      entries.push_back(k == 3 ? EQ::pos_inf() : EQ(Q(static_cast<long>(k))));
    }
    CostTensor<Q> c(spaces, entries);
    std::vector<Index> finite;
    for_each_index(c.shape(), [&](const Index& i) {
      if (c(i).is_finite()) finite.push_back(i);
    });
    if (finite.empty()) continue;
    rng.shuffle(finite);
    const std::size_t size = 1 + rng.below(std::min<std::size_t>(finite.size(), 6));
    SupportSet g{spaces, {finite.begin(), finite.begin() + size}};
    ++instances;
    auto alpha = uniform_coupling<Q>(g);
    const std::size_t kmax = g.size();
    bool ccm = check_ccm_multi(g, c, kmax).holds;
    bool icm = check_icm(g, c, kmax).holds;
    bool fin_sum = check_finitely_optimal(alpha, c, kmax, Aggregate::Sum).holds;
    bool fin_max = check_finitely_optimal(alpha, c, kmax, Aggregate::Max).holds;
    (arity == 2 ? sum2 : sum3).add(ccm == fin_sum);
    (arity == 2 ? max2 : max3).add(icm == fin_max);
    if (arity == 3 && ccm && !fin_sum) {
      ++sum3_ccm_only;
      // Confirm the mismatch independently before reporting it.
      auto fin = check_finitely_optimal(alpha, c, kmax, Aggregate::Sum);
      auto w = std::get<SubmeasureWitness<Q>>(fin.witness);
      if (oracle::monotone_by_permutations(g.ordered(), c, kmax, false) && replay_submeasure(w, c, Aggregate::Sum)) {
        ++sum3_confirmed;
        bool fractional = false;
        for (const auto& [idx, weight] : w.better.atoms)
          fractional = fractional || weight * Q(static_cast<long>(w.submeasure.atoms.size())) != 1;
        sum3_fractional += fractional;
      }
    }
    if (arity == 3 && icm && !fin_max) ++max3_icm_only;
  }
  std::string detail = "N=2 integral " + sum2.text() + ", linf " + max2.text() + "; N=3 integral " + sum3.text() +
                       " (" + std::to_string(sum3_ccm_only) + " ccm but not finitely optimal, " +
                       std::to_string(sum3_confirmed) + " confirmed by brute force and replay, " +
                       std::to_string(sum3_fractional) + " with a fractional better coupling), linf " + max3.text() +
                       " (" + std::to_string(max3_icm_only) + " icm but not finitely optimal)";
  return {sum2.all() && max2.all() && sum3.all() && max3.all(), detail};
}

Outcome linf_and_power() {
  oracle::Rng rng(1009);
  Space s = Space::numbered(5);
  Tally brute, power;
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto c = oracle::random_cost(rng, {s, s}, 0.0);
    std::vector<Measure<Q>> mus(2, uniform_measure<Q>(s));
    auto linf = solve_linf(mus, c);
    auto expected = oracle::best_permutation(c, true);
    brute.add(expected && linf.value == EQ(*expected));
    auto p64 = solve_p(mus, c, 64);
    double diff = std::fabs(p64.value.value().get_d() - linf.value.value().get_d());
    worst = std::max(worst, diff);
    power.add(diff <= 1e-6);
  }
  auto orbit = gen_shift_orbit<Q>(8, std::sqrt(2.0) / 4);
  auto fixture = solve_linf(orbit.marginals, orbit.cost);
  bool unit = fixture.value == EQ(Q(1));
  bool icm = check_icm(orbit.support, orbit.cost, orbit.support.size()).holds;
  char buf[320];
  std::snprintf(buf, sizeof buf,
                "bottleneck = brute force %s, p=64 within 1e-6 %s (largest gap %.6f), fixture value %s, orbit icm %s",
                brute.text().c_str(), power.text().c_str(), worst, format_ext(fixture.value).c_str(),
                icm ? "true" : "false");
  return {brute.all() && power.all() && unit && icm, buf};
}

Outcome grid_fixture() {
  auto fx = gen_appendix_a<Q>(8, std::sqrt(2.0) / 4);
  auto pb = check_path_bounded(fx.support, fx.cost);
  EQ top = EQ::neg_inf();
  bool diagonal_zero = true;
  for (std::size_t i = 0; i < pb.bound.size(); ++i) {
    diagonal_zero = diagonal_zero && pb.bound[i][i] == EQ(Q(0));
    for (const auto& m : pb.bound[i]) top = std::max(top, m);
  }
  bool bounded = pb.verdict.holds && diagonal_zero && top == EQ(Q(0));
  bool connecting = check_connecting(fx.support, fx.cost).holds;
  bool ccm = check_ccm2(fx.support, fx.cost).holds;
  return {bounded && !connecting && ccm, std::string("path-bounded ") + (bounded ? "true" : "false") +
                                             " with bound 0, connecting " + (connecting ? "true" : "false") +
                                             ", ccm " + (ccm ? "true" : "false")};
}

// Pair cost = a(x) + b(y) + extra, with extra = 0 on the prescribed pairs and
// positive (or +inf) elsewhere, so the prescribed pairs are monotone.
CostTensor<Q> planted_pair_cost(oracle::Rng& rng, const Space& x, const Space& y,
                                const std::set<std::pair<std::size_t, std::size_t>>& keep) {
  std::vector<Q> a, b;
  for (std::size_t i = 0; i < x.size(); ++i) a.push_back(Q(rng.between(-4, 4)));
  for (std::size_t j = 0; j < y.size(); ++j) b.push_back(Q(rng.between(-4, 4)));
  std::vector<EQ> entries;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j) {
      if (keep.count({i, j})) entries.push_back(EQ(Q(a[i] + b[j])));
      else if (rng.chance(0.2)) entries.push_back(EQ::pos_inf());
      else entries.push_back(EQ(Q(a[i] + b[j] + rng.between(1, 6))));
    }
  return CostTensor<Q>({x, y}, entries);
}

Outcome pairwise_composition() {
  oracle::Rng rng(1011);
  Tally t;
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t n = 2 + rng.below(4);
    Space s = Space::numbered(n);
    std::vector<Space> spaces(3, s);
    std::vector<std::size_t> second(n), third(n);
    std::iota(second.begin(), second.end(), 0);
    std::iota(third.begin(), third.end(), 0);
    rng.shuffle(second);
    rng.shuffle(third);
    SupportSet g{spaces, {}};
    for (std::size_t i = 0; i < n; ++i)
      if (i == 0 || rng.chance(0.8)) g.tuples.insert({i, second[i], third[i]});
    std::map<PairKey, CostTensor<Q>> pc;
    for (auto [i, j] : {PairKey{0, 1}, PairKey{0, 2}, PairKey{1, 2}}) {
      std::set<std::pair<std::size_t, std::size_t>> keep;
      for (const auto& tup : g.tuples) keep.insert({tup[i], tup[j]});
      pc.emplace(PairKey{i, j}, planted_pair_cost(rng, s, s, keep));
    }
    bool projections = true;
    for (const auto& [key, cost] : pc) projections = projections && check_ccm2(project(g, key.first, key.second), cost);
    auto out = pairwise_splitting_from_support(g, pc);
    auto c = pairwise_cost(spaces, pc);
    t.add(projections && out.value && verify_splitting(*out.value, c, g).holds);
  }
  return {t.all(), t.text() + " splitting tuples verified"};
}

}  // namespace

int main() {
  run(1, "finite-space equivalence", 60, finite_space_equivalence);
  run(2, "optimal iff ccm with infinite costs", 120, optimal_ccm_with_infinities);
  run(3, "chain-formula potential round trip", 30, rockafellar_round_trip);
  run(4, "constraint system iff path-bounded", 60, system_equivalence);
  run(5, "connecting route", 60, connecting_route);
  run(6, "strong compatibility", 60, strong_compatibility);
  run(7, "three-marginal counterexample", 120, petrache);
  run(8, "multi-marginal equivalences", 300, multi_equivalences);
  run(9, "bottleneck and p-limit", 120, linf_and_power);
  run(10, "grid fixture", 1, grid_fixture);
  run(11, "pairwise composition", 60, pairwise_composition);
  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
