#include "otcert/multi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "otcert/monotone.hpp"

namespace otcert {

namespace {

template <class T>
ExtReal<T> aggregate(const std::vector<ExtReal<T>>& values, Aggregate how) {
  if (how == Aggregate::Sum) {
    ExtReal<T> s(T(0));
    for (const auto& v : values) s += v;
    return s;
  }
  ExtReal<T> m = ExtReal<T>::neg_inf();
  for (const auto& v : values) m = std::max(m, v);
  return m;
}

template <class T>
std::vector<ExtReal<T>> permuted_costs(const std::vector<Index>& points,
                                       const std::vector<std::vector<std::size_t>>& perms, const CostTensor<T>& c) {
  const std::size_t k = points.size(), n = c.arity();
  std::vector<ExtReal<T>> out;
  out.reserve(k);
  Index idx(n);
  for (std::size_t i = 0; i < k; ++i) {
    idx[0] = points[i][0];
    for (std::size_t d = 1; d < n; ++d) idx[d] = points[perms[d - 1][i]][d];
    out.push_back(c(idx));
  }
  return out;
}

template <class T>
void require_finite_support(const SupportSet& g, const CostTensor<T>& c) {
  if (g.arity() != c.arity()) throw std::invalid_argument("support and cost have different arity");
  if (g.tuples.empty()) throw std::invalid_argument("empty support");
  for (const auto& t : g.tuples)
    if (!c(t).is_finite())
      throw PreconditionError<T>(Verdict<T>::no("support tuple has infinite cost", TupleWitness<T>{t, c(t)}));
}

// Lexicographic combinations of {0..n-1} of every size 2..kmax; stops when
// the visitor returns true.
bool for_each_subset(std::size_t n, std::size_t kmax, std::size_t kmin,
                     const std::function<bool(const std::vector<std::size_t>&)>& visit) {
  for (std::size_t k = kmin; k <= std::min(kmax, n); ++k) {
    std::vector<std::size_t> pick(k);
    std::iota(pick.begin(), pick.end(), 0);
    while (true) {
      if (visit(pick)) return true;
      std::size_t i = k;
      while (i > 0 && pick[i - 1] == n - k + i - 1) --i;
      if (i == 0) break;
      ++pick[i - 1];
      for (std::size_t j = i; j < k; ++j) pick[j] = pick[j - 1] + 1;
    }
  }
  return false;
}

template <class T>
std::optional<PermutationWitness<T>> search_permutations(const SupportSet& g, const CostTensor<T>& c, std::size_t kmax,
                                                         Aggregate how) {
  const std::size_t n = c.arity();
  const double work = enumeration_work(g.size(), kmax, n);
  if (work > kEnumerationBudget)
    throw BudgetExceeded("permutation enumeration needs about " + std::to_string(static_cast<long double>(work)) +
                             " comparisons, above the budget of 1e8; lower kmax or use the LP method",
                         work, kEnumerationBudget);
  auto all = g.ordered();
  std::optional<PermutationWitness<T>> found;
  for_each_subset(all.size(), kmax, 2, [&](const std::vector<std::size_t>& pick) {
    const std::size_t k = pick.size();
    std::vector<Index> points;
    for (auto i : pick) points.push_back(all[i]);
    std::vector<ExtReal<T>> base;
    for (const auto& p : points) base.push_back(c(p));
    ExtReal<T> original = aggregate(base, how);
    std::vector<std::size_t> id(k);
    std::iota(id.begin(), id.end(), 0);
    std::vector<std::vector<std::size_t>> perms(n - 1, id);
    while (true) {
      // Odometer over (sigma_2, ..., sigma_N), last coordinate fastest.
      std::size_t d = n - 1;
      while (d > 0) {
        if (std::next_permutation(perms[d - 1].begin(), perms[d - 1].end())) break;
        --d;  // wrapped back to identity; carry
      }
      if (d == 0) return false;
      ExtReal<T> moved = aggregate(permuted_costs(points, perms, c), how);
      if (definitely_less(moved, original)) {
        found = PermutationWitness<T>{points, perms, original, moved};
        return true;
      }
    }
  });
  return found;
}

template <class T>
struct SubProblem {
  std::vector<Measure<T>> marginals;
  CostTensor<T> cost;
  std::vector<std::vector<std::size_t>> global;  // local -> global index per axis
};

template <class T>
SubProblem<T> restrict_to(const Coupling<T>& alpha, const CostTensor<T>& c) {
  SubProblem<T> sp;
  const std::size_t n = c.arity();
  std::vector<Space> spaces;
  for (std::size_t d = 0; d < n; ++d) {
    std::vector<std::size_t> pts;
    for (const auto& [idx, w] : alpha.atoms) pts.push_back(idx[d]);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    std::vector<std::string> labels;
    for (auto p : pts) labels.push_back(c.spaces()[d].label(p));
    Space s(labels);
    Measure<T> m{s, std::vector<T>(pts.size(), T(0))};
    for (const auto& [idx, w] : alpha.atoms)
      m.weights[static_cast<std::size_t>(std::lower_bound(pts.begin(), pts.end(), idx[d]) - pts.begin())] += w;
    spaces.push_back(s);
    sp.marginals.push_back(std::move(m));
    sp.global.push_back(std::move(pts));
  }
  const auto& global = sp.global;
  sp.cost = CostTensor<T>::tabulate(spaces, [&](std::span<const std::size_t> local) {
    Index idx(local.size());
    for (std::size_t d = 0; d < local.size(); ++d) idx[d] = global[d][local[d]];
    return c(idx);
  });
  return sp;
}

template <class T>
Coupling<T> lift(const Coupling<T>& local, const SubProblem<T>& sp, const CostTensor<T>& c) {
  Coupling<T> g{c.spaces(), {}};
  for (const auto& [idx, w] : local.atoms) {
    Index full(idx.size());
    for (std::size_t d = 0; d < idx.size(); ++d) full[d] = sp.global[d][idx[d]];
    g.add(full, w);
  }
  return g;
}

template <class T>
ExtReal<T> objective_of(const Coupling<T>& g, const CostTensor<T>& c, Aggregate how) {
  return how == Aggregate::Sum ? integral_cost(g, c) : linf_cost(g, c);
}

}  // namespace

double enumeration_work(std::size_t n, std::size_t kmax, std::size_t arity) {
  double total = 0;
  for (std::size_t k = 2; k <= std::min(kmax, n); ++k) {
    double choose = std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
    total += choose * std::pow(std::tgamma(k + 1.0), static_cast<double>(arity - 1));
  }
  return total;
}

template <class T>
Verdict<T> check_ccm_multi(const SupportSet& g, const CostTensor<T>& c, std::size_t kmax, MultiMethod method) {
  if (method == MultiMethod::Lp) {
    require_finite_support(g, c);
    return check_finitely_optimal(uniform_coupling<T>(g), c, kmax, Aggregate::Sum);
  }
  if (c.arity() == 2) return check_ccm2(g, c, CcmMethod::Exact);
  require_finite_support(g, c);
  if (auto w = search_permutations(g, c, kmax, Aggregate::Sum))
    return Verdict<T>::no("permuting coordinates lowers the total cost", *w);
  return Verdict<T>::yes();
}

template <class T>
Verdict<T> check_icm(const SupportSet& g, const CostTensor<T>& c, std::size_t kmax) {
  require_finite_support(g, c);
  if (auto w = search_permutations(g, c, kmax, Aggregate::Max))
    return Verdict<T>::no("permuting coordinates lowers the maximal cost", *w);
  return Verdict<T>::yes();
}

template <class T>
Verdict<T> check_finitely_optimal(const Coupling<T>& g, const CostTensor<T>& c, std::size_t kmax, Aggregate objective) {
  auto support = support_of(g);
  require_finite_support(support, c);
  const auto all = support.ordered();
  double work = 0;
  for (std::size_t k = 2; k <= std::min(kmax, all.size()); ++k)
    work += std::exp(std::lgamma(all.size() + 1.0) - std::lgamma(k + 1.0) - std::lgamma(all.size() - k + 1.0)) *
            std::pow(static_cast<double>(k), static_cast<double>(c.arity()));
  if (work > kEnumerationBudget)
    throw BudgetExceeded("finite-optimality check would solve too many subproblems; lower kmax", work,
                         kEnumerationBudget);

  std::optional<SubmeasureWitness<T>> found;
  for_each_subset(all.size(), kmax, 2, [&](const std::vector<std::size_t>& pick) {
    SupportSet part{c.spaces(), {}};
    for (auto i : pick) part.tuples.insert(all[i]);
    auto alpha = uniform_coupling<T>(part);
    auto sp = restrict_to(alpha, c);
    auto best = objective == Aggregate::Sum ? solve_multi(sp.marginals, sp.cost) : solve_linf(sp.marginals, sp.cost);
    ExtReal<T> current = objective_of(alpha, c, objective);
    if (!definitely_less(best.value, current)) return false;
    auto better = lift(best.plan, sp, c);
    found = SubmeasureWitness<T>{alpha, better, current, objective_of(better, c, objective)};
    return true;
  });
  if (found) return Verdict<T>::no("a finite submeasure is not optimal for its marginals", *found);
  return Verdict<T>::yes();
}

template <class T>
Verdict<T> verify_splitting(const SplittingTuple<T>& t, const CostTensor<T>& c, const SupportSet& g) {
  if (t.arity() != c.arity()) throw std::invalid_argument("splitting tuple arity does not match the cost");
  for (std::size_t d = 0; d < t.arity(); ++d) {
    if (t.parts[d].size() != c.shape()[d]) throw std::invalid_argument("splitting part has the wrong length");
    for (const auto& v : t.parts[d].values)
      if (v.is_pos_inf()) throw std::invalid_argument("splitting part takes the value +inf");
  }
  std::optional<Verdict<T>> bad;
  for_each_index(c.shape(), [&](const Index& idx) {
    if (bad) return;
    auto lhs = t.sum_at(idx);
    if (lhs.is_neg_inf()) return;
    auto cost = c(idx);
    if (definitely_less(cost, lhs))
      bad = Verdict<T>::no("parts sum above the cost", TupleWitness<T>{idx, cost - lhs});
  });
  if (bad) return *bad;
  for (const auto& idx : g.tuples) {
    auto lhs = t.sum_at(idx);
    auto cost = c(idx);
    if (!cost.is_finite() || !lhs.is_finite() || !nearly_equal(lhs, cost))
      return Verdict<T>::no("parts do not sum to the cost on the support", TupleWitness<T>{idx, cost - lhs});
  }
  return Verdict<T>::yes();
}

template <class T>
Verdict<T> check_normalization(const SplittingTuple<T>& t, const CostTensor<T>& c, const Index& base) {
  for (std::size_t i = 0; i < t.arity(); ++i) {
    Index idx = base;
    for (std::size_t x = 0; x < c.shape()[i]; ++x) {
      idx[i] = x;
      auto bound = c(idx);
      if (definitely_less(bound, t.parts[i][x]))
        return Verdict<T>::no("normalised part exceeds the cost along the base", TupleWitness<T>{idx, bound - t.parts[i][x]});
    }
  }
  return Verdict<T>::yes();
}

template <class T>
SplittingOutcome<T> construct_splitting(const SupportSet& g, const CostTensor<T>& c, const Index& base) {
  if (!g.tuples.count(base)) throw std::invalid_argument("base tuple is not in the support");
  for (const auto& t : g.tuples)
    if (!c(t).is_finite())
      return {std::nullopt, Verdict<T>::no("support tuple has infinite cost", TupleWitness<T>{t, c(t)})};
  const std::size_t n = c.arity();

  auto alpha = uniform_coupling<T>(g);
  std::vector<Measure<T>> mus;
  for (std::size_t d = 0; d < n; ++d) mus.push_back(marginal(alpha, d));
  auto best = solve_multi(mus, c);
  ExtReal<T> current = integral_cost(alpha, c);
  if (definitely_less(best.value, current))
    return {std::nullopt, Verdict<T>::no("support is not cyclically monotone",
                                         SubmeasureWitness<T>{alpha, best.plan, current, best.value})};

  // Uniform plan is optimal, so every optimal dual is tight on the support.
  SplittingTuple<T> t = *best.dual;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<ExtReal<T>> sharper(c.shape()[i], ExtReal<T>::pos_inf());
    for_each_index(c.shape(), [&](const Index& idx) {
      auto cost = c(idx);
      if (cost.is_pos_inf()) return;
      ExtReal<T> rest(T(0));
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        if (t.parts[j][idx[j]].is_neg_inf()) return;
        rest += t.parts[j][idx[j]];
      }
      auto cand = cost - rest;
      if (cand < sharper[idx[i]]) sharper[idx[i]] = cand;
    });
    for (auto& v : sharper)
      if (v.is_pos_inf()) v = ExtReal<T>::neg_inf();
    t.parts[i].values = std::move(sharper);
  }

  ExtReal<T> carry(T(0));
  for (std::size_t j = 1; j < n; ++j) {
    ExtReal<T> at = t.parts[j][base[j]];
    carry += at;
    for (auto& v : t.parts[j].values)
      if (v.is_finite()) v -= at;
  }
  for (auto& v : t.parts[0].values)
    if (v.is_finite()) v += carry;
  t.base = base;
  for (auto& part : t.parts) part.base = base;

  if (auto v = verify_splitting(t, c, g); !v) throw std::logic_error("constructed splitting tuple fails: " + v.reason);
  return {std::move(t), Verdict<T>::yes()};
}

SupportSet project(const SupportSet& g, std::size_t i, std::size_t j) {
  if (i >= g.arity() || j >= g.arity() || i == j) throw std::out_of_range("bad projection axes");
  SupportSet p{{g.spaces[i], g.spaces[j]}, {}};
  for (const auto& t : g.tuples) p.tuples.insert({t[i], t[j]});
  return p;
}

template <class T>
CostTensor<T> pairwise_cost(const std::vector<Space>& spaces, const std::map<PairKey, CostTensor<T>>& pair_costs) {
  for (const auto& [key, pc] : pair_costs) {
    if (key.first >= key.second || key.second >= spaces.size()) throw std::invalid_argument("bad pair key");
    if (pc.arity() != 2 || pc.shape()[0] != spaces[key.first].size() || pc.shape()[1] != spaces[key.second].size())
      throw std::invalid_argument("pair cost shape does not match its spaces");
  }
  return CostTensor<T>::tabulate(spaces, [&](std::span<const std::size_t> idx) {
    ExtReal<T> s(T(0));
    for (const auto& [key, pc] : pair_costs) s += pc.at(idx[key.first], idx[key.second]);
    return s;
  });
}

template <class T>
SplittingTuple<T> pairwise_splitting(const SupportSet& g, const std::map<PairKey, PotentialVector<T>>& pair_potentials,
                                     const std::map<PairKey, CostTensor<T>>& pair_costs) {
  const std::size_t n = g.arity();
  SplittingTuple<T> t;
  for (std::size_t i = 0; i < n; ++i)
    t.parts.push_back({g.spaces[i], std::vector<ExtReal<T>>(g.spaces[i].size(), ExtReal<T>(T(0))), std::nullopt});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      auto pk = pair_potentials.find({i, j});
      auto ck = pair_costs.find({i, j});
      if (pk == pair_potentials.end() || ck == pair_costs.end())
        throw std::invalid_argument("missing pair data for (" + std::to_string(i + 1) + ", " + std::to_string(j + 1) + ")");
      const auto& psi = pk->second;
      const auto& cij = ck->second;
      if (auto v = verify_subgradient(psi, project(g, i, j), cij); !v) throw PreconditionError<T>(v);
      auto tr = c_transform(psi, cij, TransformDirection::XToY);
      for (std::size_t x = 0; x < psi.size(); ++x) t.parts[i].values[x] += psi[x];
      // An unreachable point only meets tuples of infinite cost or with a -inf part.
      for (std::size_t y = 0; y < tr.potential.size(); ++y) {
        auto v = tr.potential[y].is_pos_inf() ? ExtReal<T>::neg_inf() : tr.potential[y];
        auto& slot = t.parts[j].values[y];
        slot = (slot.is_neg_inf() || v.is_neg_inf()) ? ExtReal<T>::neg_inf() : slot + v;
      }
    }
  return t;
}

template <class T>
SplittingOutcome<T> pairwise_splitting_from_support(const SupportSet& g,
                                                    const std::map<PairKey, CostTensor<T>>& pair_costs) {
  std::map<PairKey, PotentialVector<T>> psi;
  for (const auto& [key, cij] : pair_costs) {
    auto proj = project(g, key.first, key.second);
    for (const auto& t : proj.tuples)
      if (!cij(t).is_finite())
        return {std::nullopt, Verdict<T>::no("projected tuple has infinite cost", TupleWitness<T>{t, cij(t)})};
    if (auto v = check_ccm2(proj, cij); !v) {
      v.reason = "projection (" + std::to_string(key.first + 1) + ", " + std::to_string(key.second + 1) + "): " + v.reason;
      return {std::nullopt, v};
    }
    auto chain = rockafellar_potential(proj, cij, *proj.tuples.begin());
    if (chain.value) {
      psi.emplace(key, *chain.value);
      continue;
    }
    auto pg = PairGraph<T>::build(proj, cij);
    auto sys = solve_inequality_system(pg.gain);
    if (!sys.values) throw std::logic_error("monotone projection with an infeasible constraint system");
    psi.emplace(key, potential_from_constants(*sys.values, proj, cij));
  }
  return {pairwise_splitting(g, psi, pair_costs), Verdict<T>::yes()};
}

template <class T>
bool replay_permutation(const PermutationWitness<T>& w, const CostTensor<T>& c, Aggregate how) {
  const std::size_t k = w.points.size();
  if (k < 2 || w.permutations.size() + 1 != c.arity()) return false;
  for (const auto& p : w.permutations) {
    if (p.size() != k) return false;
    std::vector<std::size_t> sorted = p;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < k; ++i)
      if (sorted[i] != i) return false;
  }
  std::vector<ExtReal<T>> base;
  for (const auto& p : w.points) base.push_back(c(p));
  auto original = aggregate(base, how);
  auto moved = aggregate(permuted_costs(w.points, w.permutations, c), how);
  return definitely_less(moved, original) && nearly_equal(original, w.original) && nearly_equal(moved, w.permuted);
}

template <class T>
bool replay_submeasure(const SubmeasureWitness<T>& w, const CostTensor<T>& c, Aggregate how) {
  if (w.submeasure.arity() != c.arity() || w.better.arity() != c.arity()) return false;
  for (std::size_t d = 0; d < c.arity(); ++d) {
    auto a = marginal(w.submeasure, d), b = marginal(w.better, d);
    for (std::size_t i = 0; i < a.size(); ++i)
      if (!nearly_equal(a.weights[i], b.weights[i])) return false;
  }
  auto cur = objective_of(w.submeasure, c, how);
  auto alt = objective_of(w.better, c, how);
  return definitely_less(alt, cur) && nearly_equal(cur, w.submeasure_value) && nearly_equal(alt, w.better_value);
}

template <class T>
bool replay_splitting(const TupleWitness<T>& w, const SplittingTuple<T>& t, const CostTensor<T>& c,
                      const SupportSet& g) {
  auto lhs = t.sum_at(w.tuple);
  auto cost = c(w.tuple);
  bool violated;
  if (g.tuples.count(w.tuple))
    violated = !cost.is_finite() || !lhs.is_finite() || !nearly_equal(lhs, cost);
  else
    violated = !lhs.is_neg_inf() && definitely_less(cost, lhs);
  if (!violated) return false;
  return nearly_equal(cost - lhs, w.slack);
}

#define OTCERT_INSTANTIATE(T)                                                                                   \
  template Verdict<T> check_ccm_multi<T>(const SupportSet&, const CostTensor<T>&, std::size_t, MultiMethod);    \
  template Verdict<T> check_icm<T>(const SupportSet&, const CostTensor<T>&, std::size_t);                       \
  template Verdict<T> check_finitely_optimal<T>(const Coupling<T>&, const CostTensor<T>&, std::size_t, Aggregate); \
  template Verdict<T> verify_splitting<T>(const SplittingTuple<T>&, const CostTensor<T>&, const SupportSet&);   \
  template Verdict<T> check_normalization<T>(const SplittingTuple<T>&, const CostTensor<T>&, const Index&);     \
  template SplittingOutcome<T> construct_splitting<T>(const SupportSet&, const CostTensor<T>&, const Index&);    \
  template CostTensor<T> pairwise_cost<T>(const std::vector<Space>&, const std::map<PairKey, CostTensor<T>>&);  \
  template SplittingTuple<T> pairwise_splitting<T>(const SupportSet&, const std::map<PairKey, PotentialVector<T>>&, \
                                                   const std::map<PairKey, CostTensor<T>>&);                    \
  template SplittingOutcome<T> pairwise_splitting_from_support<T>(const SupportSet&,                            \
                                                                  const std::map<PairKey, CostTensor<T>>&);     \
  template bool replay_permutation<T>(const PermutationWitness<T>&, const CostTensor<T>&, Aggregate);           \
  template bool replay_submeasure<T>(const SubmeasureWitness<T>&, const CostTensor<T>&, Aggregate);             \
  template bool replay_splitting<T>(const TupleWitness<T>&, const SplittingTuple<T>&, const CostTensor<T>&,     \
                                    const SupportSet&);

OTCERT_INSTANTIATE(Rational)
OTCERT_INSTANTIATE(double)

}  // namespace otcert
