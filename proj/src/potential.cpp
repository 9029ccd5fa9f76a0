#include "otcert/potential.hpp"

#include <algorithm>

#include "graph.hpp"

namespace otcert {

const char* to_string(Compatibility level) {
  switch (level) {
    case Compatibility::Incompatible: return "incompatible";
    case Compatibility::Compatible: return "compatible";
    default: return "strongly-compatible";
  }
}

template <class T>
TransformResult<T> c_transform(const PotentialVector<T>& f, const CostTensor<T>& c, TransformDirection dir) {
  if (c.arity() != 2) throw std::invalid_argument("c-transform needs a two-marginal cost");
  const bool forward = dir == TransformDirection::XToY;
  const std::size_t in = forward ? c.shape()[0] : c.shape()[1];
  const std::size_t out = forward ? c.shape()[1] : c.shape()[0];
  if (f.size() != in) throw std::invalid_argument("potential length does not match the cost");
  if (std::all_of(f.values.begin(), f.values.end(), [](const auto& v) { return v.is_neg_inf(); }))
    throw std::invalid_argument("c-transform of a potential that is -inf everywhere");

  TransformResult<T> r;
  r.potential.space = c.spaces()[forward ? 1 : 0];
  r.potential.values.assign(out, ExtReal<T>::pos_inf());
  for (std::size_t o = 0; o < out; ++o) {
    auto& best = r.potential.values[o];
    for (std::size_t i = 0; i < in; ++i) {
      ExtReal<T> cost = forward ? c.at(i, o) : c.at(o, i);
      if (cost.is_pos_inf() || f[i].is_neg_inf()) continue;
      ExtReal<T> term = cost - f[i];
      if (term < best) best = term;
    }
    if (best.is_pos_inf()) r.infinite_entries.push_back(o);
  }
  return r;
}

template <class T>
PotentialOutcome<T> rockafellar_potential(const SupportSet& g, const CostTensor<T>& c, const Index& base) {
  if (!g.tuples.count(base)) throw std::invalid_argument("base tuple is not in the support");
  if (c.arity() != 2) throw std::invalid_argument("potential construction needs a two-marginal cost");
  for (const auto& t : g.tuples)
    if (!c(t).is_finite())
      return {std::nullopt, Verdict<T>::no("support tuple has infinite cost", TupleWitness<T>{t, c(t)})};
  if (auto v = check_ccm2(g, c); !v) return {std::nullopt, v};

  auto pg = PairGraph<T>::build(g, c);
  const std::size_t n = pg.size();
  const std::size_t b = static_cast<std::size_t>(std::find(pg.nodes.begin(), pg.nodes.end(), base) - pg.nodes.begin());
  std::vector<detail::Arc<T>> arcs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && pg.chain[i][j].is_finite()) arcs.push_back({i, j, pg.chain[i][j].value()});
  std::vector<ExtReal<T>> init(n, ExtReal<T>::pos_inf());
  init[b] = ExtReal<T>(T(0));
  auto sp = detail::bellman_ford<T>(n, arcs, std::move(init));
  if (sp.negative_cycle) throw std::logic_error("negative chain cycle on a monotone support");

  for (std::size_t k = 0; k < n; ++k) {
    if (sp.dist[k].is_finite()) continue;
    auto conn = check_connecting(g, c);
    ComponentWitness w;
    if (auto* cw = std::get_if<ComponentWitness>(&conn.witness)) w.components = cw->components;
    w.from = base;
    w.to = pg.nodes[k];
    return {std::nullopt, Verdict<T>::no("support point unreachable from the base by finite chains", w)};
  }

  const std::size_t nx = c.shape()[0];
  PotentialVector<T> phi{c.spaces()[0], std::vector<ExtReal<T>>(nx, ExtReal<T>::pos_inf()), base};
  for (std::size_t x = 0; x < nx; ++x) {
    auto& v = phi.values[x];
    for (std::size_t j = 0; j < n; ++j) {
      ExtReal<T> step = c.at(x, pg.nodes[j][1]);
      if (step.is_pos_inf()) continue;
      ExtReal<T> cand = sp.dist[j] + step - c(pg.nodes[j]);
      if (cand < v) v = cand;
    }
    if (v.is_pos_inf()) v = ExtReal<T>::neg_inf();
  }
  return {std::move(phi), Verdict<T>::yes()};
}

template <class T>
Verdict<T> verify_subgradient(const PotentialVector<T>& f, const SupportSet& g, const CostTensor<T>& c) {
  if (c.arity() != 2) throw std::invalid_argument("subgradient check needs a two-marginal cost");
  const std::size_t nx = c.shape()[0];
  if (f.size() != nx) throw std::invalid_argument("potential length does not match the cost");
  for (const auto& v : f.values)
    if (v.is_pos_inf()) throw std::invalid_argument("potential takes the value +inf");
  for (const auto& t : g.tuples) {
    const std::size_t x = t[0], y = t[1];
    ExtReal<T> here = c.at(x, y);
    if (!here.is_finite()) return Verdict<T>::no("support tuple has infinite cost", TupleWitness<T>{t, here});
    if (!f[x].is_finite())
      return Verdict<T>::no("potential is not finite on the support", TupleWitness<T>{t, f[x]});
    ExtReal<T> lhs = here - f[x];
    for (std::size_t z = 0; z < nx; ++z) {
      ExtReal<T> rhs = c.at(z, y) - f[z];
      if (definitely_less(rhs, lhs))
        return Verdict<T>::no("subgradient inequality fails", TripleWitness<T>{x, y, z, lhs, rhs});
    }
  }
  return Verdict<T>::yes();
}

template <class T>
bool replay_triple(const TripleWitness<T>& w, const PotentialVector<T>& f, const CostTensor<T>& c) {
  if (w.x >= f.size() || w.z >= f.size() || w.y >= c.shape()[1]) return false;
  if (!f[w.x].is_finite() || f[w.z].is_pos_inf()) return false;
  ExtReal<T> lhs = c.at(w.x, w.y) - f[w.x];
  ExtReal<T> rhs = c.at(w.z, w.y) - f[w.z];
  return definitely_less(rhs, lhs) && nearly_equal(lhs, w.lhs) && nearly_equal(rhs, w.rhs);
}

template <class T>
SystemSolution<T> solve_inequality_system(const std::vector<std::vector<ExtReal<T>>>& gain) {
  const std::size_t n = gain.size();
  std::vector<detail::Arc<T>> arcs;
  for (std::size_t i = 0; i < n; ++i) {
    if (gain[i].size() != n) throw std::invalid_argument("constraint matrix must be square");
    if (!(gain[i][i] == ExtReal<T>(T(0)))) throw std::invalid_argument("constraint matrix needs a zero diagonal");
    for (std::size_t j = 0; j < n; ++j) {
      if (gain[i][j].is_pos_inf()) throw std::invalid_argument("constraint entries may not be +inf");
      // a_j <= a_i - gain(i, j)
      if (i != j && gain[i][j].is_finite()) arcs.push_back({i, j, T(-gain[i][j].value())});
    }
  }
  auto sp = detail::bellman_ford<T>(n, arcs, std::vector<ExtReal<T>>(n, ExtReal<T>(T(0))));
  SystemSolution<T> out;
  if (sp.negative_cycle) {
    out.cycle = detail::rotate_to_min(*sp.negative_cycle);
    auto s = system_cycle_sum(gain, out.cycle);
    out.cycle_sum = s.value();
    if (definitely_less(T(0), out.cycle_sum)) return out;
    out.cycle.clear();  // float mode: a cycle within tolerance is not infeasibility
    out.cycle_sum = T(0);
  }
  std::vector<T> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = sp.dist[i].value();
  out.values = std::move(a);
  return out;
}

template <class T>
ExtReal<T> system_cycle_sum(const std::vector<std::vector<ExtReal<T>>>& gain, const std::vector<std::size_t>& cycle) {
  ExtReal<T> s(T(0));
  for (std::size_t k = 0; k < cycle.size(); ++k) s += gain.at(cycle[k]).at(cycle[(k + 1) % cycle.size()]);
  return s;
}

template <class T>
PotentialVector<T> potential_from_constants(const std::vector<T>& a, const SupportSet& g, const CostTensor<T>& c) {
  auto nodes = g.ordered();
  if (a.size() != nodes.size()) throw std::invalid_argument("one constant per support tuple expected");
  const std::size_t nx = c.shape()[0];
  PotentialVector<T> phi{c.spaces()[0], std::vector<ExtReal<T>>(nx, ExtReal<T>::pos_inf()), nodes.front()};
  for (std::size_t x = 0; x < nx; ++x) {
    auto& v = phi.values[x];
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      ExtReal<T> step = c.at(x, nodes[i][1]);
      if (step.is_pos_inf()) continue;
      ExtReal<T> cand = step - ExtReal<T>(a[i]);
      if (cand < v) v = cand;
    }
    if (v.is_pos_inf()) v = ExtReal<T>::neg_inf();
  }
  ExtReal<T> anchor = phi.values[nodes.front()[0]];
  for (auto& v : phi.values)
    if (v.is_finite()) v -= anchor;
  return phi;
}

template <class T>
SubsetWitness<T> evaluate_subset(const std::vector<std::size_t>& subset, const Measure<T>& mu, const Measure<T>& nu,
                                 const CostTensor<T>& c) {
  SubsetWitness<T> w{subset, T(0), T(0)};
  for (auto x : subset) w.mass += mu.weights.at(x);
  for (std::size_t y = 0; y < nu.size(); ++y) {
    bool blocked = std::all_of(subset.begin(), subset.end(), [&](std::size_t x) { return c.at(x, y).is_pos_inf(); });
    if (blocked) w.blocked_mass += nu.weights[y];
  }
  return w;
}

template <class T>
CompatibilityResult<T> check_compatibility(const Measure<T>& mu, const Measure<T>& nu, const CostTensor<T>& c) {
  if (c.arity() != 2) throw std::invalid_argument("compatibility needs a two-marginal cost");
  if (mu.size() != c.shape()[0] || nu.size() != c.shape()[1])
    throw std::invalid_argument("measures do not match the cost shape");
  std::vector<std::size_t> support;
  for (std::size_t x = 0; x < mu.size(); ++x)
    if (definitely_less(T(0), mu.weights[x])) support.push_back(x);
  const std::size_t s = support.size();
  if (s > kCompatibilitySubsetCap)
    throw BudgetExceeded("subset enumeration over " + std::to_string(s) +
                             " support points exceeds the cap; check feasibility with `solve ot` instead",
                         static_cast<double>(1ULL << std::min<std::size_t>(s, 63)),
                         static_cast<double>(1ULL << kCompatibilitySubsetCap));

  // finite_rows[y]: bitmask of support points with finite cost to y.
  std::vector<unsigned long> finite_rows(nu.size(), 0);
  for (std::size_t y = 0; y < nu.size(); ++y)
    for (std::size_t k = 0; k < s; ++k)
      if (c.at(support[k], y).is_finite()) finite_rows[y] |= 1UL << k;

  auto subset_of = [&](unsigned long mask) {
    std::vector<std::size_t> a;
    for (std::size_t k = 0; k < s; ++k)
      if (mask >> k & 1UL) a.push_back(support[k]);
    return a;
  };

  CompatibilityResult<T> r;
  std::optional<unsigned long> weak;
  for (unsigned long mask = 1; mask < (1UL << s); ++mask) {
    T mass(0), blocked(0);
    for (std::size_t k = 0; k < s; ++k)
      if (mask >> k & 1UL) mass += mu.weights[support[k]];
    for (std::size_t y = 0; y < nu.size(); ++y)
      if ((finite_rows[y] & mask) == 0) blocked += nu.weights[y];
    T total = mass + blocked;
    if (definitely_less(T(1), total)) {
      r.level = Compatibility::Incompatible;
      r.verdict = Verdict<T>::no("mass of a subset plus the mass it cannot reach exceeds one",
                                 SubsetWitness<T>{subset_of(mask), mass, blocked});
      return r;
    }
    if (!weak && definitely_less(T(0), mass) && definitely_less(mass, T(1)) && !definitely_less(total, T(1)))
      weak = mask;
  }
  if (weak) {
    auto w = evaluate_subset(subset_of(*weak), mu, nu, c);
    r.level = Compatibility::Compatible;
    r.verdict = Verdict<T>::no("a proper subset saturates its reachable mass", w);
  }
  return r;
}

template <class T>
std::optional<bool> in_alt_subgradient(const PotentialVector<T>& phi, const CostTensor<T>& c, std::size_t x,
                                       std::size_t y) {
  const std::size_t nx = c.shape()[0];
  bool hypothesis = false;
  for (std::size_t z = 0; z < nx; ++z)
    if (c.at(z, y).is_finite() && phi[z].is_finite()) hypothesis = true;
  if (!hypothesis) return std::nullopt;
  ExtReal<T> transform = ExtReal<T>::pos_inf();
  for (std::size_t z = 0; z < nx; ++z) {
    if (c.at(z, y).is_pos_inf() || phi[z].is_neg_inf()) continue;
    ExtReal<T> term = c.at(z, y) - phi[z];
    if (term < transform) transform = term;
  }
  ExtReal<T> here = c.at(x, y);
  if (!here.is_finite()) return false;
  return nearly_equal(phi[x] + transform, here);
}

#define OTCERT_INSTANTIATE(T)                                                                                  \
  template TransformResult<T> c_transform<T>(const PotentialVector<T>&, const CostTensor<T>&, TransformDirection); \
  template PotentialOutcome<T> rockafellar_potential<T>(const SupportSet&, const CostTensor<T>&, const Index&);   \
  template Verdict<T> verify_subgradient<T>(const PotentialVector<T>&, const SupportSet&, const CostTensor<T>&); \
  template bool replay_triple<T>(const TripleWitness<T>&, const PotentialVector<T>&, const CostTensor<T>&);     \
  template SystemSolution<T> solve_inequality_system<T>(const std::vector<std::vector<ExtReal<T>>>&);           \
  template ExtReal<T> system_cycle_sum<T>(const std::vector<std::vector<ExtReal<T>>>&,                          \
                                          const std::vector<std::size_t>&);                                     \
  template PotentialVector<T> potential_from_constants<T>(const std::vector<T>&, const SupportSet&,             \
                                                          const CostTensor<T>&);                                \
  template SubsetWitness<T> evaluate_subset<T>(const std::vector<std::size_t>&, const Measure<T>&,              \
                                               const Measure<T>&, const CostTensor<T>&);                        \
  template CompatibilityResult<T> check_compatibility<T>(const Measure<T>&, const Measure<T>&,                  \
                                                         const CostTensor<T>&);                                 \
  template std::optional<bool> in_alt_subgradient<T>(const PotentialVector<T>&, const CostTensor<T>&,           \
                                                     std::size_t, std::size_t);

OTCERT_INSTANTIATE(Rational)
OTCERT_INSTANTIATE(double)

}  // namespace otcert
