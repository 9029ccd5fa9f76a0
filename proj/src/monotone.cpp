#include "otcert/monotone.hpp"

#include <algorithm>
#include <numeric>

#include "graph.hpp"

namespace otcert {

namespace {

template <class T>
void require_pair(const SupportSet& g, const CostTensor<T>& c) {
  if (c.arity() != 2 || g.arity() != 2) throw std::invalid_argument("two-marginal certificate on a multi-marginal input");
  if (g.tuples.empty()) throw std::invalid_argument("empty support");
  for (std::size_t d = 0; d < 2; ++d)
    if (g.spaces[d].size() != c.shape()[d]) throw std::invalid_argument("support and cost shapes differ");
}

template <class T>
Verdict<T> infinite_diagonal(const SupportSet& g, const CostTensor<T>& c) {
  for (const auto& t : g.tuples) {
    auto v = c(t);
    if (!v.is_finite())
      return Verdict<T>::no("support tuple has infinite cost", TupleWitness<T>{t, v});
  }
  return Verdict<T>::yes();
}

template <class T>
CycleWitness<T> make_cycle(const PairGraph<T>& pg, std::vector<std::size_t> nodes) {
  nodes = detail::rotate_to_min(std::move(nodes));
  CycleWitness<T> w;
  w.nodes = nodes;
  for (auto i : nodes) w.tuples.push_back(pg.nodes[i]);
  return w;
}

template <class T>
std::optional<CycleWitness<T>> positive_gain_cycle(const PairGraph<T>& pg, const CostTensor<T>& c) {
  const std::size_t n = pg.size();
  std::vector<detail::Arc<T>> arcs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && pg.gain[i][j].is_finite()) arcs.push_back({i, j, T(-pg.gain[i][j].value())});
  auto sp = detail::bellman_ford<T>(n, arcs, std::vector<ExtReal<T>>(n, ExtReal<T>(T(0))));
  if (!sp.negative_cycle) return std::nullopt;
  auto w = make_cycle(pg, *sp.negative_cycle);
  auto g = cycle_gain(w.tuples, c);
  // In float mode a cycle whose gain is within tolerance is not a violation.
  if (!g.is_finite() || !definitely_less(T(0), g.value())) return std::nullopt;
  w.gain = g.value();
  return w;
}

template <class T>
std::optional<CycleWitness<T>> brute_force_cycle(const PairGraph<T>& pg, const CostTensor<T>& c, std::size_t kmax) {
  const std::size_t n = pg.size();
  kmax = std::min(kmax, n);
  std::vector<std::size_t> subset;
  std::optional<CycleWitness<T>> found;
  // Subsets in lexicographic order; each cycle starts at its smallest node.
  std::function<void(std::size_t)> grow = [&](std::size_t start) {
    if (found) return;
    if (subset.size() >= 2) {
      std::vector<std::size_t> rest(subset.begin() + 1, subset.end());
      do {
        std::vector<std::size_t> cyc{subset.front()};
        cyc.insert(cyc.end(), rest.begin(), rest.end());
        std::vector<Index> tuples;
        for (auto i : cyc) tuples.push_back(pg.nodes[i]);
        auto g = cycle_gain(tuples, c);
        if (g.is_finite() && definitely_less(T(0), g.value())) {
          found = CycleWitness<T>{cyc, tuples, g.value()};
          return;
        }
      } while (std::next_permutation(rest.begin(), rest.end()));
    }
    if (subset.size() == kmax) return;
    for (std::size_t i = start; i < n && !found; ++i) {
      subset.push_back(i);
      grow(i + 1);
      subset.pop_back();
    }
  };
  grow(0);
  return found;
}

}  // namespace

template <class T>
PairGraph<T> PairGraph<T>::build(const SupportSet& g, const CostTensor<T>& c) {
  require_pair(g, c);
  if (auto bad = infinite_diagonal(g, c); !bad) throw PreconditionError<T>(bad);
  PairGraph pg;
  pg.nodes = g.ordered();
  const std::size_t n = pg.nodes.size();
  pg.chain.assign(n, std::vector<ExtReal<T>>(n));
  pg.gain.assign(n, std::vector<ExtReal<T>>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& [xi, yi] = std::pair{pg.nodes[i][0], pg.nodes[i][1]};
    ExtReal<T> diag = c.at(xi, yi);
    for (std::size_t j = 0; j < n; ++j) {
      pg.chain[i][j] = c.at(pg.nodes[j][0], yi) - diag;
      pg.gain[i][j] = diag - c.at(xi, pg.nodes[j][1]);
    }
  }
  return pg;
}

template <class T>
ExtReal<T> cycle_gain(const std::vector<Index>& tuples, const CostTensor<T>& c) {
  ExtReal<T> kept(T(0)), moved(T(0));
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    const auto& next = tuples[(i + 1) % tuples.size()];
    kept += c.at(tuples[i][0], tuples[i][1]);
    moved += c.at(tuples[i][0], next[1]);
  }
  if (!kept.is_finite()) throw std::invalid_argument("cycle through a tuple of infinite cost");
  return kept - moved;
}

template <class T>
Verdict<T> check_ccm2(const SupportSet& g, const CostTensor<T>& c, CcmMethod method, std::size_t kmax) {
  auto pg = PairGraph<T>::build(g, c);
  std::optional<CycleWitness<T>> cycle;
  if (method == CcmMethod::Exact) {
    cycle = positive_gain_cycle(pg, c);
  } else {
    if (kmax < 2) throw std::invalid_argument("kmax must be at least 2");
    cycle = brute_force_cycle(pg, c, kmax);
  }
  if (cycle) return Verdict<T>::no("reassignment around a cycle lowers the cost", *cycle);
  return Verdict<T>::yes();
}

template <class T>
Verdict<T> check_connecting(const SupportSet& g, const CostTensor<T>& c) {
  require_pair(g, c);
  if (auto bad = infinite_diagonal(g, c); !bad) return bad;
  auto nodes = g.ordered();
  const std::size_t n = nodes.size();
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && c.at(nodes[j][0], nodes[i][1]).is_finite()) adj[i].push_back(j);

  std::size_t count = 0;
  auto comp = detail::strong_components(adj, count);
  if (count == 1) return Verdict<T>::yes();

  ComponentWitness w;
  auto from_first = detail::reachable_from(adj, 0);
  auto miss = std::find(from_first.begin(), from_first.end(), false);
  if (miss != from_first.end()) {
    w.from = nodes[0];
    w.to = nodes[static_cast<std::size_t>(miss - from_first.begin())];
  } else {
    for (std::size_t v = 1; v < n; ++v) {
      if (!detail::reachable_from(adj, v)[0]) {
        w.from = nodes[v];
        w.to = nodes[0];
        break;
      }
    }
  }
  std::vector<std::vector<Index>> parts(count);
  for (std::size_t v = 0; v < n; ++v) parts[comp[v]].push_back(nodes[v]);
  std::sort(parts.begin(), parts.end());
  w.components = std::move(parts);
  return Verdict<T>::no("support is not connected by finite-cost chains", w);
}

template <class T>
PathBounds<T> check_path_bounded(const SupportSet& g, const CostTensor<T>& c) {
  auto pg = PairGraph<T>::build(g, c);
  if (auto cycle = positive_gain_cycle(pg, c))
    return {Verdict<T>::no("a positive cycle makes chain sums unbounded", *cycle), {}};

  // Longest chain sums: step s -> t contributes c(x_s, y_s) - c(x_t, y_s).
  const std::size_t n = pg.size();
  std::vector<std::vector<ExtReal<T>>> m(n, std::vector<ExtReal<T>>(n, ExtReal<T>::neg_inf()));
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = 0; t < n; ++t)
      if (s == t) m[s][t] = ExtReal<T>(T(0));
      else if (pg.chain[s][t].is_finite()) m[s][t] = -pg.chain[s][t];
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t s = 0; s < n; ++s) {
      if (m[s][k].is_neg_inf()) continue;
      for (std::size_t t = 0; t < n; ++t) {
        if (m[k][t].is_neg_inf()) continue;
        auto via = m[s][k] + m[k][t];
        if (via > m[s][t]) m[s][t] = via;
      }
    }
  return {Verdict<T>::yes(), std::move(m)};
}

template <class T>
bool replay_cycle(const CycleWitness<T>& w, const CostTensor<T>& c) {
  if (w.tuples.size() < 2 || c.arity() != 2) return false;
  auto g = cycle_gain(w.tuples, c);
  return g.is_finite() && definitely_less(T(0), g.value()) && nearly_equal(g.value(), w.gain);
}

template <class T>
bool replay_components(const ComponentWitness& w, const CostTensor<T>& c) {
  std::vector<Index> nodes;
  for (const auto& part : w.components) nodes.insert(nodes.end(), part.begin(), part.end());
  auto pos = [&](const Index& t) {
    return static_cast<std::size_t>(std::find(nodes.begin(), nodes.end(), t) - nodes.begin());
  };
  std::size_t from = pos(w.from), to = pos(w.to);
  if (from == nodes.size() || to == nodes.size() || from == to) return false;
  std::vector<std::vector<std::size_t>> adj(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t j = 0; j < nodes.size(); ++j)
      if (i != j && c.at(nodes[j][0], nodes[i][1]).is_finite()) adj[i].push_back(j);
  return !detail::reachable_from(adj, from)[to];
}

#define OTCERT_INSTANTIATE(T)                                                                             \
  template struct PairGraph<T>;                                                                           \
  template Verdict<T> check_ccm2<T>(const SupportSet&, const CostTensor<T>&, CcmMethod, std::size_t);     \
  template Verdict<T> check_connecting<T>(const SupportSet&, const CostTensor<T>&);                       \
  template PathBounds<T> check_path_bounded<T>(const SupportSet&, const CostTensor<T>&);                  \
  template bool replay_cycle<T>(const CycleWitness<T>&, const CostTensor<T>&);                            \
  template bool replay_components<T>(const ComponentWitness&, const CostTensor<T>&);                      \
  template ExtReal<T> cycle_gain<T>(const std::vector<Index>&, const CostTensor<T>&);

OTCERT_INSTANTIATE(Rational)
OTCERT_INSTANTIATE(double)

}  // namespace otcert
