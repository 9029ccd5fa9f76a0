#pragma once

// Independent reference computations used by the test suites. Nothing here
// calls into the solvers or certificate code under test.

#include <algorithm>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "otcert/core.hpp"

namespace oracle {

using otcert::CostTensor;
using otcert::Coupling;
using otcert::ExtReal;
using otcert::Index;
using otcert::Measure;
using otcert::Rational;
using otcert::Space;
using otcert::SupportSet;
using Q = Rational;
using EQ = ExtReal<Q>;

inline Space numbered(std::size_t n) { return Space::numbered(n); }

// Canonical a/b (the two-argument gmp constructor does not reduce).
inline Q frac(long a, long b) {
  Q q(a, b);
  q.canonicalize();
  return q;
}

// ---- random instances -------------------------------------------------------

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(gen); }
  long between(long lo, long hi) { return std::uniform_int_distribution<long>(lo, hi)(gen); }
  bool chance(double p) { return std::bernoulli_distribution(p)(gen); }
  template <class V>
  void shuffle(V& v) {
    std::shuffle(v.begin(), v.end(), gen);
  }
};

// Integer weights 1..max (or 0..max when zeros are allowed) normalised to one.
template <class T = Q>
Measure<T> random_measure(Rng& rng, const Space& s, long max = 5, bool allow_zero = false) {
  std::vector<long> raw(s.size());
  long total = 0;
  do {
    total = 0;
    for (auto& r : raw) {
      r = rng.between(allow_zero ? 0 : 1, max);
      total += r;
    }
  } while (total == 0);
  Measure<T> m{s, {}};
  for (auto r : raw) m.weights.push_back(T(r) / T(total));
  return m;
}

template <class T = Q>
CostTensor<T> random_cost(Rng& rng, const std::vector<Space>& spaces, double inf_prob, long lo = 0, long hi = 9) {
  std::size_t count = 1;
  for (const auto& s : spaces) count *= s.size();
  std::vector<ExtReal<T>> e;
  for (std::size_t i = 0; i < count; ++i)
    e.push_back(rng.chance(inf_prob) ? ExtReal<T>::pos_inf() : ExtReal<T>(T(rng.between(lo, hi))));
  return CostTensor<T>(spaces, std::move(e));
}

// ---- two-marginal assignment brute force -----------------------------------

// Minimum of sum (or max) of c(i, sigma(i)) over permutations; nullopt when
// every permutation hits +inf.
template <class T>
std::optional<T> best_permutation(const CostTensor<T>& c, bool bottleneck) {
  const std::size_t n = c.shape()[0];
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::optional<T> best;
  do {
    bool finite = true;
    T acc(0);
    for (std::size_t i = 0; i < n && finite; ++i) {
      auto v = c.at(i, perm[i]);
      if (!v.is_finite()) {
        finite = false;
      } else if (bottleneck) {
        if (i == 0 || acc < v.value()) acc = v.value();
      } else {
        acc += v.value();
      }
    }
    if (finite && (!best || acc < *best)) best = acc;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// ---- transportation polytope vertices --------------------------------------

// North-west corner rule along the given row and column orders. Every such
// plan is a vertex of the transportation polytope.
template <class T>
Coupling<T> northwest_corner(const Measure<T>& mu, const Measure<T>& nu, const std::vector<std::size_t>& rows,
                             const std::vector<std::size_t>& cols) {
  Coupling<T> g{{mu.space, nu.space}, {}};
  std::vector<T> a = mu.weights, b = nu.weights;
  std::size_t r = 0, k = 0;
  while (r < rows.size() && k < cols.size()) {
    T& ra = a[rows[r]];
    T& cb = b[cols[k]];
    T m = ra < cb ? ra : cb;
    if (T(0) < m) g.atoms[{rows[r], cols[k]}] += m;
    ra -= m;
    cb -= m;
    if (ra == T(0))
      ++r;
    else
      ++k;
  }
  return g;
}

template <class T>
Coupling<T> random_vertex(Rng& rng, const Measure<T>& mu, const Measure<T>& nu) {
  std::vector<std::size_t> rows(mu.size()), cols(nu.size());
  std::iota(rows.begin(), rows.end(), 0);
  std::iota(cols.begin(), cols.end(), 0);
  rng.shuffle(rows);
  rng.shuffle(cols);
  return northwest_corner(mu, nu, rows, cols);
}

template <class T>
ExtReal<T> plan_cost(const Coupling<T>& g, const CostTensor<T>& c) {
  ExtReal<T> total(T(0));
  for (const auto& [idx, w] : g.atoms) {
    auto v = c(idx);
    if (!v.is_finite()) return ExtReal<T>::pos_inf();
    total = total + ExtReal<T>(T(w * v.value()));
  }
  return total;
}

// Minimum over all basic feasible solutions of {x >= 0 : A x = b}, by
// enumerating column bases (only for tiny problems).
inline std::optional<Q> vertex_enumeration_min(std::vector<std::vector<Q>> A, std::vector<Q> b,
                                               const std::vector<std::optional<Q>>& cost) {
  const std::size_t n = cost.size();
  // Columns with infinite cost never enter a basis.
  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < n; ++j)
    if (cost[j]) cols.push_back(j);
  // Keep a maximal independent set of rows.
  std::vector<std::vector<Q>> M;
  std::vector<Q> rhs;
  {
    std::vector<std::size_t> keep;
    std::vector<std::vector<Q>> basis;
    for (std::size_t i = 0; i < A.size(); ++i) {
      std::vector<Q> row = A[i];
      row.push_back(b[i]);
      for (const auto& br : basis) {
        std::size_t p = 0;
        while (br[p] == 0) ++p;
        if (row[p] != 0) {
          Q f = row[p] / br[p];
          for (std::size_t j = 0; j < row.size(); ++j) row[j] -= f * br[j];
        }
      }
      bool zero = true;
      for (std::size_t j = 0; j + 1 < row.size(); ++j)
        if (row[j] != 0) zero = false;
      if (zero) {
        if (row.back() != 0) return std::nullopt;
        continue;
      }
      basis.push_back(row);
      keep.push_back(i);
    }
    for (auto i : keep) {
      M.push_back(A[i]);
      rhs.push_back(b[i]);
    }
  }
  const std::size_t r = M.size();
  std::optional<Q> best;
  std::vector<bool> pick(cols.size(), false);
  std::fill(pick.begin(), pick.begin() + std::min(r, cols.size()), true);
  if (r > cols.size()) return std::nullopt;
  do {
    std::vector<std::size_t> basis;
    for (std::size_t j = 0; j < cols.size(); ++j)
      if (pick[j]) basis.push_back(cols[j]);
    // Solve M_B x_B = rhs by Gauss-Jordan.
    std::vector<std::vector<Q>> aug(r, std::vector<Q>(r + 1));
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t k = 0; k < r; ++k) aug[i][k] = M[i][basis[k]];
      aug[i][r] = rhs[i];
    }
    bool singular = false;
    for (std::size_t k = 0; k < r && !singular; ++k) {
      std::size_t piv = k;
      while (piv < r && aug[piv][k] == 0) ++piv;
      if (piv == r) {
        singular = true;
        break;
      }
      std::swap(aug[piv], aug[k]);
      for (std::size_t i = 0; i < r; ++i) {
        if (i == k || aug[i][k] == 0) continue;
        Q f = aug[i][k] / aug[k][k];
        for (std::size_t j = k; j <= r; ++j) aug[i][j] -= f * aug[k][j];
      }
    }
    if (singular) continue;
    bool feasible = true;
    Q value(0);
    for (std::size_t k = 0; k < r; ++k) {
      Q x = aug[k][r] / aug[k][k];
      if (x < 0) feasible = false;
      value += x * *cost[basis[k]];
    }
    if (feasible && (!best || value < *best)) best = value;
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return best;
}

// Optimal value of the multi-marginal problem via vertex enumeration.
inline std::optional<Q> multi_vertex_oracle(const std::vector<Measure<Q>>& mus, const CostTensor<Q>& c) {
  const auto& shape = c.shape();
  std::vector<Index> tuples;
  otcert::for_each_index(shape, [&](const Index& i) { tuples.push_back(i); });
  std::vector<std::vector<Q>> A;
  std::vector<Q> b;
  for (std::size_t d = 0; d < shape.size(); ++d)
    for (std::size_t v = 0; v < shape[d]; ++v) {
      std::vector<Q> row(tuples.size(), Q(0));
      for (std::size_t t = 0; t < tuples.size(); ++t)
        if (tuples[t][d] == v) row[t] = 1;
      A.push_back(row);
      b.push_back(mus[d].weights[v]);
    }
  std::vector<std::optional<Q>> cost;
  for (const auto& t : tuples) {
    auto v = c(t);
    cost.push_back(v.is_finite() ? std::optional<Q>(v.value()) : std::nullopt);
  }
  return vertex_enumeration_min(A, b, cost);
}

// ---- feasibility of a finite-cost plan (max flow) ----------------------------

// Edmonds-Karp on source -> X -> Y -> sink with arcs where c is finite.
template <class T>
bool finite_plan_exists(const Measure<T>& mu, const Measure<T>& nu, const CostTensor<T>& c) {
  const std::size_t nx = mu.size(), ny = nu.size();
  const std::size_t n = nx + ny + 2, s = nx + ny, t = s + 1;
  const T big(2);
  std::vector<std::vector<T>> cap(n, std::vector<T>(n, T(0)));
  for (std::size_t x = 0; x < nx; ++x) cap[s][x] = mu.weights[x];
  for (std::size_t y = 0; y < ny; ++y) cap[nx + y][t] = nu.weights[y];
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < ny; ++y)
      if (c.at(x, y).is_finite()) cap[x][nx + y] = big;
  T flow(0);
  for (;;) {
    std::vector<std::size_t> prev(n, n);
    prev[s] = s;
    std::vector<std::size_t> queue{s};
    for (std::size_t h = 0; h < queue.size() && prev[t] == n; ++h) {
      std::size_t u = queue[h];
      for (std::size_t v = 0; v < n; ++v)
        if (prev[v] == n && T(0) < cap[u][v]) {
          prev[v] = u;
          queue.push_back(v);
        }
    }
    if (prev[t] == n) break;
    T push = big;
    for (std::size_t v = t; v != s; v = prev[v])
      if (cap[prev[v]][v] < push) push = cap[prev[v]][v];
    for (std::size_t v = t; v != s; v = prev[v]) {
      cap[prev[v]][v] -= push;
      cap[v][prev[v]] += push;
    }
    flow += push;
  }
  return flow == T(1);
}

// ---- chain and path computations on a two-marginal support --------------------

// gain[i][j] = c(x_i, y_i) - c(x_i, y_j), -inf when c(x_i, y_j) = +inf.
template <class T>
std::vector<std::vector<ExtReal<T>>> gain_matrix(const std::vector<Index>& nodes, const CostTensor<T>& c) {
  const std::size_t n = nodes.size();
  std::vector<std::vector<ExtReal<T>>> g(n, std::vector<ExtReal<T>>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      auto cross = c.at(nodes[i][0], nodes[j][1]);
      g[i][j] = cross.is_finite() ? ExtReal<T>(T(c(nodes[i]).value() - cross.value())) : ExtReal<T>::neg_inf();
    }
  return g;
}

// True when the matrix (read as arc weights i -> j) has a cycle with positive
// total: after n rounds of max-plus relaxation from all-zero labels, another
// round still improves some label.
template <class T>
bool has_positive_cycle(const std::vector<std::vector<ExtReal<T>>>& w) {
  const std::size_t n = w.size();
  std::vector<ExtReal<T>> d(n, ExtReal<T>(T(0)));
  for (std::size_t round = 0; round <= n; ++round) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j || !w[i][j].is_finite()) continue;
        auto cand = d[i] + w[i][j];
        if (d[j] < cand) {
          d[j] = cand;
          changed = true;
        }
      }
    if (!changed) return false;
  }
  return true;
}

// Largest total over simple paths i -> j (depth-first enumeration); -inf when
// none exists. Diagonal entries are 0.
template <class T>
std::vector<std::vector<ExtReal<T>>> simple_path_max(const std::vector<std::vector<ExtReal<T>>>& w) {
  const std::size_t n = w.size();
  std::vector<std::vector<ExtReal<T>>> best(n, std::vector<ExtReal<T>>(n, ExtReal<T>::neg_inf()));
  std::vector<bool> on(n, false);
  std::function<void(std::size_t, std::size_t, T)> walk = [&](std::size_t start, std::size_t at, T sum) {
    if (best[start][at] < ExtReal<T>(sum)) best[start][at] = ExtReal<T>(sum);
    on[at] = true;
    for (std::size_t next = 0; next < n; ++next)
      if (!on[next] && w[at][next].is_finite()) walk(start, next, T(sum + w[at][next].value()));
    on[at] = false;
  };
  for (std::size_t i = 0; i < n; ++i) walk(i, i, T(0));
  return best;
}

// Chain formula: minimum over chains base = node_0, node_1, ..., node_k of
// sum_{i<k} [c(x_{i+1}, y_i) - c(x_i, y_i)] + c(x, y_k) - c(x_k, y_k), with
// chains of at most |nodes| steps. Entries blocked everywhere become -inf.
template <class T>
std::vector<ExtReal<T>> chain_potential(const std::vector<Index>& nodes, const CostTensor<T>& c, std::size_t base) {
  const std::size_t n = nodes.size();
  std::vector<ExtReal<T>> dist(n, ExtReal<T>::pos_inf());
  dist[base] = ExtReal<T>(T(0));
  for (std::size_t round = 0; round < n; ++round) {
    auto next = dist;
    for (std::size_t i = 0; i < n; ++i) {
      if (!dist[i].is_finite()) continue;
      for (std::size_t j = 0; j < n; ++j) {
        auto step = c.at(nodes[j][0], nodes[i][1]);
        if (!step.is_finite()) continue;
        ExtReal<T> cand(T(dist[i].value() + step.value() - c(nodes[i]).value()));
        if (cand < next[j]) next[j] = cand;
      }
    }
    dist = next;
  }
  const std::size_t nx = c.shape()[0];
  std::vector<ExtReal<T>> phi(nx, ExtReal<T>::pos_inf());
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t j = 0; j < n; ++j) {
      auto step = c.at(x, nodes[j][1]);
      if (!step.is_finite() || !dist[j].is_finite()) continue;
      ExtReal<T> cand(T(dist[j].value() + step.value() - c(nodes[j]).value()));
      if (cand < phi[x]) phi[x] = cand;
    }
    if (phi[x].is_pos_inf()) phi[x] = ExtReal<T>::neg_inf();
  }
  return phi;
}

// ---- multi-marginal permutation scan ------------------------------------------

// Brute-force check over all subsets of G of size <= kmax and all tuples of
// permutations on coordinates 2..N; bottleneck compares maxima.
template <class T>
bool monotone_by_permutations(const std::vector<Index>& g, const CostTensor<T>& c, std::size_t kmax, bool bottleneck) {
  const std::size_t n = g.size(), N = c.arity();
  for (std::size_t k = 2; k <= std::min(kmax, n); ++k) {
    std::vector<bool> pick(n, false);
    std::fill(pick.begin(), pick.begin() + k, true);
    do {
      std::vector<Index> pts;
      for (std::size_t i = 0; i < n; ++i)
        if (pick[i]) pts.push_back(g[i]);
      auto agg = [&](const std::vector<ExtReal<T>>& v) {
        ExtReal<T> acc = bottleneck ? ExtReal<T>::neg_inf() : ExtReal<T>(T(0));
        for (const auto& x : v) acc = bottleneck ? (acc < x ? x : acc) : acc + x;
        return acc;
      };
      std::vector<ExtReal<T>> base;
      for (const auto& p : pts) base.push_back(c(p));
      const auto original = agg(base);
      std::vector<std::vector<std::size_t>> perms(N - 1, std::vector<std::size_t>(k));
      for (auto& p : perms) std::iota(p.begin(), p.end(), 0);
      std::function<bool(std::size_t)> rec = [&](std::size_t d) -> bool {
        if (d == N - 1) {
          std::vector<ExtReal<T>> moved;
          for (std::size_t i = 0; i < k; ++i) {
            Index idx{pts[i][0]};
            for (std::size_t e = 1; e < N; ++e) idx.push_back(pts[perms[e - 1][i]][e]);
            moved.push_back(c(idx));
          }
          return !(agg(moved) < original);
        }
        std::iota(perms[d].begin(), perms[d].end(), 0);
        do {
          if (!rec(d + 1)) return false;
        } while (std::next_permutation(perms[d].begin(), perms[d].end()));
        return true;
      };
      if (!rec(0)) return false;
    } while (std::prev_permutation(pick.begin(), pick.end()));
  }
  return true;
}

}  // namespace oracle

#ifdef DOCTEST_LIBRARY_INCLUDED
namespace doctest {
template <class T>
struct StringMaker<otcert::ExtReal<T>> {
  static String convert(const otcert::ExtReal<T>& v) { return otcert::format_ext(v).c_str(); }
};
}  // namespace doctest
#endif
