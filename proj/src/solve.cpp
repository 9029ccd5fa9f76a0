#include "otcert/solve.hpp"

#include <algorithm>
#include <cmath>

#include "graph.hpp"
#include "simplex.hpp"

namespace otcert {

const char* to_string(SolveStatus s) { return s == SolveStatus::Optimal ? "optimal" : "no-finite-plan"; }

template <class T>
ExtReal<T> SplittingTuple<T>::sum_at(const Index& idx) const {
  if (idx.size() != parts.size()) throw std::invalid_argument("tuple arity does not match splitting tuple");
  ExtReal<T> s(T(0));
  for (std::size_t d = 0; d < parts.size(); ++d) {
    const auto& v = parts[d][idx[d]];
    if (v.is_neg_inf()) return ExtReal<T>::neg_inf();
    s += v;
  }
  return s;
}

template <class T>
Coupling<T> product_coupling(const std::vector<Measure<T>>& mus) {
  Coupling<T> g;
  std::vector<std::size_t> shape;
  for (const auto& m : mus) {
    g.spaces.push_back(m.space);
    shape.push_back(m.size());
  }
  for_each_index(shape, [&](const Index& idx) {
    T w(1);
    for (std::size_t d = 0; d < idx.size(); ++d) w *= mus[d].weights[idx[d]];
    if (w != T(0)) g.atoms.emplace(idx, w);
  });
  return g;
}

namespace {

template <class T>
void check_inputs(const std::vector<Measure<T>>& mus, const CostTensor<T>& c) {
  if (mus.size() < 2) throw std::invalid_argument("at least two marginals are required");
  if (mus.size() != c.arity()) throw std::invalid_argument("number of marginals does not match the cost arity");
  for (std::size_t d = 0; d < mus.size(); ++d) {
    if (mus[d].size() != c.shape()[d]) throw std::invalid_argument("marginal " + std::to_string(d + 1) + " has the wrong size");
    if (auto v = validate_measure(mus[d]); !v)
      throw std::invalid_argument("marginal " + std::to_string(d + 1) + ": " + v.reason);
  }
}

template <class T>
SolveResult<T> no_finite_plan(const std::vector<Measure<T>>& mus, const CostTensor<T>& c) {
  SolveResult<T> r;
  r.plan = product_coupling(mus);
  r.value = integral_cost(r.plan, c);
  r.status = SolveStatus::NoFinitePlan;
  return r;
}

// Residual network for the transport problem.
template <class T>
class TransportNetwork {
 public:
  struct Edge {
    std::size_t to;
    std::size_t rev;
    T cap;
    bool unbounded;
    T cost;
  };

  explicit TransportNetwork(std::size_t n) : adj_(n) {}

  void add(std::size_t u, std::size_t v, const T& cap, bool unbounded, const T& cost) {
    adj_[u].push_back({v, adj_[v].size(), cap, unbounded, cost});
    adj_[v].push_back({u, adj_[u].size() - 1, T(0), false, T(-cost)});
  }

  static bool open(const Edge& e) { return e.unbounded || definitely_less(T(0), e.cap); }

  // One augmentation along a cheapest source-sink path; returns the amount.
  std::optional<T> augment(std::size_t s, std::size_t t) {
    const std::size_t n = adj_.size();
    std::vector<ExtReal<T>> dist(n, ExtReal<T>::pos_inf());
    std::vector<std::pair<std::size_t, std::size_t>> pred(n, {n, 0});
    dist[s] = ExtReal<T>(T(0));
    for (std::size_t pass = 0; pass < n; ++pass) {
      bool changed = false;
      for (std::size_t u = 0; u < n; ++u) {
        if (!dist[u].is_finite()) continue;
        for (std::size_t k = 0; k < adj_[u].size(); ++k) {
          const auto& e = adj_[u][k];
          if (!open(e)) continue;
          T cand = dist[u].value() + e.cost;
          if (!dist[e.to].is_finite() || definitely_less(cand, dist[e.to].value())) {
            dist[e.to] = ExtReal<T>(cand);
            pred[e.to] = {u, k};
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    if (!dist[t].is_finite()) return std::nullopt;
    std::optional<T> amount;
    for (std::size_t v = t; v != s; v = pred[v].first) {
      const auto& e = adj_[pred[v].first][pred[v].second];
      if (!e.unbounded && (!amount || e.cap < *amount)) amount = e.cap;
    }
    for (std::size_t v = t; v != s; v = pred[v].first) {
      auto& e = adj_[pred[v].first][pred[v].second];
      if (!e.unbounded) e.cap -= *amount;
      adj_[e.to][e.rev].cap += *amount;
    }
    return amount;
  }

  const std::vector<Edge>& edges(std::size_t u) const { return adj_[u]; }

 private:
  std::vector<std::vector<Edge>> adj_;
};

}  // namespace

template <class T>
SolveResult<T> solve_ot2(const Measure<T>& mu, const Measure<T>& nu, const CostTensor<T>& c) {
  check_inputs<T>({mu, nu}, c);
  const std::size_t nx = mu.size(), ny = nu.size();
  const std::size_t source = 0, sink = nx + ny + 1;
  TransportNetwork<T> net(nx + ny + 2);
  for (std::size_t x = 0; x < nx; ++x) net.add(source, 1 + x, mu.weights[x], false, T(0));
  for (std::size_t y = 0; y < ny; ++y) net.add(1 + nx + y, sink, nu.weights[y], false, T(0));
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < ny; ++y)
      if (auto v = c.at(x, y); v.is_finite()) net.add(1 + x, 1 + nx + y, T(0), true, v.value());

  T shipped(0);
  while (definitely_less(shipped, T(1))) {
    auto amount = net.augment(source, sink);
    if (!amount) break;
    shipped += *amount;
  }
  if (definitely_less(shipped, T(1))) return no_finite_plan<T>({mu, nu}, c);

  SolveResult<T> r;
  r.plan.spaces = {mu.space, nu.space};
  std::vector<detail::Arc<T>> residual;
  for (std::size_t x = 0; x < nx; ++x)
    for (const auto& e : net.edges(1 + x)) {
      if (e.to <= nx || e.to == sink) continue;
      const std::size_t y = e.to - 1 - nx;
      const T& flow = net.edges(e.to)[e.rev].cap;
      residual.push_back({x, nx + y, e.cost});
      if (definitely_less(T(0), flow)) {
        r.plan.add({x, y}, flow);
        residual.push_back({nx + y, x, T(-e.cost)});
      }
    }
  r.value = integral_cost(r.plan, c);

  auto sp = detail::bellman_ford<T>(nx + ny, residual, std::vector<ExtReal<T>>(nx + ny, ExtReal<T>(T(0))));
  if (sp.negative_cycle) throw std::logic_error("residual network of an optimal flow has a negative cycle");
  SplittingTuple<T> dual;
  dual.parts.push_back({mu.space, std::vector<ExtReal<T>>(nx), std::nullopt});
  dual.parts.push_back({nu.space, std::vector<ExtReal<T>>(ny), std::nullopt});
  for (std::size_t x = 0; x < nx; ++x) dual.parts[0].values[x] = -sp.dist[x];
  for (std::size_t y = 0; y < ny; ++y) dual.parts[1].values[y] = sp.dist[nx + y];
  r.dual = std::move(dual);
  return r;
}

namespace {

template <class T>
struct MultiLp {
  detail::LinearProgram<T> lp;
  std::vector<Index> tuples;  // one per column
  std::vector<std::size_t> offset;
};

template <class T, class Keep>
MultiLp<T> build_multi(const std::vector<Measure<T>>& mus, const CostTensor<T>& c, Keep keep) {
  MultiLp<T> m;
  std::size_t rows = 0;
  long double product = 1;
  for (const auto& mu : mus) {
    m.offset.push_back(rows);
    rows += mu.size();
    product *= static_cast<long double>(mu.size());
  }
  if (product > static_cast<long double>(kMultiProductCap))
    throw BudgetExceeded("product of marginal sizes exceeds the linear-programming cap",
                         static_cast<double>(product), static_cast<double>(kMultiProductCap));
  m.lp.rows = rows;
  for (std::size_t d = 0; d < mus.size(); ++d)
    for (const auto& w : mus[d].weights) m.lp.rhs.push_back(w);
  for_each_index(c.shape(), [&](const Index& idx) {
    auto v = c(idx);
    if (!v.is_finite() || !keep(v.value())) return;
    std::vector<std::pair<std::size_t, T>> col;
    for (std::size_t d = 0; d < idx.size(); ++d) col.emplace_back(m.offset[d] + idx[d], T(1));
    m.lp.columns.push_back(std::move(col));
    m.lp.cost.push_back(v.value());
    m.tuples.push_back(idx);
  });
  return m;
}

template <class T>
Coupling<T> plan_from(const std::vector<Measure<T>>& mus, const MultiLp<T>& m, const std::vector<T>& x) {
  Coupling<T> g;
  for (const auto& mu : mus) g.spaces.push_back(mu.space);
  for (std::size_t j = 0; j < x.size(); ++j)
    if (definitely_less(T(0), x[j])) g.add(m.tuples[j], x[j]);
  return g;
}

template <class T, class Keep>
std::optional<SolveResult<T>> solve_restricted(const std::vector<Measure<T>>& mus, const CostTensor<T>& c, Keep keep) {
  auto m = build_multi(mus, c, keep);
  if (m.tuples.empty()) return std::nullopt;
  auto sol = detail::solve_lp(m.lp);
  if (sol.status != detail::LpStatus::Optimal) return std::nullopt;
  SolveResult<T> r;
  r.plan = plan_from(mus, m, sol.x);
  r.value = ExtReal<T>(sol.objective);
  SplittingTuple<T> dual;
  for (std::size_t d = 0; d < mus.size(); ++d) {
    PotentialVector<T> part{mus[d].space, {}, std::nullopt};
    for (std::size_t i = 0; i < mus[d].size(); ++i) part.values.emplace_back(sol.dual[m.offset[d] + i]);
    dual.parts.push_back(std::move(part));
  }
  r.dual = std::move(dual);
  return r;
}

template <class T>
bool feasible_at(const std::vector<Measure<T>>& mus, const CostTensor<T>& c, const T& level) {
  auto m = build_multi(mus, c, [&](const T& v) { return !(level < v); });
  if (m.tuples.empty()) return false;
  return detail::solve_lp(m.lp, true).status == detail::LpStatus::Optimal;
}

template <class T>
T power(const T& base, unsigned p) {
  T out(1), b = base;
  for (unsigned e = p; e > 0; e >>= 1) {
    if (e & 1U) out *= b;
    if (e > 1) b *= b;
  }
  return out;
}

}  // namespace

template <class T>
SolveResult<T> solve_multi(const std::vector<Measure<T>>& mus, const CostTensor<T>& c) {
  check_inputs(mus, c);
  auto r = solve_restricted(mus, c, [](const T&) { return true; });
  if (!r) return no_finite_plan(mus, c);
  return *r;
}

template <class T>
SolveResult<T> solve_linf(const std::vector<Measure<T>>& mus, const CostTensor<T>& c) {
  check_inputs(mus, c);
  std::vector<T> levels;
  for (const auto& v : c.entries())
    if (v.is_finite()) levels.push_back(v.value());
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  if (levels.empty() || !feasible_at(mus, c, levels.back())) return no_finite_plan(mus, c);

  std::size_t lo = 0, hi = levels.size() - 1;  // levels[hi] is feasible
  while (lo < hi) {
    std::size_t mid = lo + (hi - lo) / 2;
    if (feasible_at(mus, c, levels[mid])) hi = mid;
    else lo = mid + 1;
  }
  const T& level = levels[hi];
  auto r = solve_restricted(mus, c, [&](const T& v) { return !(level < v); });
  if (!r) throw std::logic_error("feasible bottleneck level without an optimal plan");
  r->value = ExtReal<T>(level);
  r->dual.reset();
  return *r;
}

template <class T>
T pth_root_cost(const Coupling<T>& g, const CostTensor<T>& c, unsigned p) {
  auto top = linf_cost(g, c);
  if (!top.is_finite()) throw std::invalid_argument("p-cost of a plan with an infinite atom");
  const T& m = top.value();
  if (!(T(0) < m)) return T(0);
  T ratio(0);
  for (const auto& [idx, w] : g.atoms) ratio += w * power(T(c(idx).value() / m), p);
  if (p == 1) return m * ratio;
  double root = std::pow(NumberTraits<T>::to_double(ratio), 1.0 / static_cast<double>(p));
  return m * NumberTraits<T>::from_double(root);
}

template <class T>
SolveResult<T> solve_p(const std::vector<Measure<T>>& mus, const CostTensor<T>& c, unsigned p) {
  if (p == 0) throw std::invalid_argument("p must be a positive integer");
  check_inputs(mus, c);
  for (const auto& v : c.entries())
    if (v.is_finite() && v.value() < T(0)) throw std::invalid_argument("p-costs need nonnegative entries");
  // Costs are scaled by their largest finite entry before taking powers so
  // float mode stays in range; the minimiser is unchanged.
  T scale(0);
  for (const auto& v : c.entries())
    if (v.is_finite() && scale < v.value()) scale = v.value();
  if (scale == T(0)) scale = T(1);
  auto powered = CostTensor<T>::tabulate(c.spaces(), [&](std::span<const std::size_t> idx) {
    auto v = c(idx);
    return v.is_finite() ? ExtReal<T>(power(T(v.value() / scale), p)) : v;
  });
  auto inner = solve_multi(mus, powered);
  if (inner.status != SolveStatus::Optimal) return no_finite_plan(mus, c);
  SolveResult<T> r;
  r.plan = std::move(inner.plan);
  T integral(0);
  for (const auto& [idx, w] : r.plan.atoms) integral += w * power(c(idx).value(), p);
  r.power_integral = integral;
  r.value = ExtReal<T>(pth_root_cost(r.plan, c, p));
  return r;
}

#define OTCERT_INSTANTIATE(T)                                                                       \
  template struct SplittingTuple<T>;                                                                \
  template Coupling<T> product_coupling<T>(const std::vector<Measure<T>>&);                         \
  template SolveResult<T> solve_ot2<T>(const Measure<T>&, const Measure<T>&, const CostTensor<T>&); \
  template SolveResult<T> solve_multi<T>(const std::vector<Measure<T>>&, const CostTensor<T>&);     \
  template SolveResult<T> solve_linf<T>(const std::vector<Measure<T>>&, const CostTensor<T>&);      \
  template SolveResult<T> solve_p<T>(const std::vector<Measure<T>>&, const CostTensor<T>&, unsigned); \
  template T pth_root_cost<T>(const Coupling<T>&, const CostTensor<T>&, unsigned);

OTCERT_INSTANTIATE(Rational)
OTCERT_INSTANTIATE(double)

}  // namespace otcert
