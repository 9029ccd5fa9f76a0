#include "otcert/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace otcert {

namespace {

template <class T>
T pow2_neg(unsigned e) {
  T out(1);
  for (unsigned i = 0; i < e; ++i) out /= T(2);
  return out;
}

// The three coordinate arrangements of (a, a, b).
std::vector<Index> arrangements(std::size_t a, std::size_t b) {
  return {{a, a, b}, {a, b, a}, {b, a, a}};
}

}  // namespace

template <class T>
T default_petrache_f(unsigned a) {
  return a == 1 ? T(1) : pow2_neg<T>(a);
}

template <class T>
ThreePlanFixture<T> gen_petrache(unsigned depth, const std::function<T(unsigned)>& f) {
  if (depth < 2) throw std::invalid_argument("truncation depth must be at least 2");
  ThreePlanFixture<T> fx;
  fx.depth = depth;
  const unsigned top = 2 * depth + 1;
  for (unsigned a = 1; a < top; ++a) {
    T v = f(a);
    if (!(T(0) < v) || T(1) < v) throw std::invalid_argument("f(" + std::to_string(a) + ") must lie in (0, 1]");
    if (a > 1 && fx.f.back() < v) throw std::invalid_argument("f must be nonincreasing");
    fx.f.push_back(v);
  }
  auto fa = [&](unsigned a) { return fx.f[a - 1]; };
  T quarter(1);
  for (unsigned k = 1; k <= depth; ++k) {
    quarter /= T(4);
    fx.condition_sum += quarter * (fa(2 * k - 1) - fa(2 * k));
    fx.monotone_cost += T(3) * quarter * fa(2 * k - 1);
    fx.better_cost += T(3) / T(2) * quarter * fa(2 * k);
  }
  fx.better_cost += T(1) / T(2);
  fx.tail_mass = quarter;
  // Remaining terms are nonnegative for nonincreasing f, so the partial sum is a lower bound.
  if (!(T(1) / T(6) < fx.condition_sum))
    throw std::invalid_argument("f violates the summability condition: partial sum " +
                                NumberTraits<T>::format(fx.condition_sum) + " <= 1/6");

  Space s = Space::numbered(top);
  std::vector<Space> spaces(3, s);
  std::vector<ExtReal<T>> entries(static_cast<std::size_t>(top) * top * top, ExtReal<T>::pos_inf());
  auto put = [&](const Index& idx, const T& v) { entries[(idx[0] * top + idx[1]) * top + idx[2]] = ExtReal<T>(v); };
  put({0, 0, 0}, T(1));
  for (unsigned a = 1; a < top; ++a)
    for (const auto& idx : arrangements(a - 1, a)) put(idx, fa(a));
  put({top - 1, top - 1, top - 1}, T(0));
  fx.cost = CostTensor<T>(spaces, std::move(entries));

  Measure<T> mu{s, std::vector<T>(top)};
  for (unsigned j = 1; j < top; ++j) mu.weights[j - 1] = pow2_neg<T>(j);
  mu.weights[top - 1] = fx.tail_mass;
  fx.marginals.assign(3, mu);

  fx.monotone_plan.spaces = spaces;
  fx.better_plan.spaces = spaces;
  T w(1);
  for (unsigned k = 1; k <= depth; ++k) {
    w /= T(4);
    for (const auto& idx : arrangements(2 * k - 2, 2 * k - 1)) fx.monotone_plan.add(idx, w);
    for (const auto& idx : arrangements(2 * k - 1, 2 * k)) fx.better_plan.add(idx, w / T(2));
  }
  fx.monotone_plan.add({top - 1, top - 1, top - 1}, fx.tail_mass);
  fx.better_plan.add({0, 0, 0}, T(1) / T(2));
  fx.better_plan.add({top - 1, top - 1, top - 1}, fx.tail_mass / T(2));
  return fx;
}

template <class T>
GridFixture<T> gen_appendix_a(std::size_t n, double shift) {
  if (n == 0) throw std::invalid_argument("grid size must be positive");
  double scaled = shift * static_cast<double>(n);
  if (std::fabs(scaled - std::round(scaled)) < 1e-12) throw std::invalid_argument("shift lies on the grid");
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) labels.push_back(i == 0 ? "0" : std::to_string(i) + "/" + std::to_string(n));
  Space s(labels);
  auto on_shift = [&](std::size_t x, std::size_t y) {
    double d = (static_cast<double>(x) - static_cast<double>(y)) / static_cast<double>(n) - shift;
    return std::fabs(d - std::round(d)) < 1e-12;
  };
  GridFixture<T> fx{CostTensor<T>::tabulate({s, s},
                                            [&](std::span<const std::size_t> idx) {
                                              if (idx[0] == idx[1]) return ExtReal<T>(T(1));
                                              if (on_shift(idx[0], idx[1])) return ExtReal<T>(T(2));
                                              return ExtReal<T>::pos_inf();
                                            }),
                    SupportSet{{s, s}, {}},
                    {uniform_measure<T>(s), uniform_measure<T>(s)}};
  for (std::size_t i = 0; i < n; ++i) fx.support.tuples.insert({i, i});
  return fx;
}

template <class T>
OrbitFixture<T> gen_shift_orbit(std::size_t m, double step) {
  if (m == 0) throw std::invalid_argument("orbit fragment needs at least one step");
  std::vector<std::string> labels;
  for (std::size_t k = 0; k <= m; ++k) {
    double p = std::fmod(static_cast<double>(k) * step, 1.0);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12f", p);
    labels.emplace_back(buf);
  }
  Space s(labels);
  OrbitFixture<T> fx{CostTensor<T>::tabulate({s, s},
                                             [](std::span<const std::size_t> idx) {
                                               if (idx[0] == idx[1]) return ExtReal<T>(T(1));
                                               if (idx[1] == idx[0] + 1) return ExtReal<T>(T(2));
                                               return ExtReal<T>::pos_inf();
                                             }),
                     SupportSet{{s, s}, {}},
                     {uniform_measure<T>(s), uniform_measure<T>(s)}};
  for (std::size_t k = 0; k < m; ++k) fx.support.tuples.insert({k, k + 1});
  return fx;
}

#define OTCERT_INSTANTIATE(T)                                                                      \
  template T default_petrache_f<T>(unsigned);                                                      \
  template ThreePlanFixture<T> gen_petrache<T>(unsigned, const std::function<T(unsigned)>&);      \
  template GridFixture<T> gen_appendix_a<T>(std::size_t, double);                                  \
  template OrbitFixture<T> gen_shift_orbit<T>(std::size_t, double);

OTCERT_INSTANTIATE(Rational)
OTCERT_INSTANTIATE(double)

}  // namespace otcert
