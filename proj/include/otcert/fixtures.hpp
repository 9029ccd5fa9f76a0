#pragma once

#include <functional>
#include <vector>

#include "otcert/core.hpp"

namespace otcert {

/// Three-marginal instance on {1, ..., 2K+1} where a cyclically monotone plan
/// is beaten by another plan. Costs are symmetric under permuting the three
/// coordinates: c(1,1,1) = 1, c(a,a,a+1) = f(a), and the boundary atom
/// c(2K+1, 2K+1, 2K+1) = 0 absorbs the truncated tail. Everything else is +inf.
template <class T>
struct ThreePlanFixture {
  unsigned depth = 0;                // K
  std::vector<T> f;                  // f[a-1] = f(a), a = 1..2K
  std::vector<Measure<T>> marginals;  // three equal measures
  CostTensor<T> cost;
  Coupling<T> monotone_plan;  // gamma_K
  Coupling<T> better_plan;    // gamma-bar_K
  T monotone_cost{};          // 3 sum_k 4^-k f(2k-1)
  T better_cost{};            // 1/2 + 3/2 sum_k 4^-k f(2k)
  T tail_mass{};              // 4^-K, mass of the boundary point in each marginal
  T condition_sum{};          // sum_{k<=K} 4^-k (f(2k-1) - f(2k))
};

/// Default f: f(1) = 1, f(a) = 2^-a for a >= 2.
template <class T>
T default_petrache_f(unsigned a);

/// Validates f (nonincreasing, values in (0, 1], truncated condition sum
/// above 1/6) and builds the fixture. Throws std::invalid_argument.
template <class T>
ThreePlanFixture<T> gen_petrache(unsigned depth, const std::function<T(unsigned)>& f = default_petrache_f<T>);

/// Grid {0, 1/n, ..., (n-1)/n} with cost 1 on the diagonal, 2 where
/// x = y + shift (mod 1) and +inf elsewhere; the support is the diagonal.
template <class T>
struct GridFixture {
  CostTensor<T> cost;
  SupportSet support;
  std::vector<Measure<T>> marginals;  // uniform
};

/// Throws if shift * n is within 1e-12 of an integer (shift on the grid).
template <class T>
GridFixture<T> gen_appendix_a(std::size_t n, double shift);

/// Orbit points p_k = k * step (mod 1), k = 0..m, with cost 1 on the
/// diagonal, 2 on the shift graph p_k -> p_{k+1} and +inf elsewhere. The
/// support is the open orbit fragment {(p_k, p_{k+1})}.
template <class T>
struct OrbitFixture {
  CostTensor<T> cost;
  SupportSet support;
  std::vector<Measure<T>> marginals;  // uniform on all orbit points
};

template <class T>
OrbitFixture<T> gen_shift_orbit(std::size_t m, double step);

}  // namespace otcert
