#pragma once

#include <optional>
#include <vector>

#include "otcert/core.hpp"
#include "otcert/potential.hpp"

namespace otcert {

/// One potential per marginal, summing to at most the cost everywhere.
template <class T>
struct SplittingTuple {
  std::vector<PotentialVector<T>> parts;
  std::optional<Index> base;

  std::size_t arity() const { return parts.size(); }
  /// Sum of the parts at a tuple (-inf if any part is -inf).
  ExtReal<T> sum_at(const Index& idx) const;
};

enum class SolveStatus { Optimal, NoFinitePlan };

const char* to_string(SolveStatus s);

template <class T>
struct SolveResult {
  Coupling<T> plan;
  ExtReal<T> value;
  SolveStatus status = SolveStatus::Optimal;
  std::optional<SplittingTuple<T>> dual;
  /// solve_p only: the exact optimum of the integral of c^p.
  std::optional<T> power_integral;
};

/// Product coupling of the given measures.
template <class T>
Coupling<T> product_coupling(const std::vector<Measure<T>>& mus);

/// Two-marginal optimum via successive shortest paths on the transport
/// network. +inf arcs are excluded; when no finite plan exists the product
/// plan is returned with value +inf. Duals (phi, psi) have zero gap.
template <class T>
SolveResult<T> solve_ot2(const Measure<T>& mu, const Measure<T>& nu, const CostTensor<T>& c);

inline constexpr std::size_t kMultiProductCap = 1'000'000;

/// Multi-marginal optimum by the simplex method over finite-cost tuples.
/// The dual is the row-dual vector split per marginal.
template <class T>
SolveResult<T> solve_multi(const std::vector<Measure<T>>& mus, const CostTensor<T>& c);

/// Bottleneck optimum: the smallest finite cost level admitting a plan.
/// Among plans at that level the one with least integral cost is returned.
template <class T>
SolveResult<T> solve_linf(const std::vector<Measure<T>>& mus, const CostTensor<T>& c);

/// Minimises the integral of c^p and reports its p-th root.
template <class T>
SolveResult<T> solve_p(const std::vector<Measure<T>>& mus, const CostTensor<T>& c, unsigned p);

/// (sum of w * c^p over the atoms)^(1/p), evaluated as m * (sum w (c/m)^p)^(1/p)
/// with m the largest atom cost so the intermediate stays in [w_min, 1].
template <class T>
T pth_root_cost(const Coupling<T>& g, const CostTensor<T>& c, unsigned p);

}  // namespace otcert
