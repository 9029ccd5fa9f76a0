#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "otcert/core.hpp"
#include "otcert/potential.hpp"
#include "otcert/solve.hpp"

namespace otcert {

/// Work budget for permutation enumeration: sum over k of C(|G|, k) * (k!)^(N-1).
inline constexpr double kEnumerationBudget = 1e8;

enum class Aggregate { Sum, Max };
enum class MultiMethod { Enumerate, Lp };

/// Estimated comparisons for enumerating subsets of size 2..kmax of an
/// n-point support with N marginals.
double enumeration_work(std::size_t n, std::size_t kmax, std::size_t arity);

/// Multi-marginal c-cyclic monotonicity: no subset of size <= kmax and no
/// tuple of permutations of coordinates 2..N lowers the summed cost.
/// Two marginals delegate to the exact cycle search; MultiMethod::Lp runs the
/// finite-optimality check on the uniform measure over the support.
template <class T>
Verdict<T> check_ccm_multi(const SupportSet& g, const CostTensor<T>& c, std::size_t kmax,
                           MultiMethod method = MultiMethod::Enumerate);

/// Bottleneck analogue: permutations may not lower the maximum cost.
template <class T>
Verdict<T> check_icm(const SupportSet& g, const CostTensor<T>& c, std::size_t kmax);

/// Every uniform submeasure on at most kmax support tuples is optimal for its
/// own marginals under the chosen objective.
template <class T>
Verdict<T> check_finitely_optimal(const Coupling<T>& g, const CostTensor<T>& c, std::size_t kmax, Aggregate objective);

/// Sum of the parts <= c everywhere (tuples where the sum is -inf are
/// skipped) and equality on every tuple of g.
template <class T>
Verdict<T> verify_splitting(const SplittingTuple<T>& t, const CostTensor<T>& c, const SupportSet& g);

/// part_i(x_i) <= c(base with coordinate i replaced by x_i) for every i, x_i.
template <class T>
Verdict<T> check_normalization(const SplittingTuple<T>& t, const CostTensor<T>& c, const Index& base);

template <class T>
struct SplittingOutcome {
  std::optional<SplittingTuple<T>> value;
  Verdict<T> verdict;
};

/// Splitting tuple for a support: dual of the transport problem between the
/// support's uniform marginals, sharpened coordinate by coordinate with
///   part_i(x_i) = inf { c(y with y_i = x_i) - sum_{j != i} part_j(y_j) }
/// and normalised at `base`. Fails with a better coupling when the support
/// is not monotone.
template <class T>
SplittingOutcome<T> construct_splitting(const SupportSet& g, const CostTensor<T>& c, const Index& base);

using PairKey = std::pair<std::size_t, std::size_t>;

/// c(x) = sum over i < j of pair_costs(i, j)(x_i, x_j).
template <class T>
CostTensor<T> pairwise_cost(const std::vector<Space>& spaces, const std::map<PairKey, CostTensor<T>>& pair_costs);

/// Projection of a support onto coordinates (i, j).
SupportSet project(const SupportSet& g, std::size_t i, std::size_t j);

/// Assembles part_i = sum_{j > i} psi_ij + sum_{j < i} (psi_ji)^c from pair
/// potentials. Each psi_ij must certify the (i, j) projection of g.
template <class T>
SplittingTuple<T> pairwise_splitting(const SupportSet& g, const std::map<PairKey, PotentialVector<T>>& pair_potentials,
                                     const std::map<PairKey, CostTensor<T>>& pair_costs);

/// Builds the pair potentials from the projections (chain formula, or the
/// difference-constraint route when a projection is not connecting) and
/// assembles them. Fails with the cycle of a non-monotone projection.
template <class T>
SplittingOutcome<T> pairwise_splitting_from_support(const SupportSet& g,
                                                    const std::map<PairKey, CostTensor<T>>& pair_costs);

/// Recomputes both aggregates of a permutation witness; true iff the
/// permuted one is strictly smaller and both match the record.
template <class T>
bool replay_permutation(const PermutationWitness<T>& w, const CostTensor<T>& c, Aggregate aggregate);

/// True iff `better` has the submeasure's marginals and a strictly smaller
/// objective, both values matching the record.
template <class T>
bool replay_submeasure(const SubmeasureWitness<T>& w, const CostTensor<T>& c, Aggregate aggregate);

/// True iff the recorded tuple still violates the splitting conditions.
template <class T>
bool replay_splitting(const TupleWitness<T>& w, const SplittingTuple<T>& t, const CostTensor<T>& c,
                      const SupportSet& g);

}  // namespace otcert
