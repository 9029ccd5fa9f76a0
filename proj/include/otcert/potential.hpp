#pragma once

#include <optional>
#include <vector>

#include "otcert/core.hpp"
#include "otcert/monotone.hpp"

namespace otcert {

/// Values over a space in [-inf, +inf). A c-transform may produce +inf
/// entries; those are listed by the transform, never hidden.
template <class T>
struct PotentialVector {
  Space space;
  std::vector<ExtReal<T>> values;
  std::optional<Index> base;

  std::size_t size() const { return values.size(); }
  const ExtReal<T>& operator[](std::size_t i) const { return values[i]; }
};

enum class TransformDirection { XToY, YToX };

template <class T>
struct TransformResult {
  PotentialVector<T> potential;
  std::vector<std::size_t> infinite_entries;  // positions where the infimum is +inf
};

/// g(y) = inf_x c(x, y) - f(x) (or the mirror image for YToX). Terms equal
/// to +inf are skipped; an entry with no finite term is +inf and flagged.
template <class T>
TransformResult<T> c_transform(const PotentialVector<T>& f, const CostTensor<T>& c, TransformDirection dir);

/// Result of a potential construction: either a value or a failed verdict
/// whose witness explains why no value could be produced.
template <class T>
struct PotentialOutcome {
  std::optional<PotentialVector<T>> value;
  Verdict<T> verdict;
};

/// Potential from chain minimisation anchored at `base`:
///   phi(x) = min_j [D(j) + c(x, y_j) - c(x_j, y_j)]
/// with D the shortest chain distance from the base. phi(base.x) = 0.
/// Entries off the first projection that no chain reaches are -inf. Fails
/// with the monotonicity witness, or with the connectivity witness when some
/// support point is unreachable from the base (use the difference-constraint
/// route for such supports).
template <class T>
PotentialOutcome<T> rockafellar_potential(const SupportSet& g, const CostTensor<T>& c, const Index& base);

/// c(x, y) - f(x) <= c(z, y) - f(z) for every (x, y) in g and every z, with
/// c(x, y) and f(x) finite. Throws if f has a +inf entry.
template <class T>
Verdict<T> verify_subgradient(const PotentialVector<T>& f, const SupportSet& g, const CostTensor<T>& c);

/// True iff the recorded triple still violates the subgradient inequality.
template <class T>
bool replay_triple(const TripleWitness<T>& w, const PotentialVector<T>& f, const CostTensor<T>& c);

/// Solution of the difference constraints gain[i][j] <= a_i - a_j.
template <class T>
struct SystemSolution {
  std::optional<std::vector<T>> values;
  std::vector<std::size_t> cycle;  // positive cycle when infeasible, in constraint order
  T cycle_sum{};
};

/// Entries must lie in [-inf, +inf) with a zero diagonal; -inf constraints
/// are vacuous.
template <class T>
SystemSolution<T> solve_inequality_system(const std::vector<std::vector<ExtReal<T>>>& gain);

/// Sum of gain entries around a cycle (closing arc included).
template <class T>
ExtReal<T> system_cycle_sum(const std::vector<std::vector<ExtReal<T>>>& gain, const std::vector<std::size_t>& cycle);

/// Potential phi(x) = min_i c(x, y_i) - a_i built from a feasible solution
/// of the support's gain system, shifted so phi vanishes at the first tuple.
template <class T>
PotentialVector<T> potential_from_constants(const std::vector<T>& a, const SupportSet& g, const CostTensor<T>& c);

enum class Compatibility { Incompatible, Compatible, StronglyCompatible };

const char* to_string(Compatibility level);

template <class T>
struct CompatibilityResult {
  Compatibility level = Compatibility::StronglyCompatible;
  Verdict<T> verdict;  // holds iff strongly compatible; witness is the first offending subset
};

/// Hall-type conditions on (mu, nu, c) by enumerating subsets A of supp(mu):
///   mu(A) + nu(blocked(A)) <= 1,  and < 1 whenever 0 < mu(A) < 1,
/// where blocked(A) = {y : c(x, y) = inf for all x in A}.
template <class T>
CompatibilityResult<T> check_compatibility(const Measure<T>& mu, const Measure<T>& nu, const CostTensor<T>& c);

inline constexpr std::size_t kCompatibilitySubsetCap = 22;

/// Recomputes mu(A) and nu(blocked(A)) for a subset witness.
template <class T>
SubsetWitness<T> evaluate_subset(const std::vector<std::size_t>& subset, const Measure<T>& mu, const Measure<T>& nu,
                                 const CostTensor<T>& c);

/// phi(x) + phi^c(y) = c(x, y) < inf. Empty when no x' has c(x', y) and
/// phi(x') both finite, in which case the equality is not meaningful.
template <class T>
std::optional<bool> in_alt_subgradient(const PotentialVector<T>& phi, const CostTensor<T>& c, std::size_t x,
                                       std::size_t y);

}  // namespace otcert
