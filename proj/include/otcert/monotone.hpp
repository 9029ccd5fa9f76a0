#pragma once

#include <vector>

#include "otcert/core.hpp"

namespace otcert {

/// Complete directed graph on the tuples of a two-marginal support.
///
/// For nodes i = (x_i, y_i), j = (x_j, y_j):
///   chain(i -> j)  = c(x_j, y_i) - c(x_i, y_i)   in R u {+inf}
///   gain(i -> j)   = c(x_i, y_i) - c(x_i, y_j)   in R u {-inf}
/// A cycle with positive total gain is a profitable reassignment.
template <class T>
struct PairGraph {
  std::vector<Index> nodes;  // lexicographic order of the support
  std::vector<std::vector<ExtReal<T>>> chain;
  std::vector<std::vector<ExtReal<T>>> gain;

  std::size_t size() const { return nodes.size(); }

  /// Throws PreconditionError (tuple witness) on an infinite diagonal cost.
  static PairGraph build(const SupportSet& g, const CostTensor<T>& c);
};

enum class CcmMethod { Exact, BruteForce };

/// Two-marginal c-cyclic monotonicity. Exact mode searches for a positive
/// gain cycle; brute force enumerates subsets of size <= kmax in every cyclic
/// order. Zero-gain cycles are not violations.
template <class T>
Verdict<T> check_ccm2(const SupportSet& g, const CostTensor<T>& c, CcmMethod method = CcmMethod::Exact,
                      std::size_t kmax = 0);

/// Strong connectivity of the finite-chain graph (edge i -> j iff
/// c(x_j, y_i) < inf), after checking finite diagonal costs.
template <class T>
Verdict<T> check_connecting(const SupportSet& g, const CostTensor<T>& c);

template <class T>
struct PathBounds {
  Verdict<T> verdict;
  /// bound[s][t]: supremum of chain sums from node s to node t; -inf when no
  /// finite chain exists. Empty when the verdict is negative.
  std::vector<std::vector<ExtReal<T>>> bound;
};

template <class T>
PathBounds<T> check_path_bounded(const SupportSet& g, const CostTensor<T>& c);

/// Recomputes the gain of a cycle witness; true iff it is a strict violation
/// matching the recorded gain.
template <class T>
bool replay_cycle(const CycleWitness<T>& w, const CostTensor<T>& c);

/// True iff `to` is unreachable from `from` through finite chain edges among
/// the tuples listed in the witness partition.
template <class T>
bool replay_components(const ComponentWitness& w, const CostTensor<T>& c);

/// Gain of reassigning x_i -> y_{i+1} around the given cycle of tuples.
template <class T>
ExtReal<T> cycle_gain(const std::vector<Index>& tuples, const CostTensor<T>& c);

}  // namespace otcert
