#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "otcert/number.hpp"

namespace otcert {

/// Index tuple into a product of finite spaces (0-based per coordinate).
using Index = std::vector<std::size_t>;

/// A finite set of labelled points. Index <-> label is a stable bijection.
class Space {
 public:
  Space() = default;
  explicit Space(std::vector<std::string> labels);

  /// Space with labels "1".."n".
  static Space numbered(std::size_t n);

  std::size_t size() const { return labels_.size(); }
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<std::size_t> find(const std::string& label) const;
  std::size_t index_of(const std::string& label) const;

  friend bool operator==(const Space& a, const Space& b) { return a.labels_ == b.labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> lookup_;
};

template <class T>
struct Measure {
  Space space;
  std::vector<T> weights;

  std::size_t size() const { return weights.size(); }
};

/// Uniform probability measure on a space.
template <class T>
Measure<T> uniform_measure(const Space& space);

/// N-dimensional array of costs in R u {+inf}, dense or backed by a rule.
///
/// -inf and NaN are rejected. Dense storage is row-major with the last
/// coordinate fastest and is capped at kDenseCap entries; larger tensors need
/// a rule.
template <class T>
class CostTensor {
 public:
  using Rule = std::function<ExtReal<T>(std::span<const std::size_t>)>;
  static constexpr std::size_t kDenseCap = 10'000'000;

  CostTensor() = default;
  CostTensor(std::vector<Space> spaces, std::vector<ExtReal<T>> entries);
  CostTensor(std::vector<Space> spaces, Rule rule);

  /// Dense tensor filled from a rule (one evaluation per entry).
  static CostTensor tabulate(std::vector<Space> spaces, const Rule& rule);

  std::size_t arity() const { return shape_.size(); }
  const std::vector<std::size_t>& shape() const { return shape_; }
  const std::vector<Space>& spaces() const { return spaces_; }
  std::size_t entry_count() const { return count_; }
  bool is_dense() const { return !rule_; }

  ExtReal<T> operator()(std::span<const std::size_t> idx) const;
  ExtReal<T> operator()(std::initializer_list<std::size_t> idx) const {
    return (*this)(std::span<const std::size_t>(idx.begin(), idx.size()));
  }
  /// Two-marginal shorthand c(x_i, y_j).
  ExtReal<T> at(std::size_t i, std::size_t j) const { return (*this)({i, j}); }

  /// Row-major position of an index tuple.
  std::size_t flat(std::span<const std::size_t> idx) const;
  Index unflat(std::size_t pos) const;

  /// Dense copy of the entries (materializes rule-backed tensors).
  std::vector<ExtReal<T>> entries() const;

 private:
  std::vector<Space> spaces_;
  std::vector<std::size_t> shape_;
  std::size_t count_ = 0;
  std::vector<ExtReal<T>> dense_;
  Rule rule_;
};

/// Discrete coupling: index tuple -> strictly positive weight.
template <class T>
struct Coupling {
  std::vector<Space> spaces;
  std::map<Index, T> atoms;

  std::size_t arity() const { return spaces.size(); }
  T total_mass() const;
  /// Adds weight to an atom; zero results are removed.
  void add(const Index& idx, const T& w);
};

/// Finite set of index tuples. Ordered lexicographically.
struct SupportSet {
  std::vector<Space> spaces;
  std::set<Index> tuples;

  std::size_t arity() const { return spaces.size(); }
  std::size_t size() const { return tuples.size(); }
  std::vector<Index> ordered() const { return {tuples.begin(), tuples.end()}; }
  /// Distinct coordinates appearing on one axis, ascending.
  std::vector<std::size_t> projection(std::size_t axis) const;
};

template <class T>
SupportSet support_of(const Coupling<T>& g);

/// Uniform probability measure on the tuples of a support set.
template <class T>
Coupling<T> uniform_coupling(const SupportSet& s);

// ---------------------------------------------------------------------------
// Verdicts and witnesses. Every negative verdict carries a witness that the
// replay functions of the owning module re-check in O(witness size).

/// Cycle of support tuples (positions into SupportSet::ordered()).
template <class T>
struct CycleWitness {
  std::vector<std::size_t> nodes;
  std::vector<Index> tuples;
  T gain{};  // strictly positive amount by which the cycle violates the inequality
};

/// Directed reachability failure between two tuples, with the strong
/// components of the finite-cost chain graph.
struct ComponentWitness {
  Index from;
  Index to;
  std::vector<std::vector<Index>> components;
};

/// A single offending tuple (infinite diagonal cost, splitting violation).
template <class T>
struct TupleWitness {
  Index tuple;
  ExtReal<T> slack;  // c - sum(phi) for splitting; the cost itself otherwise
};

/// Violated c-subgradient inequality at (x, y) against competitor z.
template <class T>
struct TripleWitness {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t z = 0;
  ExtReal<T> lhs;  // c(x, y) - f(x)
  ExtReal<T> rhs;  // c(z, y) - f(z)
};

/// Subset A of the first space violating a compatibility condition.
template <class T>
struct SubsetWitness {
  std::vector<std::size_t> subset;
  T mass{};          // mu(A)
  T blocked_mass{};  // nu({y : c(x, y) = inf for all x in A})
};

/// Points of a support plus (N-1) permutations that improve the objective.
template <class T>
struct PermutationWitness {
  std::vector<Index> points;
  std::vector<std::vector<std::size_t>> permutations;  // sigma_2..sigma_N
  ExtReal<T> original;
  ExtReal<T> permuted;
};

/// Uniform submeasure and a strictly better coupling of the same marginals.
template <class T>
struct SubmeasureWitness {
  Coupling<T> submeasure;
  Coupling<T> better;
  ExtReal<T> submeasure_value;
  ExtReal<T> better_value;
};

/// Measure validation failure.
template <class T>
struct MassWitness {
  std::optional<std::size_t> negative_index;
  T deficit{};  // sum of weights minus one
};

template <class T>
using Witness = std::variant<std::monostate, CycleWitness<T>, ComponentWitness, TupleWitness<T>,
                             TripleWitness<T>, SubsetWitness<T>, PermutationWitness<T>,
                             SubmeasureWitness<T>, MassWitness<T>>;

template <class T>
struct Verdict {
  bool holds = true;
  std::string reason;
  Witness<T> witness;

  explicit operator bool() const { return holds; }

  static Verdict yes() { return Verdict{}; }
  static Verdict no(std::string why, Witness<T> w) { return Verdict{false, std::move(why), std::move(w)}; }
};

/// Raised when an operation's precondition fails; carries the certificate
/// that demonstrates the failure.
template <class T>
class PreconditionError : public std::runtime_error {
 public:
  explicit PreconditionError(Verdict<T> v)
      : std::runtime_error(v.reason), verdict_(std::move(v)) {}
  const Verdict<T>& verdict() const { return verdict_; }

 private:
  Verdict<T> verdict_;
};

/// Raised when an enumeration would exceed its work budget.
class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(const std::string& what, double estimate, double budget)
      : std::runtime_error(what), estimate_(estimate), budget_(budget) {}
  double estimate() const { return estimate_; }
  double budget() const { return budget_; }

 private:
  double estimate_;
  double budget_;
};

// ---------------------------------------------------------------------------
// Operations

/// Accepts iff weights are nonnegative and sum to one (mode tolerance).
template <class T>
Verdict<T> validate_measure(const Measure<T>& m);

/// Axis-sums of a coupling (axis is 0-based).
template <class T>
Measure<T> marginal(const Coupling<T>& g, std::size_t axis);

/// Sum over atoms of weight * cost; +inf iff some atom costs +inf.
template <class T>
ExtReal<T> integral_cost(const Coupling<T>& g, const CostTensor<T>& c);

/// Largest cost over the atoms (essential supremum of a finite support).
template <class T>
ExtReal<T> linf_cost(const Coupling<T>& g, const CostTensor<T>& c);

/// c(x, y) + p(x) + q(y). Infinite entries stay infinite.
template <class T>
CostTensor<T> tilt_cost(const CostTensor<T>& c, const std::vector<T>& p, const std::vector<T>& q);

/// Costs shifted by their global finite minimum so every entry is >= 0.
template <class T>
struct NormalizedCost {
  CostTensor<T> cost;
  T shift{};  // original = normalized + shift
};

template <class T>
NormalizedCost<T> normalize_costs(const CostTensor<T>& c);

/// Visits every index tuple of a shape in row-major order.
void for_each_index(const std::vector<std::size_t>& shape, const std::function<void(const Index&)>& fn);

}  // namespace otcert
