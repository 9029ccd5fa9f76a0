#include "otcert/core.hpp"

#include <algorithm>
#include <limits>

namespace otcert {

Space::Space(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw std::invalid_argument("space must have at least one point");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!lookup_.emplace(labels_[i], i).second)
      throw std::invalid_argument("duplicate label '" + labels_[i] + "'");
  }
}

Space Space::numbered(std::size_t n) {
  std::vector<std::string> labels;
  labels.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) labels.push_back(std::to_string(i));
  return Space(std::move(labels));
}

std::optional<std::size_t> Space::find(const std::string& label) const {
  auto it = lookup_.find(label);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::size_t Space::index_of(const std::string& label) const {
  auto i = find(label);
  if (!i) throw std::invalid_argument("unknown label '" + label + "'");
  return *i;
}

void for_each_index(const std::vector<std::size_t>& shape, const std::function<void(const Index&)>& fn) {
  for (auto n : shape)
    if (n == 0) return;
  Index idx(shape.size(), 0);
  while (true) {
    fn(idx);
    std::size_t d = shape.size();
    while (d > 0) {
      --d;
      if (++idx[d] < shape[d]) break;
      idx[d] = 0;
      if (d == 0) return;
    }
    if (shape.empty()) return;
  }
}

template <class T>
Measure<T> uniform_measure(const Space& space) {
  return Measure<T>{space, std::vector<T>(space.size(), T(1) / T(static_cast<long>(space.size())))};
}

namespace {

template <class T>
void check_entry(const ExtReal<T>& v) {
  if (v.is_neg_inf()) throw std::invalid_argument("cost entries may not be -inf");
  if constexpr (std::is_floating_point_v<T>) {
    if (v.is_finite() && std::isnan(v.value())) throw std::invalid_argument("cost entries may not be NaN");
  }
}

std::size_t checked_count(const std::vector<std::size_t>& shape) {
  long double total = 1;
  std::size_t count = 1;
  for (auto n : shape) {
    total *= static_cast<long double>(n);
    count *= n;
  }
  if (total > static_cast<long double>(std::numeric_limits<std::size_t>::max()))
    throw std::invalid_argument("cost tensor too large");
  return count;
}

}  // namespace

template <class T>
CostTensor<T>::CostTensor(std::vector<Space> spaces, std::vector<ExtReal<T>> entries)
    : spaces_(std::move(spaces)), dense_(std::move(entries)) {
  if (spaces_.size() < 2) throw std::invalid_argument("cost tensor needs at least two marginals");
  for (const auto& s : spaces_) shape_.push_back(s.size());
  count_ = checked_count(shape_);
  if (count_ > kDenseCap)
    throw std::invalid_argument("dense cost tensor exceeds " + std::to_string(kDenseCap) +
                                " entries; use a rule-backed cost");
  if (dense_.size() != count_)
    throw std::invalid_argument("cost tensor has " + std::to_string(dense_.size()) + " entries, expected " +
                                std::to_string(count_));
  for (const auto& v : dense_) check_entry(v);
}

template <class T>
CostTensor<T>::CostTensor(std::vector<Space> spaces, Rule rule) : spaces_(std::move(spaces)), rule_(std::move(rule)) {
  if (spaces_.size() < 2) throw std::invalid_argument("cost tensor needs at least two marginals");
  if (!rule_) throw std::invalid_argument("empty cost rule");
  for (const auto& s : spaces_) shape_.push_back(s.size());
  count_ = checked_count(shape_);
}

template <class T>
CostTensor<T> CostTensor<T>::tabulate(std::vector<Space> spaces, const Rule& rule) {
  std::vector<std::size_t> shape;
  for (const auto& s : spaces) shape.push_back(s.size());
  std::vector<ExtReal<T>> entries;
  entries.reserve(checked_count(shape));
  for_each_index(shape, [&](const Index& idx) { entries.push_back(rule(idx)); });
  return CostTensor(std::move(spaces), std::move(entries));
}

template <class T>
std::size_t CostTensor<T>::flat(std::span<const std::size_t> idx) const {
  if (idx.size() != shape_.size()) throw std::invalid_argument("index arity does not match cost tensor");
  std::size_t pos = 0;
  for (std::size_t d = 0; d < shape_.size(); ++d) {
    if (idx[d] >= shape_[d]) throw std::out_of_range("cost index out of range");
    pos = pos * shape_[d] + idx[d];
  }
  return pos;
}

template <class T>
Index CostTensor<T>::unflat(std::size_t pos) const {
  Index idx(shape_.size());
  for (std::size_t d = shape_.size(); d-- > 0;) {
    idx[d] = pos % shape_[d];
    pos /= shape_[d];
  }
  return idx;
}

template <class T>
ExtReal<T> CostTensor<T>::operator()(std::span<const std::size_t> idx) const {
  if (rule_) {
    flat(idx);  // bounds check
    ExtReal<T> v = rule_(idx);
    check_entry(v);
    return v;
  }
  return dense_[flat(idx)];
}

template <class T>
std::vector<ExtReal<T>> CostTensor<T>::entries() const {
  if (!rule_) return dense_;
  std::vector<ExtReal<T>> out;
  out.reserve(count_);
  for_each_index(shape_, [&](const Index& idx) { out.push_back((*this)(idx)); });
  return out;
}

template <class T>
T Coupling<T>::total_mass() const {
  T sum(0);
  for (const auto& [idx, w] : atoms) sum += w;
  return sum;
}

template <class T>
void Coupling<T>::add(const Index& idx, const T& w) {
  if (idx.size() != spaces.size()) throw std::invalid_argument("atom arity does not match coupling");
  for (std::size_t d = 0; d < idx.size(); ++d)
    if (idx[d] >= spaces[d].size()) throw std::out_of_range("atom index out of range");
  T& slot = atoms[idx];
  slot += w;
  if (slot == T(0)) atoms.erase(idx);
}

std::vector<std::size_t> SupportSet::projection(std::size_t axis) const {
  if (axis >= spaces.size()) throw std::out_of_range("axis out of range");
  std::set<std::size_t> seen;
  for (const auto& t : tuples) seen.insert(t[axis]);
  return {seen.begin(), seen.end()};
}

template <class T>
SupportSet support_of(const Coupling<T>& g) {
  SupportSet s{g.spaces, {}};
  for (const auto& [idx, w] : g.atoms) s.tuples.insert(idx);
  return s;
}

template <class T>
Coupling<T> uniform_coupling(const SupportSet& s) {
  if (s.tuples.empty()) throw std::invalid_argument("uniform coupling on an empty support");
  Coupling<T> g{s.spaces, {}};
  T w = T(1) / T(static_cast<long>(s.tuples.size()));
  for (const auto& t : s.tuples) g.atoms.emplace(t, w);
  return g;
}

template <class T>
Verdict<T> validate_measure(const Measure<T>& m) {
  if (m.weights.size() != m.space.size())
    return Verdict<T>::no("weight vector length does not match its space", MassWitness<T>{std::nullopt, T(0)});
  T sum(0);
  for (std::size_t i = 0; i < m.weights.size(); ++i) {
    if (definitely_less(m.weights[i], T(0)))
      return Verdict<T>::no("negative weight at index " + std::to_string(i), MassWitness<T>{i, T(0)});
    sum += m.weights[i];
  }
  T deficit = sum - T(1);
  if (!nearly_equal(deficit, T(0)))
    return Verdict<T>::no("total mass differs from one by " + NumberTraits<T>::format(deficit),
                          MassWitness<T>{std::nullopt, deficit});
  return Verdict<T>::yes();
}

template <class T>
Measure<T> marginal(const Coupling<T>& g, std::size_t axis) {
  if (axis >= g.arity()) throw std::out_of_range("marginal axis out of range");
  Measure<T> m{g.spaces[axis], std::vector<T>(g.spaces[axis].size(), T(0))};
  for (const auto& [idx, w] : g.atoms) m.weights[idx[axis]] += w;
  return m;
}

namespace {

template <class T>
void check_shapes(const Coupling<T>& g, const CostTensor<T>& c) {
  if (g.arity() != c.arity()) throw std::invalid_argument("coupling and cost have different arity");
  for (std::size_t d = 0; d < g.arity(); ++d)
    if (g.spaces[d].size() != c.shape()[d]) throw std::invalid_argument("coupling and cost shapes differ");
}

}  // namespace

template <class T>
ExtReal<T> integral_cost(const Coupling<T>& g, const CostTensor<T>& c) {
  check_shapes(g, c);
  ExtReal<T> total(T(0));
  for (const auto& [idx, w] : g.atoms) total += w * c(idx);
  return total;
}

template <class T>
ExtReal<T> linf_cost(const Coupling<T>& g, const CostTensor<T>& c) {
  check_shapes(g, c);
  if (g.atoms.empty()) throw std::invalid_argument("essential supremum of an empty coupling");
  ExtReal<T> best = ExtReal<T>::neg_inf();
  for (const auto& [idx, w] : g.atoms) best = std::max(best, c(idx));
  return best;
}

template <class T>
CostTensor<T> tilt_cost(const CostTensor<T>& c, const std::vector<T>& p, const std::vector<T>& q) {
  if (c.arity() != 2) throw std::invalid_argument("tilt_cost needs two marginals");
  if (p.size() != c.shape()[0] || q.size() != c.shape()[1])
    throw std::invalid_argument("tilt vectors do not match the cost shape");
  std::vector<ExtReal<T>> out;
  out.reserve(c.entry_count());
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j) out.push_back(c.at(i, j) + ExtReal<T>(T(p[i] + q[j])));
  return CostTensor<T>(c.spaces(), std::move(out));
}

template <class T>
NormalizedCost<T> normalize_costs(const CostTensor<T>& c) {
  auto entries = c.entries();
  std::optional<T> lowest;
  for (const auto& v : entries)
    if (v.is_finite() && (!lowest || v.value() < *lowest)) lowest = v.value();
  if (!lowest || !(*lowest < T(0))) return {c, T(0)};
  for (auto& v : entries)
    if (v.is_finite()) v = ExtReal<T>(T(v.value() - *lowest));
  return {CostTensor<T>(c.spaces(), std::move(entries)), *lowest};
}

#define OTCERT_INSTANTIATE(T)                                                                        \
  template Measure<T> uniform_measure<T>(const Space&);                                              \
  template class CostTensor<T>;                                                                      \
  template struct Coupling<T>;                                                                       \
  template SupportSet support_of<T>(const Coupling<T>&);                                             \
  template Coupling<T> uniform_coupling<T>(const SupportSet&);                                       \
  template Verdict<T> validate_measure<T>(const Measure<T>&);                                        \
  template Measure<T> marginal<T>(const Coupling<T>&, std::size_t);                                  \
  template ExtReal<T> integral_cost<T>(const Coupling<T>&, const CostTensor<T>&);                    \
  template ExtReal<T> linf_cost<T>(const Coupling<T>&, const CostTensor<T>&);                        \
  template CostTensor<T> tilt_cost<T>(const CostTensor<T>&, const std::vector<T>&, const std::vector<T>&); \
  template NormalizedCost<T> normalize_costs<T>(const CostTensor<T>&);

OTCERT_INSTANTIATE(Rational)
OTCERT_INSTANTIATE(double)

}  // namespace otcert
