#include "simplex.hpp"

#include <stdexcept>

#include "otcert/number.hpp"

namespace otcert::detail {

namespace {

template <class T>
class Tableau {
 public:
  Tableau(const LinearProgram<T>& lp) : m_(lp.rows), n_(lp.columns.size()), width_(n_ + m_ + 1) {
    if (lp.rhs.size() != m_ || lp.cost.size() != n_) throw std::invalid_argument("malformed linear program");
    rows_.assign(m_, std::vector<T>(width_, T(0)));
    negated_.assign(m_, false);
    for (std::size_t j = 0; j < n_; ++j)
      for (const auto& [i, a] : lp.columns[j]) rows_.at(i)[j] += a;
    for (std::size_t i = 0; i < m_; ++i) {
      rows_[i][n_ + i] = T(1);
      rows_[i][width_ - 1] = lp.rhs[i];
      if (lp.rhs[i] < T(0)) {
        negated_[i] = true;
        for (std::size_t j = 0; j < n_; ++j) rows_[i][j] = -rows_[i][j];
        rows_[i][width_ - 1] = -rows_[i][width_ - 1];
      }
    }
    basis_.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) basis_[i] = n_ + i;
  }

  // Runs the simplex with the given column costs; only columns < `enter_limit`
  // may enter the basis. Returns false if unbounded.
  bool optimise(const std::vector<T>& cost, std::size_t enter_limit) {
    price(cost);
    while (true) {
      std::size_t enter = width_;
      for (std::size_t j = 0; j < enter_limit; ++j)
        if (definitely_less(reduced_[j], T(0))) {
          enter = j;
          break;
        }
      if (enter == width_) return true;
      std::size_t leave = m_;
      T best{};
      for (std::size_t i = 0; i < m_; ++i) {
        const T& a = rows_[i][enter];
        if (!definitely_less(T(0), a)) continue;
        T ratio = rows_[i][width_ - 1] / a;
        if (leave == m_ || ratio < best || (ratio == best && basis_[i] < basis_[leave])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave == m_) return false;
      pivot(leave, enter);
      update_prices(leave, enter);
    }
  }

  // Pivots zero-level artificials out of the basis where a structural column allows.
  void expel_artificials() {
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] < n_) continue;
      for (std::size_t j = 0; j < n_; ++j)
        if (!nearly_equal(rows_[i][j], T(0))) {
          pivot(i, j);
          break;
        }
    }
  }

  T objective(const std::vector<T>& cost) const {
    T z(0);
    for (std::size_t i = 0; i < m_; ++i) z += cost[basis_[i]] * rows_[i][width_ - 1];
    return z;
  }

  std::vector<T> primal() const {
    std::vector<T> x(n_, T(0));
    for (std::size_t i = 0; i < m_; ++i)
      if (basis_[i] < n_) x[basis_[i]] = rows_[i][width_ - 1];
    return x;
  }

  // Row duals from the reduced costs of the artificial columns (cost zero).
  std::vector<T> dual() const {
    std::vector<T> y(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      y[i] = -reduced_[n_ + i];
      if (negated_[i]) y[i] = -y[i];
    }
    return y;
  }

  std::size_t structural() const { return n_; }
  std::size_t total() const { return n_ + m_; }

 private:
  void price(const std::vector<T>& cost) {
    reduced_ = cost;
    for (std::size_t i = 0; i < m_; ++i) {
      const T& cb = cost[basis_[i]];
      if (cb == T(0)) continue;
      for (std::size_t j = 0; j < n_ + m_; ++j)
        if (rows_[i][j] != T(0)) reduced_[j] -= cb * rows_[i][j];
    }
  }

  void update_prices(std::size_t r, std::size_t col) {
    T factor = reduced_[col];
    if (factor == T(0)) return;
    for (std::size_t j = 0; j < n_ + m_; ++j)
      if (rows_[r][j] != T(0)) reduced_[j] -= factor * rows_[r][j];
  }

  void pivot(std::size_t r, std::size_t col) {
    T p = rows_[r][col];
    for (auto& v : rows_[r])
      if (v != T(0)) v /= p;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      T f = rows_[i][col];
      if (f == T(0)) continue;
      for (std::size_t j = 0; j < width_; ++j)
        if (rows_[r][j] != T(0)) rows_[i][j] -= f * rows_[r][j];
      if constexpr (!NumberTraits<T>::exact) rows_[i][col] = T(0);
    }
    basis_[r] = col;
  }

  std::size_t m_, n_, width_;
  std::vector<std::vector<T>> rows_;
  std::vector<bool> negated_;
  std::vector<std::size_t> basis_;
  std::vector<T> reduced_;
};

}  // namespace

template <class T>
LpSolution<T> solve_lp(const LinearProgram<T>& lp, bool feasibility_only) {
  Tableau<T> tab(lp);
  const std::size_t n = tab.structural();
  std::vector<T> phase1(tab.total(), T(0));
  for (std::size_t j = n; j < tab.total(); ++j) phase1[j] = T(1);
  if (!tab.optimise(phase1, n)) throw std::logic_error("phase one cannot be unbounded");
  LpSolution<T> out;
  if (definitely_less(T(0), tab.objective(phase1))) return out;
  tab.expel_artificials();
  if (feasibility_only) {
    out.status = LpStatus::Optimal;
    out.x = tab.primal();
    return out;
  }
  std::vector<T> phase2(tab.total(), T(0));
  for (std::size_t j = 0; j < n; ++j) phase2[j] = lp.cost[j];
  if (!tab.optimise(phase2, n)) {
    out.status = LpStatus::Unbounded;
    return out;
  }
  out.status = LpStatus::Optimal;
  out.x = tab.primal();
  out.objective = tab.objective(phase2);
  out.dual = tab.dual();
  return out;
}

template LpSolution<Rational> solve_lp<Rational>(const LinearProgram<Rational>&, bool);
template LpSolution<double> solve_lp<double>(const LinearProgram<double>&, bool);

}  // namespace otcert::detail
