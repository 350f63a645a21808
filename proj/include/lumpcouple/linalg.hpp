#ifndef LUMPCOUPLE_LINALG_HPP
#define LUMPCOUPLE_LINALG_HPP

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "lumpcouple/chain.hpp"
#include "lumpcouple/scalar.hpp"

namespace lumpcouple {

/// Solves A x = b by Gaussian elimination. Exact for rationals, partial
/// pivoting for doubles. Returns nullopt when A is singular.
template <class T>
std::optional<std::vector<T>> solve_linear(std::vector<std::vector<T>> a, std::vector<T> b) {
  const std::size_t n = a.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = n;
    if constexpr (Num<T>::exact) {
      for (std::size_t r = col; r < n; ++r)
        if (a[r][col] != 0) {
          piv = r;
          break;
        }
    } else {
      double best = 0.0;
      for (std::size_t r = col; r < n; ++r)
        if (std::fabs(a[r][col]) > best) {
          best = std::fabs(a[r][col]);
          piv = r;
        }
      if (best < 1e-300) piv = n;
    }
    if (piv == n) return std::nullopt;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a[r][col] == Num<T>::zero()) continue;
      T factor = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= factor * a[col][c];
      b[r] -= factor * b[col];
    }
  }
  std::vector<T> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
  return x;
}

/// Incremental linear-dependence tracker used to find the minimal polynomial
/// of a matrix with respect to a start vector.
template <class T>
class KrylovBasis {
 public:
  explicit KrylovBasis(std::size_t dim) : dim_(dim) {}

  /// Adds v_k. Returns the coefficients c with v_k = sum_i c_i v_i when v_k
  /// depends on the previous vectors, nullopt otherwise.
  std::optional<std::vector<T>> add(const std::vector<T>& v) {
    const std::size_t k = count_;
    std::vector<T> r = v;
    std::vector<T> coeff(k + 1, Num<T>::zero());  // r = v_k - sum coeff_i v_i
    coeff[k] = Num<T>::one();
    for (std::size_t j = 0; j < basis_.size(); ++j) {
      const T& f = r[pivots_[j]];
      if (f == Num<T>::zero()) continue;
      T m = f;
      for (std::size_t c = 0; c < dim_; ++c)
        if (basis_[j][c] != Num<T>::zero()) r[c] -= m * basis_[j][c];
      for (std::size_t c = 0; c < combos_[j].size(); ++c) coeff[c] -= m * combos_[j][c];
    }
    std::size_t piv = dim_;
    for (std::size_t c = 0; c < dim_; ++c)
      if (r[c] != Num<T>::zero()) {
        piv = c;
        break;
      }
    ++count_;
    if (piv == dim_) {
      // 0 = coeff . (v_0..v_k) with coeff[k] == 1
      std::vector<T> dep(k);
      for (std::size_t i = 0; i < k; ++i) dep[i] = -coeff[i];
      return dep;
    }
    T inv = Num<T>::one() / r[piv];
    for (auto& x : r) x *= inv;
    for (auto& x : coeff) x *= inv;
    basis_.push_back(std::move(r));
    combos_.push_back(std::move(coeff));
    pivots_.push_back(piv);
    return std::nullopt;
  }

 private:
  std::size_t dim_;
  std::size_t count_ = 0;
  std::vector<std::vector<T>> basis_;
  std::vector<std::vector<T>> combos_;
  std::vector<std::size_t> pivots_;
};

/// Polynomial with coefficients in increasing degree.
template <class T>
using Poly = std::vector<T>;

template <class T>
T poly_eval(const Poly<T>& p, const T& x) {
  T acc = Num<T>::zero();
  for (std::size_t i = p.size(); i-- > 0;) acc = acc * x + p[i];
  return acc;
}

/// Divides p by (x - 1); returns quotient and remainder p(1).
template <class T>
std::pair<Poly<T>, T> divide_by_x_minus_one(const Poly<T>& p) {
  if (p.empty()) return {{}, Num<T>::zero()};
  Poly<T> q(p.size() - 1, Num<T>::zero());
  T carry = Num<T>::zero();
  for (std::size_t i = p.size(); i-- > 0;) {
    carry = carry + p[i];
    if (i > 0) q[i - 1] = carry;
  }
  return {q, carry};
}

/// Evaluates p(K) v by Horner's scheme.
template <class T>
std::vector<T> poly_apply(const Poly<T>& p, const Kernel<T>& k, const std::vector<T>& v) {
  std::vector<T> acc(v.size(), Num<T>::zero());
  for (std::size_t i = p.size(); i-- > 0;) {
    acc = k.apply(acc);
    for (std::size_t c = 0; c < v.size(); ++c) acc[c] += p[i] * v[c];
  }
  return acc;
}

}  // namespace lumpcouple

#endif  // LUMPCOUPLE_LINALG_HPP
