#include "sto/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sto {

LuFactorization::LuFactorization(DenseMatrix a) : n_(a.rows()), lu_(std::move(a)), piv_(n_) {
  if (lu_.rows() != lu_.cols()) throw DomainError("LuFactorization: matrix not square");
  // 1-norm of A before factorization.
  for (std::size_t j = 0; j < n_; ++j) {
    double s = 0;
    for (std::size_t i = 0; i < n_; ++i) s += std::abs(lu_(i, j));
    norm1_ = std::max(norm1_, s);
  }
  for (std::size_t k = 0; k < n_; ++k) {
    std::size_t p = k;
    double best = std::abs(lu_(k, k));
    for (std::size_t i = k + 1; i < n_; ++i) {
      double v = std::abs(lu_(i, k));
      if (v > best) {
        best = v;
        p = i;
      }
    }
    piv_[k] = static_cast<int>(p);
    if (best == 0.0) {
      singular_ = true;
      continue;
    }
    if (p != k)
      for (std::size_t j = 0; j < n_; ++j) std::swap(lu_(k, j), lu_(p, j));
    for (std::size_t i = k + 1; i < n_; ++i) {
      lu_(i, k) /= lu_(k, k);
      double lik = lu_(i, k);
      if (lik != 0.0)
        for (std::size_t j = k + 1; j < n_; ++j) lu_(i, j) -= lik * lu_(k, j);
    }
  }
}

void LuFactorization::solve(std::vector<double>& b) const {
  if (singular_) throw NumericalError("LuFactorization::solve: singular matrix");
  // The factor stores fully swapped rows (L history included), so the whole
  // permutation must be applied to b before the triangular solves.
  for (std::size_t k = 0; k < n_; ++k) {
    std::size_t p = static_cast<std::size_t>(piv_[k]);
    if (p != k) std::swap(b[k], b[p]);
  }
  for (std::size_t k = 0; k < n_; ++k)
    for (std::size_t i = k + 1; i < n_; ++i) b[i] -= lu_(i, k) * b[k];
  for (std::size_t k = n_; k-- > 0;) {
    b[k] /= lu_(k, k);
    for (std::size_t i = 0; i < k; ++i) b[i] -= lu_(i, k) * b[k];
  }
}

void LuFactorization::solve_transposed(std::vector<double>& b) const {
  if (singular_) throw NumericalError("LuFactorization::solve_transposed: singular matrix");
  // P A = L U  =>  A^T x = b  <=>  U^T y = b, L^T z = y, x = P^T z.
  for (std::size_t k = 0; k < n_; ++k) {
    for (std::size_t i = 0; i < k; ++i) b[k] -= lu_(i, k) * b[i];
    b[k] /= lu_(k, k);
  }
  for (std::size_t k = n_; k-- > 0;)
    for (std::size_t i = k + 1; i < n_; ++i) b[k] -= lu_(i, k) * b[i];
  for (std::size_t k = n_; k-- > 0;) {
    std::size_t p = static_cast<std::size_t>(piv_[k]);
    if (p != k) std::swap(b[k], b[p]);
  }
}

double LuFactorization::condition_estimate() const {
  if (singular_) return std::numeric_limits<double>::infinity();
  // Higham's 1-norm estimator for ||A^{-1}||_1 (a few solves with A and A^T).
  std::vector<double> x(n_, 1.0 / static_cast<double>(n_));
  double est = 0.0;
  for (int iter = 0; iter < 6; ++iter) {
    std::vector<double> y = x;
    solve(y);
    double ynorm = 0;
    for (double v : y) ynorm += std::abs(v);
    est = std::max(est, ynorm);
    std::vector<double> xi(n_);
    for (std::size_t i = 0; i < n_; ++i) xi[i] = (y[i] >= 0) ? 1.0 : -1.0;
    solve_transposed(xi);
    std::size_t jmax = 0;
    double vmax = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (std::abs(xi[i]) > vmax) {
        vmax = std::abs(xi[i]);
        jmax = i;
      }
    }
    double xsum = 0;
    for (double v : x) xsum += std::abs(v) * vmax;
    if (vmax <= xsum / static_cast<double>(n_) && iter > 0) break;
    std::fill(x.begin(), x.end(), 0.0);
    x[jmax] = 1.0;
  }
  if (!std::isfinite(est)) return std::numeric_limits<double>::infinity();
  return norm1_ * est;
}

}  // namespace sto
