#pragma once

// Dense column-major matrix, LU with partial pivoting, and a Higham-style
// 1-norm condition estimate.  The interface systems here are a few hundred
// unknowns at most.

#include <cstddef>
#include <vector>

#include "sto/errors.hpp"

namespace sto {

class DenseMatrix {
public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), a_(rows * cols, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return a_[j * rows_ + i]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[j * rows_ + i]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> a_;
};

/// LU factorization with partial pivoting of a square matrix.
class LuFactorization {
public:
  explicit LuFactorization(DenseMatrix a);

  bool singular() const { return singular_; }

  /// Solve A x = b (in place).
  void solve(std::vector<double>& b) const;
  /// Solve A^T x = b (in place).
  void solve_transposed(std::vector<double>& b) const;

  /// 1-norm condition estimate: ||A||_1 * est(||A^{-1}||_1), Higham's method.
  double condition_estimate() const;

private:
  std::size_t n_ = 0;
  DenseMatrix lu_;
  std::vector<int> piv_;
  double norm1_ = 0.0;
  bool singular_ = false;
};

}  // namespace sto
