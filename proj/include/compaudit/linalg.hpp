#pragma once

#include <cstddef>
#include <vector>

#include "compaudit/matrix.hpp"

namespace compaudit {

// Thin SVD  m = u * diag(s) * v^T  with k = min(rows, cols) components,
// singular values sorted non-increasing. Sign convention: the
// largest-magnitude entry of each right singular vector is non-negative
// (first such entry on ties), so results are deterministic.
struct Svd {
  Matrix u_basis;                       // rows x k
  std::vector<double> singular_values;  // length k
  Matrix v_basis;                       // cols x k
};

// One-sided Jacobi. Accurate for the tall-or-square dense matrices used
// here; matrices with rows < cols are factored through their transpose.
Svd jacobi_svd(const Matrix& m);

// Standard relative cutoff for treating singular values as zero.
double default_rcond(std::size_t rows, std::size_t cols);

// Minimal-Frobenius-norm X minimizing ||a*X - b||_F. Singular values below
// rcond * sigma_max are treated as zero; rcond <= 0 selects the default.
Matrix pinv_solve(const Matrix& a, const Matrix& b, double rcond = 0.0);

struct Standardized {
  Matrix values;              // centered, unit sample-std columns
  std::vector<double> means;  // per column
  std::vector<double> stds;   // per column; 0 marks a constant column
};

// Columns become mean 0 / sample std 1. Constant columns (all entries equal)
// are reported with std 0 and zeroed out.
Standardized standardize_columns(const Matrix& m);

// c = a * b (row-major operands).
Matrix matmul(const Matrix& a, const Matrix& b);

// c = a^T * b, accumulated row by row.
Matrix matmul_at_b(const Matrix& a, const Matrix& b);

}  // namespace compaudit
