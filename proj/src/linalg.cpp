#include "compaudit/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "compaudit/error.hpp"
#include "compaudit/kernels.hpp"

namespace compaudit {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// One-sided Jacobi on a tall matrix held column-major: rotate column pairs
// until all are mutually orthogonal, then read off U, sigma, V.
struct JacobiResult {
  std::vector<double> w;  // rows x cols, column-major, ends as U * diag(sigma)
  std::vector<double> v;  // cols x cols, column-major
  std::vector<double> sigma;
};

JacobiResult one_sided_jacobi(const Matrix& m) {
  const std::size_t rows = m.rows;
  const std::size_t cols = m.cols;
  JacobiResult r;
  r.w.assign(rows * cols, 0.0);
  r.v.assign(cols * cols, 0.0);
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t i = 0; i < rows; ++i) r.w[j * rows + i] = m.at(i, j);
    r.v[j * cols + j] = 1.0;
  }

  std::vector<double> sq(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    sq[j] = kernels::sum_squares(&r.w[j * rows], rows);
  }

  const double tol = 1e-15;
  const int max_sweeps = 60;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < cols; ++p) {
      for (std::size_t q = p + 1; q < cols; ++q) {
        double* wp = &r.w[p * rows];
        double* wq = &r.w[q * rows];
        const double app = sq[p];
        const double aqq = sq[q];
        if (app == 0.0 || aqq == 0.0) continue;
        const double apq = kernels::dot(wp, wq, rows);
        if (std::abs(apq) <= tol * std::sqrt(app * aqq)) continue;
        rotated = true;
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        kernels::rotate(c, s, wp, wq, rows);
        kernels::rotate(c, s, &r.v[p * cols], &r.v[q * cols], cols);
        sq[p] = app - t * apq;
        sq[q] = aqq + t * apq;
      }
    }
    if (!rotated) break;
    // Refresh cached norms each sweep so the rotation updates cannot drift.
    for (std::size_t j = 0; j < cols; ++j) {
      sq[j] = kernels::sum_squares(&r.w[j * rows], rows);
    }
  }

  r.sigma.resize(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    r.sigma[j] = std::sqrt(kernels::sum_squares(&r.w[j * rows], rows));
  }
  return r;
}

}  // namespace

Svd jacobi_svd(const Matrix& m) {
  if (!m.all_finite()) {
    throw_precondition("NonFiniteInput", "jacobi_svd: matrix contains NaN or Inf");
  }
  if (m.rows == 0 || m.cols == 0) {
    throw_precondition("EmptyMatrix", "jacobi_svd: empty matrix");
  }
  const bool transposed = m.rows < m.cols;
  const Matrix work = transposed ? m.transposed() : m;
  const std::size_t rows = work.rows;
  const std::size_t cols = work.cols;

  JacobiResult jr = one_sided_jacobi(work);

  // Order components by descending singular value, index-ascending on ties.
  std::vector<std::size_t> order(cols);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return jr.sigma[a] > jr.sigma[b];
  });

  Matrix u(rows, cols);
  Matrix v(cols, cols);
  std::vector<double> sigma(cols);
  for (std::size_t jj = 0; jj < cols; ++jj) {
    const std::size_t src = order[jj];
    const double sv = jr.sigma[src];
    sigma[jj] = sv;

    // Deterministic sign: largest-magnitude V entry non-negative.
    double best = 0.0;
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < cols; ++i) {
      const double a = std::abs(jr.v[src * cols + i]);
      if (a > best) {
        best = a;
        best_i = i;
      }
    }
    const double flip = jr.v[src * cols + best_i] < 0.0 ? -1.0 : 1.0;

    for (std::size_t i = 0; i < cols; ++i) v.at(i, jj) = flip * jr.v[src * cols + i];
    if (sv > 0.0) {
      const double inv = flip / sv;
      for (std::size_t i = 0; i < rows; ++i) u.at(i, jj) = inv * jr.w[src * rows + i];
    }  // sv == 0: U column left zero; callers cut it via rcond
  }

  Svd out;
  if (transposed) {
    out.u_basis = std::move(v);
    out.v_basis = std::move(u);
  } else {
    out.u_basis = std::move(u);
    out.v_basis = std::move(v);
  }
  out.singular_values = std::move(sigma);
  return out;
}

double default_rcond(std::size_t rows, std::size_t cols) {
  return static_cast<double>(std::max(rows, cols)) * kEps;
}

Matrix pinv_solve(const Matrix& a, const Matrix& b, double rcond) {
  if (!a.all_finite() || !b.all_finite()) {
    throw_precondition("NonFiniteInput", "pinv_solve: input contains NaN or Inf");
  }
  if (a.rows != b.rows) {
    throw_precondition("LengthMismatch", "pinv_solve: a and b row counts differ");
  }
  if (rcond <= 0.0) rcond = default_rcond(a.rows, a.cols);
  if (rcond >= 1.0) {
    throw_precondition("InvalidRcond", "pinv_solve: rcond must lie in (0, 1)");
  }

  const Svd svd = jacobi_svd(a);
  const std::size_t k = svd.singular_values.size();
  const std::size_t m = b.cols;
  const double cutoff = rcond * (k > 0 ? svd.singular_values[0] : 0.0);

  // s = diag(1/sigma) * U^T * b over the kept components.
  Matrix s(k, m, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* bi = b.row(i);
    for (std::size_t j = 0; j < k; ++j) {
      const double uij = svd.u_basis.at(i, j);
      if (uij != 0.0) kernels::axpy(uij, bi, s.row(j), m);
    }
  }
  for (std::size_t j = 0; j < k; ++j) {
    const double sv = svd.singular_values[j];
    if (sv > cutoff && sv > 0.0) {
      kernels::scale(1.0 / sv, s.row(j), m);
    } else {
      std::fill(s.row(j), s.row(j) + m, 0.0);
    }
  }

  Matrix x(a.cols, m, 0.0);
  for (std::size_t r = 0; r < a.cols; ++r) {
    for (std::size_t j = 0; j < k; ++j) {
      const double vrj = svd.v_basis.at(r, j);
      if (vrj != 0.0) kernels::axpy(vrj, s.row(j), x.row(r), m);
    }
  }
  return x;
}

Standardized standardize_columns(const Matrix& m) {
  if (m.rows < 2) {
    throw_precondition("TooFewRows", "standardize_columns: need at least 2 rows");
  }
  Standardized out;
  out.values = Matrix(m.rows, m.cols);
  out.means.resize(m.cols);
  out.stds.resize(m.cols);
  const double q = static_cast<double>(m.rows);
  for (std::size_t j = 0; j < m.cols; ++j) {
    double mn = m.at(0, j);
    double mx = mn;
    double sum = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i) {
      const double v = m.at(i, j);
      mn = std::min(mn, v);
      mx = std::max(mx, v);
      sum += v;
    }
    const double mean = sum / q;
    out.means[j] = mean;
    if (mn == mx) {
      out.stds[j] = 0.0;
      for (std::size_t i = 0; i < m.rows; ++i) out.values.at(i, j) = 0.0;
      continue;
    }
    double ss = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i) {
      const double d = m.at(i, j) - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / (q - 1.0));
    out.stds[j] = sd;
    const double inv = 1.0 / sd;
    for (std::size_t i = 0; i < m.rows; ++i) out.values.at(i, j) = (m.at(i, j) - mean) * inv;
  }
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) {
    throw_precondition("LengthMismatch", "matmul: inner dimensions differ");
  }
  Matrix c(a.rows, b.cols, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* ai = a.row(i);
    double* ci = c.row(i);
    for (std::size_t p = 0; p < a.cols; ++p) {
      if (ai[p] != 0.0) kernels::axpy(ai[p], b.row(p), ci, b.cols);
    }
  }
  return c;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows) {
    throw_precondition("LengthMismatch", "matmul_at_b: row counts differ");
  }
  Matrix c(a.cols, b.cols, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* ai = a.row(i);
    const double* bi = b.row(i);
    for (std::size_t j = 0; j < a.cols; ++j) {
      if (ai[j] != 0.0) kernels::axpy(ai[j], bi, c.row(j), b.cols);
    }
  }
  return c;
}

}  // namespace compaudit
