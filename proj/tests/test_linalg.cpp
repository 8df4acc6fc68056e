#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "compaudit/error.hpp"
#include "compaudit/linalg.hpp"
#include "compaudit/rng.hpp"

using namespace compaudit;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, SplitMix64& rng) {
  Matrix m(r, c);
  for (double& v : m.data) v = rng.next_normal();
  return m;
}

Matrix random_rank_deficient(std::size_t r, std::size_t c, std::size_t rank, SplitMix64& rng) {
  return matmul(random_matrix(r, rank, rng), random_matrix(rank, c, rng));
}

double reconstruction_error(const Matrix& m, const Svd& svd) {
  Matrix rec(m.rows, m.cols, 0.0);
  for (std::size_t k = 0; k < svd.singular_values.size(); ++k) {
    for (std::size_t i = 0; i < m.rows; ++i) {
      const double f = svd.u_basis.at(i, k) * svd.singular_values[k];
      for (std::size_t j = 0; j < m.cols; ++j) rec.at(i, j) += f * svd.v_basis.at(j, k);
    }
  }
  double err = 0.0;
  for (std::size_t idx = 0; idx < m.data.size(); ++idx) {
    const double d = rec.data[idx] - m.data[idx];
    err += d * d;
  }
  return std::sqrt(err);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) d = std::max(d, std::abs(a.data[i] - b.data[i]));
  return d;
}

}  // namespace

TEST_CASE("svd reconstructs tall, square, and fat matrices") {
  SplitMix64 rng(1001);
  for (auto [r, c] : {std::pair<std::size_t, std::size_t>{9, 4},
                      {5, 5},
                      {4, 9},
                      {20, 3},
                      {3, 20}}) {
    const Matrix m = random_matrix(r, c, rng);
    const Svd svd = jacobi_svd(m);
    CHECK(reconstruction_error(m, svd) <= 1e-10 * frobenius_norm(m));
    for (std::size_t k = 1; k < svd.singular_values.size(); ++k) {
      CHECK(svd.singular_values[k] <= svd.singular_values[k - 1]);
      CHECK(svd.singular_values[k] >= 0.0);
    }
    // Orthonormal bases.
    for (std::size_t a = 0; a < svd.v_basis.cols; ++a) {
      for (std::size_t b = a; b < svd.v_basis.cols; ++b) {
        double dv = 0.0;
        double du = 0.0;
        for (std::size_t i = 0; i < svd.v_basis.rows; ++i) dv += svd.v_basis.at(i, a) * svd.v_basis.at(i, b);
        for (std::size_t i = 0; i < svd.u_basis.rows; ++i) du += svd.u_basis.at(i, a) * svd.u_basis.at(i, b);
        const double expect = a == b ? 1.0 : 0.0;
        CHECK(dv == doctest::Approx(expect).epsilon(1e-10));
        if (svd.singular_values[a] > 0 && svd.singular_values[b] > 0) {
          CHECK(du == doctest::Approx(expect).epsilon(1e-10));
        }
      }
    }
  }
}

TEST_CASE("svd sign convention: largest-magnitude right-vector entry non-negative") {
  SplitMix64 rng(77);
  const Matrix m = random_matrix(8, 5, rng);
  const Svd svd = jacobi_svd(m);
  for (std::size_t k = 0; k < svd.v_basis.cols; ++k) {
    double best = 0.0;
    double signed_best = 0.0;
    for (std::size_t i = 0; i < svd.v_basis.rows; ++i) {
      if (std::abs(svd.v_basis.at(i, k)) > best) {
        best = std::abs(svd.v_basis.at(i, k));
        signed_best = svd.v_basis.at(i, k);
      }
    }
    CHECK(signed_best >= 0.0);
  }
}

TEST_CASE("pinv_solve: identity system returns b") {
  Matrix a = Matrix::identity(3);
  SplitMix64 rng(5);
  const Matrix b = random_matrix(3, 2, rng);
  const Matrix x = pinv_solve(a, b);
  CHECK(max_abs_diff(x, b) <= 1e-12);
}

TEST_CASE("pinv_solve: inconsistent 2x1 system matches the hand solution") {
  // a = [[1],[1]], b = [[1],[3]]: normal equations give x = 2.
  Matrix a(2, 1);
  a.at(0, 0) = 1.0;
  a.at(1, 0) = 1.0;
  Matrix b(2, 1);
  b.at(0, 0) = 1.0;
  b.at(1, 0) = 3.0;
  const Matrix x = pinv_solve(a, b);
  CHECK(x.at(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("pinv_solve: minimal-norm solution among null-space perturbations") {
  // Rank-1 3x2 system with a consistent right-hand side. All exact solutions
  // are x0 + t * z with z spanning the null space; the returned solution must
  // sit at the norm minimum of that line, checked by brute-force enumeration.
  Matrix a(3, 2);
  for (std::size_t i = 0; i < 3; ++i) {
    a.at(i, 0) = static_cast<double>(i + 1);
    a.at(i, 1) = 2.0 * static_cast<double>(i + 1);  // second column = 2 * first
  }
  Matrix b(3, 1);
  for (std::size_t i = 0; i < 3; ++i) b.at(i, 0) = 5.0 * static_cast<double>(i + 1);

  const Matrix x = pinv_solve(a, b);
  const Matrix residual_check = matmul(a, x);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(residual_check.at(i, 0) == doctest::Approx(b.at(i, 0)).epsilon(1e-10));
  }

  // Null space of a is spanned by (2, -1)/sqrt(5).
  const double z0 = 2.0 / std::sqrt(5.0);
  const double z1 = -1.0 / std::sqrt(5.0);
  const double x_norm = std::sqrt(x.at(0, 0) * x.at(0, 0) + x.at(1, 0) * x.at(1, 0));
  for (int step = -50; step <= 50; ++step) {
    if (step == 0) continue;
    const double t = 0.02 * step;
    const double p0 = x.at(0, 0) + t * z0;
    const double p1 = x.at(1, 0) + t * z1;
    CHECK(std::sqrt(p0 * p0 + p1 * p1) >= x_norm - 1e-12);
  }
}

TEST_CASE("Moore-Penrose conditions 1 and 2 across shapes") {
  SplitMix64 rng(424242);
  int cases = 0;
  while (cases < 24) {
    Matrix a;
    switch (cases % 4) {
      case 0: a = random_matrix(8, 5, rng); break;
      case 1: a = random_matrix(5, 8, rng); break;
      case 2: a = random_rank_deficient(8, 5, 3, rng); break;
      default: a = random_rank_deficient(6, 6, 2, rng); break;
    }
    ++cases;
    const Matrix pinv = pinv_solve(a, Matrix::identity(a.rows));
    const Matrix axa = matmul(matmul(a, pinv), a);
    const Matrix xax = matmul(matmul(pinv, a), pinv);
    CHECK(max_abs_diff(axa, a) <= 1e-10 * std::max(1.0, frobenius_norm(a)));
    CHECK(max_abs_diff(xax, pinv) <= 1e-10 * std::max(1.0, frobenius_norm(pinv)));
  }
}

TEST_CASE("pinv_solve residual is locally optimal") {
  SplitMix64 rng(99);
  const Matrix a = random_matrix(10, 4, rng);
  const Matrix b = random_matrix(10, 3, rng);
  const Matrix x = pinv_solve(a, b);

  const auto residual = [&](const Matrix& xt) {
    const Matrix r = matmul(a, xt);
    double s = 0.0;
    for (std::size_t i = 0; i < r.data.size(); ++i) {
      const double d = r.data[i] - b.data[i];
      s += d * d;
    }
    return std::sqrt(s);
  };
  const double base = residual(x);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix delta = random_matrix(4, 3, rng);
    const double f = 1e-3 / frobenius_norm(delta);
    Matrix perturbed = x;
    for (std::size_t i = 0; i < perturbed.data.size(); ++i) perturbed.data[i] += f * delta.data[i];
    CHECK(residual(perturbed) >= base - 1e-12);
  }
}

TEST_CASE("pinv_solve rejects non-finite input and bad rcond") {
  Matrix a(2, 2);
  a.at(0, 0) = std::nan("");
  CHECK_THROWS_AS(pinv_solve(a, Matrix::identity(2)), PreconditionError);
  CHECK_THROWS_AS(pinv_solve(Matrix::identity(2), Matrix::identity(2), 2.0), PreconditionError);
}

TEST_CASE("standardize_columns: symmetric column becomes (-1, 0, 1)") {
  Matrix m(3, 1);
  m.at(0, 0) = 1.0;
  m.at(1, 0) = 2.0;
  m.at(2, 0) = 3.0;
  const Standardized st = standardize_columns(m);
  CHECK(st.values.at(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(st.values.at(1, 0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(st.values.at(2, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(st.means[0] == doctest::Approx(2.0));
  CHECK(st.stds[0] == doctest::Approx(1.0));
}

TEST_CASE("standardize_columns: constant column zeroed with std 0") {
  Matrix m(3, 2);
  for (std::size_t i = 0; i < 3; ++i) {
    m.at(i, 0) = 5.0;
    m.at(i, 1) = static_cast<double>(i);
  }
  const Standardized st = standardize_columns(m);
  CHECK(st.stds[0] == 0.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(st.values.at(i, 0) == 0.0);
  CHECK(st.stds[1] > 0.0);
}

TEST_CASE("standardize_columns: random matrix has tiny column means and unit stds") {
  SplitMix64 rng(60);
  const Matrix m = random_matrix(50, 4, rng);
  const Standardized st = standardize_columns(m);
  for (std::size_t j = 0; j < 4; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 50; ++i) mean += st.values.at(i, j);
    mean /= 50.0;
    CHECK(std::abs(mean) <= 1e-12);
    double ss = 0.0;
    for (std::size_t i = 0; i < 50; ++i) ss += st.values.at(i, j) * st.values.at(i, j);
    CHECK(std::sqrt(ss / 49.0) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("standardize_columns is idempotent on non-constant columns") {
  SplitMix64 rng(61);
  const Matrix m = random_matrix(20, 3, rng);
  const Standardized once = standardize_columns(m);
  const Standardized twice = standardize_columns(once.values);
  CHECK(max_abs_diff(once.values, twice.values) <= 1e-12);
}
