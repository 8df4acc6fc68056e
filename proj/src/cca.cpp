#include "compaudit/cca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "compaudit/error.hpp"
#include "compaudit/kernels.hpp"
#include "compaudit/linalg.hpp"

namespace compaudit {
namespace {

struct WhitenedView {
  Matrix basis;               // q x r orthonormal columns (left singular vectors)
  Matrix weights;             // p x r: maps original columns to whitened coords
  std::vector<double> shrink; // per-component whitening scale sigma_j * g_j
};

// Standardize, SVD, and keep components above the rcond cutoff. `weights`
// already folds in the 1/std column scaling, so raw-matrix projections give
// the canonical variates up to an additive constant (irrelevant to Pearson).
WhitenedView whiten(const Matrix& m, double ridge, double rcond) {
  const Standardized st = standardize_columns(m);
  const Svd svd = jacobi_svd(st.values);
  const double q1 = static_cast<double>(m.rows - 1);
  const double cutoff =
      (rcond > 0.0 ? rcond : default_rcond(m.rows, m.cols)) *
      (svd.singular_values.empty() ? 0.0 : svd.singular_values[0]);

  std::size_t r = 0;
  while (r < svd.singular_values.size() && svd.singular_values[r] > cutoff &&
         svd.singular_values[r] > 0.0) {
    ++r;
  }

  WhitenedView v;
  v.basis = Matrix(m.rows, r);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < r; ++j) v.basis.at(i, j) = svd.u_basis.at(i, j);

  v.weights = Matrix(m.cols, r);
  v.shrink.resize(r);
  for (std::size_t j = 0; j < r; ++j) {
    const double sv = svd.singular_values[j];
    const double g = 1.0 / std::sqrt(sv * sv / q1 + ridge);
    v.shrink[j] = sv * g;
    for (std::size_t c = 0; c < m.cols; ++c) {
      const double sd = st.stds[c];
      v.weights.at(c, j) = sd > 0.0 ? svd.v_basis.at(c, j) * g / sd : 0.0;
    }
  }
  return v;
}

// In-place ordered Gram-Schmidt on the columns of c. Keeps the leading
// direction, so component order survives; with a tiny ridge the input is
// already near-orthonormal and this is a near-identity correction that makes
// the mutual-uncorrelatedness contract exact.
void orthonormalize_columns(Matrix& c) {
  for (std::size_t j = 0; j < c.cols; ++j) {
    for (std::size_t p = 0; p < j; ++p) {
      double proj = 0.0;
      for (std::size_t i = 0; i < c.rows; ++i) proj += c.at(i, p) * c.at(i, j);
      for (std::size_t i = 0; i < c.rows; ++i) c.at(i, j) -= proj * c.at(i, p);
    }
    double nrm = 0.0;
    for (std::size_t i = 0; i < c.rows; ++i) nrm += c.at(i, j) * c.at(i, j);
    nrm = std::sqrt(nrm);
    if (nrm > 0.0) {
      for (std::size_t i = 0; i < c.rows; ++i) c.at(i, j) /= nrm;
    }
  }
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw_precondition("LengthMismatch", "pearson: vectors differ in length");
  }
  const std::size_t q = x.size();
  if (q < 2) throw_precondition("TooFewRows", "pearson: need at least 2 samples");

  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < q; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(q);
  my /= static_cast<double>(q);

  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < q; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw_precondition("ConstantInput", "pearson: constant input vector");
  }
  return sxy / (std::sqrt(sxx) * std::sqrt(syy));
}

CcaResult fit_cca(const AlignedDataset& d, const CcaOptions& opts) {
  const Matrix& a_full = d.attributes.values;
  const Matrix& u = d.embeddings.values;
  const std::size_t q = a_full.rows;
  if (q < 3) throw_precondition("TooFewRows", "fit_cca: need q >= 3");
  if (!a_full.all_finite() || !u.all_finite()) {
    throw_precondition("NonFiniteInput", "fit_cca: input contains NaN or Inf");
  }

  // Zero-variance attribute columns make the per-component Pearson
  // correlation undefined; drop them up front and report which.
  CcaResult res;
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < a_full.cols; ++j) {
    bool constant = true;
    for (std::size_t i = 1; i < q && constant; ++i) {
      constant = a_full.at(i, j) == a_full.at(0, j);
    }
    if (constant) {
      res.dropped_attribute_columns.push_back(d.attributes.attribute_names[j]);
    } else {
      kept.push_back(j);
    }
  }
  if (kept.empty()) {
    throw_precondition("AllColumnsConstant", "fit_cca: every attribute column is constant");
  }
  Matrix a(q, kept.size());
  for (std::size_t i = 0; i < q; ++i)
    for (std::size_t j = 0; j < kept.size(); ++j) a.at(i, j) = a_full.at(i, kept[j]);

  bool u_has_variation = false;
  for (std::size_t j = 0; j < u.cols && !u_has_variation; ++j) {
    for (std::size_t i = 1; i < q; ++i) {
      if (u.at(i, j) != u.at(0, j)) {
        u_has_variation = true;
        break;
      }
    }
  }
  if (!u_has_variation) {
    throw_precondition("AllColumnsConstant", "fit_cca: every embedding column is constant");
  }

  const WhitenedView va = whiten(a, opts.ridge, opts.rcond);
  const WhitenedView vu = whiten(u, opts.ridge, opts.rcond);
  const std::size_t ra = va.basis.cols;
  const std::size_t ru = vu.basis.cols;
  std::size_t k = std::min(ra, ru);
  if (opts.k_max > 0) k = std::min(k, opts.k_max);
  if (k == 0) throw_precondition("AllColumnsConstant", "fit_cca: no usable components");

  // Whitened cross-covariance in the left-basis coordinates.
  Matrix cross = matmul_at_b(va.basis, vu.basis);  // ra x ru
  for (std::size_t i = 0; i < ra; ++i)
    for (std::size_t j = 0; j < ru; ++j)
      cross.at(i, j) *= va.shrink[i] * vu.shrink[j] / static_cast<double>(q - 1);

  const Svd tsvd = jacobi_svd(cross);

  // Projection coordinates in each orthonormal basis; orthonormalize so the
  // components are exactly mutually uncorrelated.
  Matrix ca(ra, k);
  Matrix cu(ru, k);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < ra; ++i) ca.at(i, j) = va.shrink[i] * tsvd.u_basis.at(i, j);
    for (std::size_t i = 0; i < ru; ++i) cu.at(i, j) = vu.shrink[i] * tsvd.v_basis.at(i, j);
  }
  orthonormalize_columns(ca);
  orthonormalize_columns(cu);

  // Back out weights against the original matrices.
  Matrix wa_kept = matmul(va.weights, ca);  // kept-cols x k
  Matrix wu = matmul(vu.weights, cu);       // m x k

  res.w_a = Matrix(a_full.cols, k, 0.0);
  for (std::size_t j = 0; j < kept.size(); ++j)
    for (std::size_t c = 0; c < k; ++c) res.w_a.at(kept[j], c) = wa_kept.at(j, c);
  res.w_u = std::move(wu);
  res.k = k;

  // Recompute every rho_k from the returned projections.
  Matrix proj_a = matmul(a_full, res.w_a);  // q x k
  Matrix proj_u = matmul(u, res.w_u);
  std::vector<double> xs(q), ys(q);
  res.correlations.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < q; ++i) {
      xs[i] = proj_a.at(i, c);
      ys[i] = proj_u.at(i, c);
    }
    double rho = pearson(xs, ys);
    if (rho < 0.0) {
      rho = -rho;
      for (std::size_t r = 0; r < res.w_u.rows; ++r) res.w_u.at(r, c) = -res.w_u.at(r, c);
    }
    // Largest-magnitude attribute weight positive; flipping both sides
    // preserves rho.
    double best = 0.0;
    std::size_t best_r = 0;
    for (std::size_t r = 0; r < res.w_a.rows; ++r) {
      const double v = std::abs(res.w_a.at(r, c));
      if (v > best) {
        best = v;
        best_r = r;
      }
    }
    if (res.w_a.at(best_r, c) < 0.0) {
      for (std::size_t r = 0; r < res.w_a.rows; ++r) res.w_a.at(r, c) = -res.w_a.at(r, c);
      for (std::size_t r = 0; r < res.w_u.rows; ++r) res.w_u.at(r, c) = -res.w_u.at(r, c);
    }
    res.correlations[c] = rho;
  }

  // The whitened SVD already orders by correlation; enforce it in case the
  // pearson recomputation perturbed a near-tie.
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return res.correlations[x] > res.correlations[y];
  });
  if (!std::is_sorted(order.begin(), order.end())) {
    CcaResult sorted = res;
    for (std::size_t c = 0; c < k; ++c) {
      sorted.correlations[c] = res.correlations[order[c]];
      for (std::size_t r = 0; r < res.w_a.rows; ++r) sorted.w_a.at(r, c) = res.w_a.at(r, order[c]);
      for (std::size_t r = 0; r < res.w_u.rows; ++r) sorted.w_u.at(r, c) = res.w_u.at(r, order[c]);
    }
    res = std::move(sorted);
  }
  return res;
}

}  // namespace compaudit
