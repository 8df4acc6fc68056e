#include "compaudit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "compaudit/error.hpp"
#include "compaudit/kernels.hpp"
#include "compaudit/linalg.hpp"
#include "compaudit/rng.hpp"

namespace compaudit {
namespace {

std::string padded_label(const char* prefix, std::size_t index, std::size_t max_index) {
  std::size_t width = 1;
  for (std::size_t v = max_index; v >= 10; v /= 10) ++width;
  std::string digits = std::to_string(index);
  return prefix + std::string(width - digits.size(), '0') + digits;
}

// True if C(n, k) >= 2 (computed with early exit; no overflow concerns).
bool at_least_two_combinations(std::size_t n, std::size_t k) {
  if (k == 0 || k == n) return false;
  return n >= 2;  // 0 < k < n implies C(n, k) >= n >= 2
}

// Full column rank after deleting any one row <=> all leverage scores
// a_i G^{-1} a_i^T stay strictly below 1.
bool rank_safe_after_any_deletion(const Matrix& a) {
  const Svd eig = jacobi_svd(matmul_at_b(a, a));
  const std::size_t n = a.cols;
  if (eig.singular_values.empty() || eig.singular_values[n - 1] <= 0.0) return false;
  const double lmax = eig.singular_values[0];
  const double lmin = eig.singular_values[n - 1];
  if (lmin <= 1e-10 * lmax) return false;

  for (std::size_t i = 0; i < a.rows; ++i) {
    // leverage = sum_c (v_c . a_i)^2 / lambda_c
    double lev = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      double proj = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (a.at(i, j) == 1.0) proj += eig.v_basis.at(j, c);
      }
      lev += proj * proj / eig.singular_values[c];
    }
    if (lev >= 1.0 - 1e-6) return false;
  }
  return true;
}

}  // namespace

SynthData generate(const SynthSpec& spec) {
  if (spec.q < 1 || spec.n < 1 || spec.m < 1 || spec.active_per_row < 1 ||
      spec.active_per_row > spec.n || spec.noise_sigma < 0.0) {
    throw_precondition("InfeasibleSpec", "generate: spec violates its invariants");
  }
  if (!at_least_two_combinations(spec.n, spec.active_per_row)) {
    throw_precondition("InfeasibleSpec",
                       "generate: fewer than two distinct attribute combinations exist");
  }

  SplitMix64 rng(spec.seed);
  Matrix a(spec.q, spec.n);
  std::vector<std::size_t> pool(spec.n);
  bool ok = false;
  for (int attempt = 0; attempt < 10000 && !ok; ++attempt) {
    std::fill(a.data.begin(), a.data.end(), 0.0);
    for (std::size_t i = 0; i < spec.q; ++i) {
      // Size-k subset via a partial Fisher-Yates over the index pool.
      for (std::size_t j = 0; j < spec.n; ++j) pool[j] = j;
      for (std::size_t j = 0; j < spec.active_per_row; ++j) {
        const std::size_t pick = j + static_cast<std::size_t>(rng.next_below(spec.n - j));
        std::swap(pool[j], pool[pick]);
      }
      for (std::size_t j = 0; j < spec.active_per_row; ++j) a.at(i, pool[j]) = 1.0;
    }

    bool coverage = true;
    for (std::size_t j = 0; j < spec.n && coverage; ++j) {
      std::size_t active = 0;
      for (std::size_t i = 0; i < spec.q; ++i) active += a.at(i, j) == 1.0 ? 1 : 0;
      coverage = active >= 2;
    }
    ok = coverage && rank_safe_after_any_deletion(a);
  }
  if (!ok) {
    throw_precondition("InfeasibleSpec",
                       "generate: could not draw a well-posed attribute matrix in 10000 attempts");
  }

  Matrix truth(spec.n, spec.m);
  for (double& v : truth.data) v = rng.next_normal();

  Matrix u(spec.q, spec.m, 0.0);
  for (std::size_t i = 0; i < spec.q; ++i) {
    double* row = u.row(i);
    for (std::size_t j = 0; j < spec.n; ++j) {
      if (a.at(i, j) == 1.0) kernels::axpy(1.0, truth.row(j), row, spec.m);
    }
  }
  // Noise is drawn even at sigma = 0 so datasets with the same seed stay
  // paired across sigma values (identical A, X*, and noise draws).
  for (std::size_t idx = 0; idx < u.data.size(); ++idx) {
    u.data[idx] += spec.noise_sigma * rng.next_normal();
  }

  SynthData out;
  out.dataset.attributes.values = std::move(a);
  out.dataset.embeddings.values = std::move(u);
  for (std::size_t i = 0; i < spec.q; ++i) {
    out.dataset.attributes.entity_ids.push_back(padded_label("e", i, spec.q - 1));
  }
  out.dataset.embeddings.entity_ids = out.dataset.attributes.entity_ids;
  for (std::size_t j = 0; j < spec.n; ++j) {
    out.dataset.attributes.attribute_names.push_back(padded_label("a", j, spec.n - 1));
  }
  out.truth.x = std::move(truth);
  out.truth.attribute_names = out.dataset.attributes.attribute_names;
  return out;
}

}  // namespace compaudit
