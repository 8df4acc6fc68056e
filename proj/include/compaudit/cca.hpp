#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "compaudit/dataset.hpp"
#include "compaudit/matrix.hpp"

namespace compaudit {

struct CcaResult {
  Matrix w_a;  // n x k; rows of dropped attribute columns are zero
  Matrix w_u;  // m x k
  std::vector<double> correlations;  // rho_k, non-increasing, in [0, 1]
  std::size_t k = 0;
  std::vector<std::string> dropped_attribute_columns;
};

struct CcaOptions {
  std::size_t k_max = 0;  // 0 = min effective rank
  double ridge = 1e-8;    // diagonal inflation before whitening
  double rcond = 0.0;     // 0 = default cutoff
};

// Pearson correlation coefficient: centered dot product over the product of
// centered norms. Errors on constant input.
double pearson(std::span<const double> x, std::span<const double> y);

// Canonical correlation analysis between the binary attribute view and the
// embedding view. Both views are standardized, whitened through their SVDs
// (with the ridge term on the covariance diagonal), and the canonical pairs
// come from the SVD of the whitened cross-covariance. The reported rho_k are
// recomputed from the returned projections with pearson().
CcaResult fit_cca(const AlignedDataset& d, const CcaOptions& opts = {});

}  // namespace compaudit
