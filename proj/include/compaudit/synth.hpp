#pragma once

#include <cstddef>
#include <cstdint>

#include "compaudit/additive.hpp"
#include "compaudit/dataset.hpp"

namespace compaudit {

// Planted additive dataset: A has `active_per_row` ones per row, U = A X* +
// noise_sigma * N(0,1). The ground-truth X* is returned for oracle tests.
struct SynthSpec {
  std::size_t q = 200;
  std::size_t n = 12;
  std::size_t m = 32;
  std::size_t active_per_row = 3;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

struct SynthData {
  AlignedDataset dataset;
  AttributeEmbeddings truth;
};

// Rejection-resamples A until every attribute column has at least two active
// rows and A keeps full column rank after deleting any single row; errors
// after 10000 attempts.
SynthData generate(const SynthSpec& spec);

}  // namespace compaudit
