#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "compaudit/additive.hpp"
#include "compaudit/cca.hpp"
#include "compaudit/dataset.hpp"

namespace compaudit {

enum class Statistic { cca_rho, loo_cosine, loo_l2, loo_hits };

const char* statistic_name(Statistic s);
Statistic statistic_from_name(const std::string& name);

enum class Direction { greater_is_extreme, smaller_is_extreme };

// Monte Carlo permutation test result. Scalar statistics use length-1
// vectors; cca_rho carries one entry per canonical component, each tested
// against its own permuted distribution.
struct PermutationOutcome {
  std::string statistic_name;
  std::vector<double> t_real;
  std::vector<std::vector<double>> permuted_samples;  // n_permutations x len(t_real)
  std::vector<double> p_values;  // add-one estimator (1 + c) / (N + 1)
  Direction direction = Direction::greater_is_extreme;
  std::size_t n_permutations = 0;
  std::uint64_t master_seed = 0;
};

struct TestConfig {
  std::size_t hits_k = 5;
  Metric metric = Metric::cosine;
  double rcond = 0.0;
  double ridge = 1e-8;
  std::size_t k_max = 0;
  int threads = 0;
};

// Shuffles the row order of the values (entity ids stay put), breaking the
// pairing with the embedding matrix. Fisher-Yates driven by SplitMix64(seed).
AttributeMatrix permute_rows(const AttributeMatrix& a, std::uint64_t seed);

// Runs one statistic: t_real on the given pairing, then n permuted samples
// with per-permutation seeds derive_seed(master_seed, i).
PermutationOutcome run_test(const AlignedDataset& d, Statistic statistic, std::size_t n,
                            std::uint64_t master_seed, const TestConfig& config = {});

// LOO statistics share the permuted passes: one LOO sweep per permutation
// yields all requested statistics, with outcomes identical to separate
// run_test calls (same seed family).
struct LooTestBundle {
  LooReport real;
  std::vector<PermutationOutcome> outcomes;
  // Permuted-sample means of each report aggregate, for sweep tables.
  double mean_cosine_permuted = 0.0;
  double mean_l2_permuted = 0.0;
  double hits_permuted = 0.0;
};

LooTestBundle run_loo_tests(const AlignedDataset& d, std::span<const Statistic> statistics,
                            std::size_t n, std::uint64_t master_seed,
                            const TestConfig& config = {});

}  // namespace compaudit
