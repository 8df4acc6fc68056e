#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "compaudit/cca.hpp"
#include "compaudit/dataset.hpp"
#include "compaudit/permtest.hpp"

namespace compaudit {

enum class GroupMode { automatic, on, off };
enum class PrepOrder { group_first, normalize_first };

struct SweepConfig {
  std::size_t permutations = 100;
  std::uint64_t master_seed = 0;
  std::size_t hits_k = 5;
  Metric metric = Metric::cosine;
  double rcond = 0.0;
  double ridge = 1e-8;
  std::size_t k_max = 0;
  GroupMode group = GroupMode::automatic;
  bool normalize = false;
  PrepOrder order = PrepOrder::group_first;
  bool with_cca = false;
  int threads = 0;
};

struct SweepPoint {
  std::string label;
  LooReport loo;
  double mean_cosine_permuted = 0.0;
  double mean_l2_permuted = 0.0;
  double hits_permuted = 0.0;
  std::optional<CcaResult> cca;
  // (real - permuted) / (1 - permuted); absent when permuted >= 1.
  std::optional<double> normalized_cosine;
  // 100 * (real - permuted) / permuted; absent when permuted <= 0.
  std::optional<double> relative_diff_pct;
  std::size_t effective_q = 0;
};

std::pair<std::optional<double>, std::optional<double>> normalized_metrics(double real,
                                                                           double permuted);

// Shared preprocessing used by the sweep and the additive/linearity commands:
// align, then group / normalize per config.
struct PreparedDataset {
  AlignedDataset data;
  bool grouped = false;
  std::size_t q_before_grouping = 0;
  std::vector<std::string> dropped_from_attributes;
  std::vector<std::string> dropped_from_embeddings;
};

PreparedDataset prepare_dataset(const AttributeMatrix& attributes, const EmbeddingMatrix& embeddings,
                                GroupMode group, bool normalize, PrepOrder order);

// One diagnostic per labelled embedding matrix, all under the same config and
// the same permutation seed family so points are directly comparable.
std::vector<SweepPoint> run_sweep(
    const AttributeMatrix& attributes,
    const std::vector<std::pair<std::string, EmbeddingMatrix>>& embeddings,
    const SweepConfig& config);

// Manifest: one `label<TAB>path` line per sweep point.
std::vector<std::pair<std::string, std::string>> load_manifest(const std::string& path);

}  // namespace compaudit
