#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "compaudit/dataset.hpp"
#include "compaudit/matrix.hpp"

namespace compaudit {

enum class Metric { cosine, euclidean };

const char* metric_name(Metric m);
Metric metric_from_name(const std::string& name);

struct AttributeEmbeddings {
  Matrix x;  // n x m
  std::vector<std::string> attribute_names;
};

struct LooRecord {
  std::string entity_id;
  double l2_loss = 0.0;       // ||u_hat - u||^2
  double cosine = 0.0;        // 0 and flagged when a norm vanishes
  std::size_t retrieval_rank = 0;  // 1 = best
  bool hit_at_k = false;
  bool zero_norm_flagged = false;
};

struct LooReport {
  std::vector<LooRecord> records;  // one per entity, in row order
  double mean_l2 = 0.0;
  double mean_cosine = 0.0;
  double hits_at_k = 0.0;
  std::size_t k = 0;
  Metric distance_metric = Metric::cosine;
  std::size_t flagged_zero_norm_count = 0;
};

struct LooOptions {
  std::size_t hits_k = 5;
  Metric metric = Metric::cosine;
  double rcond = 0.0;  // 0 = default
  int threads = 0;     // 0 = resolve from environment
};

// Least-squares fit of the attribute-embedding matrix: X = pinv(A) * U.
AttributeEmbeddings solve_attribute_embeddings(const AlignedDataset& d, double rcond = 0.0);

// a_row * X.
std::vector<double> predict(const AttributeEmbeddings& x, std::span<const double> a_row);

// Rank of corpus row `target_index` by proximity to `query`: 1 + the number
// of rows strictly closer, where an equal distance at a lower row index
// counts as closer.
std::size_t retrieval_rank(std::span<const double> query, const Matrix& corpus,
                           std::size_t target_index, Metric metric);

// Per-entity leave-one-out: refit on the remaining rows, reconstruct the
// held-out embedding from its attribute row, and score it.
LooReport leave_one_out(const AlignedDataset& d, const LooOptions& opts = {});

// Shared state for running many LOO passes over the same entity set with
// reshuffled attribute rows (the permutation-test inner loop). The per-row
// solves depend only on the row multiset, so they are cached once; each pass
// then costs one cross-product build plus the retrieval scan.
class LooEngine {
 public:
  LooEngine(const AlignedDataset& d, const LooOptions& opts);
  ~LooEngine();
  LooEngine(const LooEngine&) = delete;
  LooEngine& operator=(const LooEngine&) = delete;

  // `attributes` must hold the same row multiset as the constructor dataset
  // (e.g. the output of permute_rows).
  LooReport run(const AttributeMatrix& attributes) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace compaudit
