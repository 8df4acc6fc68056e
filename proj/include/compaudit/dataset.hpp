#pragma once

#include <string>
#include <vector>

#include "compaudit/matrix.hpp"

namespace compaudit {

// Binary entity x attribute indicator matrix. Entries are exactly 0 or 1.
struct AttributeMatrix {
  std::vector<std::string> entity_ids;
  std::vector<std::string> attribute_names;
  Matrix values;  // q x n
};

// Continuous entity x dimension matrix. Entries are finite.
struct EmbeddingMatrix {
  std::vector<std::string> entity_ids;
  Matrix values;  // q x m
};

// Row-aligned pair: attributes.entity_ids == embeddings.entity_ids.
struct AlignedDataset {
  AttributeMatrix attributes;
  EmbeddingMatrix embeddings;
};

// Degenerate columns spotted at ingest. They are kept in the matrix;
// downstream consumers decide what to do with them.
struct ValidationReport {
  std::vector<std::string> constant_attribute_columns;  // all-0 or all-1
};

// CSV: UTF-8, comma-separated, mandatory header whose first cell is "id".
AttributeMatrix load_attributes_csv(const std::string& path);
EmbeddingMatrix load_embeddings_csv(const std::string& path);

void save_attributes_csv(const std::string& path, const AttributeMatrix& a);
void save_matrix_csv(const std::string& path, const std::vector<std::string>& row_ids,
                     const std::vector<std::string>& col_names, const Matrix& values);

// "CMPX" binary format: magic "CMPX", little-endian u32 rows / cols /
// id-block length, newline-separated UTF-8 ids, then rows*cols f64 row-major.
EmbeddingMatrix load_binary(const std::string& path);
void save_binary(const std::string& path, const EmbeddingMatrix& e);

// Word-vector text table: one `token v_1 ... v_m` line per entity.
EmbeddingMatrix load_embedding_table(const std::string& path);

// Sniffs CMPX magic / .csv extension / table fallback.
EmbeddingMatrix load_embeddings_any(const std::string& path);

ValidationReport validate(const AttributeMatrix& a);

struct AlignResult {
  AlignedDataset dataset;
  std::vector<std::string> dropped_from_attributes;
  std::vector<std::string> dropped_from_embeddings;
};

// Restricts both matrices to their common ids, reordered lexicographically.
AlignResult align(const AttributeMatrix& a, const EmbeddingMatrix& u);

// One row per distinct attribute combination; embeddings become the group
// mean. The group id is the sorted active attribute names joined by "+",
// and rows come out sorted by that key.
AlignedDataset group_by_combination(const AlignedDataset& d);

bool has_duplicate_attribute_rows(const AttributeMatrix& a);

// Scales every row to unit Euclidean norm.
EmbeddingMatrix normalize_rows(const EmbeddingMatrix& u);

}  // namespace compaudit
