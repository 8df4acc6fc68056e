#include "compaudit/additive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "compaudit/error.hpp"
#include "compaudit/kernels.hpp"
#include "compaudit/linalg.hpp"
#include "compaudit/parallel.hpp"

namespace compaudit {

const char* metric_name(Metric m) {
  return m == Metric::cosine ? "cosine" : "euclidean";
}

Metric metric_from_name(const std::string& name) {
  if (name == "cosine") return Metric::cosine;
  if (name == "euclidean") return Metric::euclidean;
  throw_precondition("UnknownMetric", "metric must be cosine or euclidean, got '" + name + "'");
}

AttributeEmbeddings solve_attribute_embeddings(const AlignedDataset& d, double rcond) {
  if (d.attributes.values.rows < 2) {
    throw_precondition("TooFewRows", "solve_attribute_embeddings: need q >= 2");
  }
  AttributeEmbeddings out;
  out.x = pinv_solve(d.attributes.values, d.embeddings.values, rcond);
  out.attribute_names = d.attributes.attribute_names;
  return out;
}

std::vector<double> predict(const AttributeEmbeddings& x, std::span<const double> a_row) {
  if (a_row.size() != x.x.rows) {
    throw_precondition("LengthMismatch", "predict: attribute row length does not match X");
  }
  std::vector<double> u_hat(x.x.cols, 0.0);
  for (std::size_t j = 0; j < a_row.size(); ++j) {
    if (a_row[j] != 0.0) kernels::axpy(a_row[j], x.x.row(j), u_hat.data(), x.x.cols);
  }
  return u_hat;
}

namespace {

// "Closer" under the tie rule: strictly better score, or an equal score at a
// lower row index than the target.
inline bool closer(double candidate, double target, std::size_t j, std::size_t target_index,
                   bool larger_is_closer) {
  if (larger_is_closer) {
    if (candidate > target) return true;
  } else {
    if (candidate < target) return true;
  }
  return candidate == target && j < target_index;
}

}  // namespace

std::size_t retrieval_rank(std::span<const double> query, const Matrix& corpus,
                           std::size_t target_index, Metric metric) {
  if (target_index >= corpus.rows) {
    throw_precondition("LengthMismatch", "retrieval_rank: target index out of range");
  }
  const std::size_t m = corpus.cols;
  const bool larger_is_closer = metric == Metric::cosine;
  const double qnorm = std::sqrt(kernels::sum_squares(query.data(), m));

  std::vector<double> score(corpus.rows);
  for (std::size_t j = 0; j < corpus.rows; ++j) {
    if (metric == Metric::euclidean) {
      score[j] = kernels::squared_distance(query.data(), corpus.row(j), m);
    } else {
      const double rnorm = std::sqrt(kernels::sum_squares(corpus.row(j), m));
      score[j] = (qnorm == 0.0 || rnorm == 0.0)
                     ? 0.0
                     : kernels::dot(query.data(), corpus.row(j), m) / (qnorm * rnorm);
    }
  }
  std::size_t rank = 1;
  for (std::size_t j = 0; j < corpus.rows; ++j) {
    if (j == target_index) continue;
    if (closer(score[j], score[target_index], j, target_index, larger_is_closer)) ++rank;
  }
  return rank;
}

// ---------------------------------------------------------------------------
// LooEngine

struct LooEngine::Impl {
  LooOptions opts;
  std::size_t q = 0, n = 0, m = 0;
  Matrix u;                       // q x m, the fixed embedding side
  std::vector<double> u_norms;    // per-row Euclidean norm
  std::vector<double> u_sqnorms;  // per-row squared norm
  std::vector<std::string> entity_ids;

  // Per distinct attribute-row content: s = pinv(G - a a^T) a and t = s.a,
  // where G = A^T A. These depend only on the row multiset, never on the
  // pairing, so one cache serves the real pass and every permuted pass.
  std::unordered_map<std::string, std::size_t> row_lookup;
  Matrix s_cache;                 // #distinct x n
  std::vector<double> t_cache;    // #distinct

  std::string row_pattern(const Matrix& a, std::size_t i) const {
    std::string key(n, '0');
    for (std::size_t j = 0; j < n; ++j) key[j] = a.at(i, j) == 1.0 ? '1' : '0';
    return key;
  }
};

namespace {

// Eigen-cutoff for the Gram-route pseudo-inverse. Gram eigenvalues square
// the singular values, so numerically-zero directions surface around
// eps * lambda_max; the user rcond maps to rcond^2 in lambda space.
double gram_cutoff(double lambda_max, double rcond, std::size_t n) {
  const double eps = std::numeric_limits<double>::epsilon();
  const double floor = 4.0 * static_cast<double>(n) * eps;
  return lambda_max * std::max(rcond * rcond, floor);
}

}  // namespace

LooEngine::LooEngine(const AlignedDataset& d, const LooOptions& opts)
    : impl_(std::make_unique<Impl>()) {
  const Matrix& a = d.attributes.values;
  const Matrix& u = d.embeddings.values;
  if (a.rows < 3) throw_precondition("TooFewRows", "leave_one_out: need q >= 3");
  if (!u.all_finite() || !a.all_finite()) {
    throw_precondition("NonFiniteInput", "leave_one_out: input contains NaN or Inf");
  }
  Impl& im = *impl_;
  im.opts = opts;
  im.q = a.rows;
  im.n = a.cols;
  im.m = u.cols;
  im.u = u;
  im.entity_ids = d.embeddings.entity_ids;
  im.u_sqnorms.resize(im.q);
  im.u_norms.resize(im.q);
  for (std::size_t i = 0; i < im.q; ++i) {
    im.u_sqnorms[i] = kernels::sum_squares(u.row(i), im.m);
    im.u_norms[i] = std::sqrt(im.u_sqnorms[i]);
  }

  // Exact integer Gram of the binary attribute matrix.
  std::vector<long long> counts(im.n * im.n, 0);
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < im.q; ++i) {
    active.clear();
    for (std::size_t j = 0; j < im.n; ++j) {
      if (a.at(i, j) == 1.0) active.push_back(j);
    }
    for (const std::size_t j : active)
      for (const std::size_t k : active) counts[j * im.n + k] += 1;
  }
  Matrix gram(im.n, im.n);
  for (std::size_t idx = 0; idx < counts.size(); ++idx) {
    gram.data[idx] = static_cast<double>(counts[idx]);
  }

  std::vector<std::string> distinct;
  for (std::size_t i = 0; i < im.q; ++i) {
    const std::string key = im.row_pattern(a, i);
    if (im.row_lookup.emplace(key, distinct.size()).second) distinct.push_back(key);
  }

  im.s_cache = Matrix(distinct.size(), im.n);
  im.t_cache.resize(distinct.size());
  const double rcond = opts.rcond > 0.0 ? opts.rcond : default_rcond(im.q, im.n);

  parallel_for(0, distinct.size(), opts.threads, [&](std::size_t idx) {
    const std::string& key = distinct[idx];
    Matrix g = gram;
    for (std::size_t j = 0; j < im.n; ++j) {
      if (key[j] != '1') continue;
      for (std::size_t k = 0; k < im.n; ++k) {
        if (key[k] == '1') g.at(j, k) -= 1.0;
      }
    }
    const Svd eig = jacobi_svd(g);  // symmetric PSD: this is its eigensystem
    const double cutoff =
        gram_cutoff(eig.singular_values.empty() ? 0.0 : eig.singular_values[0], rcond, im.n);

    // s = V f(Lambda) V^T a  with f the cutoff reciprocal.
    std::vector<double> va(im.n, 0.0);
    for (std::size_t c = 0; c < im.n; ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < im.n; ++j) {
        if (key[j] == '1') acc += eig.v_basis.at(j, c);
      }
      va[c] = eig.singular_values[c] > cutoff ? acc / eig.singular_values[c] : 0.0;
    }
    double* s = im.s_cache.row(idx);
    for (std::size_t j = 0; j < im.n; ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < im.n; ++c) acc += eig.v_basis.at(j, c) * va[c];
      s[j] = acc;
    }
    double t = 0.0;
    for (std::size_t j = 0; j < im.n; ++j) {
      if (key[j] == '1') t += s[j];
    }
    im.t_cache[idx] = t;
  });
}

LooEngine::~LooEngine() = default;

LooReport LooEngine::run(const AttributeMatrix& attributes) const {
  const Impl& im = *impl_;
  const Matrix& a = attributes.values;
  if (a.rows != im.q || a.cols != im.n) {
    throw_precondition("LengthMismatch", "LooEngine::run: attribute shape changed");
  }

  // Cross-product H = A^T U, accumulated per attribute so each output row has
  // a fixed summation order regardless of thread schedule.
  std::vector<std::vector<std::size_t>> column_rows(im.n);
  for (std::size_t i = 0; i < im.q; ++i) {
    for (std::size_t j = 0; j < im.n; ++j) {
      if (a.at(i, j) == 1.0) column_rows[j].push_back(i);
    }
  }
  Matrix h(im.n, im.m, 0.0);
  parallel_for(0, im.n, im.opts.threads, [&](std::size_t j) {
    double* hj = h.row(j);
    for (const std::size_t i : column_rows[j]) {
      kernels::axpy(1.0, im.u.row(i), hj, im.m);
    }
  });

  std::vector<std::size_t> fold_cache(im.q);
  for (std::size_t i = 0; i < im.q; ++i) {
    const std::string key = im.row_pattern(a, i);
    const auto it = im.row_lookup.find(key);
    if (it == im.row_lookup.end()) {
      throw_precondition("LengthMismatch", "LooEngine::run: attribute row multiset changed");
    }
    fold_cache[i] = it->second;
  }

  LooReport report;
  report.k = im.opts.hits_k;
  report.distance_metric = im.opts.metric;
  report.records.resize(im.q);

  const bool cos_metric = im.opts.metric == Metric::cosine;
  constexpr std::size_t kTile = 128;
  const std::size_t tiles = (im.q + kTile - 1) / kTile;

  parallel_for(0, tiles, im.opts.threads, [&](std::size_t tile) {
    const std::size_t begin = tile * kTile;
    const std::size_t end = std::min(begin + kTile, im.q);
    const std::size_t count = end - begin;

    // Reconstruction u_hat_i = s^T H - (s.a) u_i for every fold in the tile.
    Matrix preds(count, im.m, 0.0);
    for (std::size_t f = 0; f < count; ++f) {
      const std::size_t i = begin + f;
      const double* s = im.s_cache.row(fold_cache[i]);
      double* pred = preds.row(f);
      for (std::size_t j = 0; j < im.n; ++j) {
        if (s[j] != 0.0) kernels::axpy(s[j], h.row(j), pred, im.m);
      }
      kernels::axpy(-im.t_cache[fold_cache[i]], im.u.row(i), pred, im.m);
    }

    // All-pairs dot products of the tile against the corpus.
    Matrix scores(count, im.q);
    kernels::dot_block(preds.data.data(), count, im.u.data.data(), im.q, im.m,
                       scores.data.data(), im.q);

    for (std::size_t f = 0; f < count; ++f) {
      const std::size_t i = begin + f;
      const double* pred = preds.row(f);
      const double* dots = scores.row(f);
      LooRecord rec;
      rec.entity_id = im.entity_ids[i];
      rec.l2_loss = kernels::squared_distance(pred, im.u.row(i), im.m);

      const double pred_sq = kernels::sum_squares(pred, im.m);
      const double pred_norm = std::sqrt(pred_sq);
      if (pred_norm == 0.0 || im.u_norms[i] == 0.0) {
        rec.cosine = 0.0;
        rec.zero_norm_flagged = true;
      } else {
        rec.cosine = dots[i] / (pred_norm * im.u_norms[i]);
      }

      std::size_t rank = 1;
      if (cos_metric) {
        const double target = (pred_norm == 0.0 || im.u_norms[i] == 0.0)
                                  ? 0.0
                                  : dots[i] / (pred_norm * im.u_norms[i]);
        for (std::size_t j = 0; j < im.q; ++j) {
          if (j == i) continue;
          const double sim = (pred_norm == 0.0 || im.u_norms[j] == 0.0)
                                 ? 0.0
                                 : dots[j] / (pred_norm * im.u_norms[j]);
          if (sim > target || (sim == target && j < i)) ++rank;
        }
      } else {
        const double target = pred_sq - 2.0 * dots[i] + im.u_sqnorms[i];
        for (std::size_t j = 0; j < im.q; ++j) {
          if (j == i) continue;
          const double dist = pred_sq - 2.0 * dots[j] + im.u_sqnorms[j];
          if (dist < target || (dist == target && j < i)) ++rank;
        }
      }
      rec.retrieval_rank = rank;
      rec.hit_at_k = rank <= im.opts.hits_k;
      report.records[i] = std::move(rec);
    }
  });

  double sum_l2 = 0.0;
  double sum_cos = 0.0;
  std::size_t hits = 0;
  for (const LooRecord& rec : report.records) {
    sum_l2 += rec.l2_loss;
    sum_cos += rec.cosine;
    if (rec.hit_at_k) ++hits;
    if (rec.zero_norm_flagged) ++report.flagged_zero_norm_count;
  }
  report.mean_l2 = sum_l2 / static_cast<double>(im.q);
  report.mean_cosine = sum_cos / static_cast<double>(im.q);
  report.hits_at_k = static_cast<double>(hits) / static_cast<double>(im.q);
  return report;
}

LooReport leave_one_out(const AlignedDataset& d, const LooOptions& opts) {
  LooEngine engine(d, opts);
  return engine.run(d.attributes);
}

}  // namespace compaudit
