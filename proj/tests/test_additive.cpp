#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "compaudit/additive.hpp"
#include "compaudit/dataset.hpp"
#include "compaudit/error.hpp"
#include "compaudit/kernels.hpp"
#include "compaudit/linalg.hpp"
#include "compaudit/rng.hpp"
#include "compaudit/synth.hpp"

using namespace compaudit;

namespace {

AlignedDataset make_dataset(const Matrix& a, const Matrix& u) {
  AlignedDataset d;
  d.attributes.values = a;
  d.embeddings.values = u;
  for (std::size_t i = 0; i < a.rows; ++i) {
    d.attributes.entity_ids.push_back("e" + std::to_string(100 + i));
  }
  d.embeddings.entity_ids = d.attributes.entity_ids;
  for (std::size_t j = 0; j < a.cols; ++j) {
    d.attributes.attribute_names.push_back("a" + std::to_string(j));
  }
  return d;
}

Matrix random_matrix(std::size_t r, std::size_t c, SplitMix64& rng) {
  Matrix m(r, c);
  for (double& v : m.data) v = rng.next_normal();
  return m;
}

}  // namespace

TEST_CASE("solve_attribute_embeddings: identity attribute matrix returns U") {
  SplitMix64 rng(41);
  const Matrix u = random_matrix(4, 3, rng);
  const AttributeEmbeddings x = solve_attribute_embeddings(make_dataset(Matrix::identity(4), u));
  for (std::size_t i = 0; i < u.data.size(); ++i) {
    CHECK(x.x.data[i] == doctest::Approx(u.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("solve_attribute_embeddings: recovers the planted X on a full-rank system") {
  SplitMix64 rng(42);
  Matrix a(8, 3, 0.0);
  for (std::size_t i = 0; i < 8; ++i) a.at(i, i % 3) = 1.0;
  a.at(0, 1) = 1.0;
  a.at(3, 2) = 1.0;
  const Matrix truth = random_matrix(3, 5, rng);
  const Matrix u = matmul(a, truth);
  const AttributeEmbeddings x = solve_attribute_embeddings(make_dataset(a, u));
  for (std::size_t i = 0; i < truth.data.size(); ++i) {
    CHECK(std::abs(x.x.data[i] - truth.data[i]) <= 1e-8);
  }
}

TEST_CASE("solve_attribute_embeddings: inconsistent system matches normal equations") {
  // 4x2 A of full column rank, 4x1 U off the column space.
  Matrix a(4, 2, 0.0);
  a.at(0, 0) = 1.0;
  a.at(1, 0) = 1.0;
  a.at(1, 1) = 1.0;
  a.at(2, 1) = 1.0;
  a.at(3, 0) = 1.0;
  Matrix u(4, 1);
  u.at(0, 0) = 1.0;
  u.at(1, 0) = 5.0;
  u.at(2, 0) = 2.0;
  u.at(3, 0) = -1.0;

  // Oracle: (A^T A)^-1 A^T u computed by hand. A^T A = [[3,1],[1,2]],
  // inverse = 1/5 [[2,-1],[-1,3]], A^T u = [5,7].
  const double expect0 = (2.0 * 5.0 - 1.0 * 7.0) / 5.0;
  const double expect1 = (-1.0 * 5.0 + 3.0 * 7.0) / 5.0;
  const AttributeEmbeddings x = solve_attribute_embeddings(make_dataset(a, u));
  CHECK(x.x.at(0, 0) == doctest::Approx(expect0).epsilon(1e-10));
  CHECK(x.x.at(1, 0) == doctest::Approx(expect1).epsilon(1e-10));
}

TEST_CASE("predict: zeros, one-hot, and additivity") {
  SplitMix64 rng(43);
  AttributeEmbeddings x;
  x.x = random_matrix(4, 6, rng);
  x.attribute_names = {"p", "q", "r", "s"};

  const std::vector<double> zeros(4, 0.0);
  for (double v : predict(x, zeros)) CHECK(v == 0.0);

  std::vector<double> onehot(4, 0.0);
  onehot[2] = 1.0;
  const auto row2 = predict(x, onehot);
  for (std::size_t j = 0; j < 6; ++j) CHECK(row2[j] == x.x.at(2, j));

  std::vector<double> a(4, 0.0), b(4, 0.0), ab(4, 0.0);
  a[0] = 1.0;
  b[3] = 1.0;
  ab[0] = 1.0;
  ab[3] = 1.0;
  const auto pa = predict(x, a);
  const auto pb = predict(x, b);
  const auto pab = predict(x, ab);
  for (std::size_t j = 0; j < 6; ++j) CHECK(pab[j] == pa[j] + pb[j]);  // exact

  CHECK_THROWS_AS(predict(x, std::vector<double>(3, 0.0)), PreconditionError);
}

TEST_CASE("retrieval_rank: identity query, tie rule, sort oracle") {
  Matrix corpus(5, 2);
  corpus.at(0, 0) = 1.0;
  corpus.at(1, 1) = 1.0;
  corpus.at(2, 0) = -1.0;
  corpus.at(3, 0) = 0.7;
  corpus.at(3, 1) = 0.7;
  corpus.at(4, 0) = 0.1;
  corpus.at(4, 1) = -0.9;

  const std::vector<double> q0{1.0, 0.0};
  CHECK(retrieval_rank(q0, corpus, 0, Metric::euclidean) == 1);
  CHECK(retrieval_rank(q0, corpus, 0, Metric::cosine) == 1);

  // Query equidistant from rows 0 and 1; target 1 loses the tie to row 0.
  Matrix two(2, 2);
  two.at(0, 0) = 1.0;
  two.at(1, 1) = 1.0;
  const std::vector<double> mid{0.5, 0.5};
  CHECK(retrieval_rank(mid, two, 1, Metric::euclidean) == 2);
  CHECK(retrieval_rank(mid, two, 0, Metric::euclidean) == 1);

  // Full-sort oracle on the 5-row corpus.
  SplitMix64 rng(44);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> query{rng.next_normal(), rng.next_normal()};
    for (std::size_t target = 0; target < 5; ++target) {
      std::vector<double> dist(5);
      for (std::size_t j = 0; j < 5; ++j) {
        dist[j] = kernels::squared_distance(query.data(), corpus.row(j), 2);
      }
      std::size_t expect = 1;
      for (std::size_t j = 0; j < 5; ++j) {
        if (j == target) continue;
        if (dist[j] < dist[target] || (dist[j] == dist[target] && j < target)) ++expect;
      }
      CHECK(retrieval_rank(query, corpus, target, Metric::euclidean) == expect);
    }
  }
}

TEST_CASE("leave_one_out: 4-entity hand fixture against exhaustive recomputation") {
  // 2 attributes, every combination except (0,0), 2-dim embeddings.
  Matrix a(4, 2, 0.0);
  a.at(0, 0) = 1.0;
  a.at(1, 1) = 1.0;
  a.at(2, 0) = 1.0;
  a.at(2, 1) = 1.0;
  a.at(3, 0) = 1.0;
  Matrix u(4, 2);
  u.at(0, 0) = 1.0;
  u.at(0, 1) = 0.2;
  u.at(1, 0) = -0.3;
  u.at(1, 1) = 1.1;
  u.at(2, 0) = 0.9;
  u.at(2, 1) = 1.4;
  u.at(3, 0) = 1.2;
  u.at(3, 1) = 0.1;
  const AlignedDataset d = make_dataset(a, u);

  LooOptions opts;
  opts.hits_k = 1;
  opts.metric = Metric::euclidean;
  const LooReport report = leave_one_out(d, opts);
  REQUIRE(report.records.size() == 4);

  for (std::size_t i = 0; i < 4; ++i) {
    // Independent fold: drop row i, solve with pinv_solve, predict, score.
    Matrix ai(3, 2), ui(3, 2);
    std::size_t r = 0;
    for (std::size_t j = 0; j < 4; ++j) {
      if (j == i) continue;
      for (int c = 0; c < 2; ++c) {
        ai.at(r, c) = a.at(j, c);
        ui.at(r, c) = u.at(j, c);
      }
      ++r;
    }
    const Matrix x = pinv_solve(ai, ui);
    double pred[2] = {0, 0};
    for (int c = 0; c < 2; ++c)
      for (int jj = 0; jj < 2; ++jj) pred[c] += a.at(i, jj) * x.at(jj, c);

    const double l2 = kernels::squared_distance(pred, u.row(i), 2);
    CHECK(report.records[i].l2_loss == doctest::Approx(l2).epsilon(1e-9));

    std::vector<double> dist(4);
    for (std::size_t j = 0; j < 4; ++j) dist[j] = kernels::squared_distance(pred, u.row(j), 2);
    std::size_t rank = 1;
    for (std::size_t j = 0; j < 4; ++j) {
      if (j == i) continue;
      if (dist[j] < dist[i] || (dist[j] == dist[i] && j < i)) ++rank;
    }
    CHECK(report.records[i].retrieval_rank == rank);
    CHECK(report.records[i].hit_at_k == (rank <= 1));
  }

  // Aggregates are the arithmetic means of the records.
  double sl2 = 0.0, scos = 0.0;
  std::size_t hits = 0;
  for (const auto& rec : report.records) {
    sl2 += rec.l2_loss;
    scos += rec.cosine;
    hits += rec.hit_at_k ? 1 : 0;
  }
  CHECK(std::abs(report.mean_l2 - sl2 / 4.0) <= 1e-12);
  CHECK(std::abs(report.mean_cosine - scos / 4.0) <= 1e-12);
  CHECK(std::abs(report.hits_at_k - hits / 4.0) <= 1e-12);
}

TEST_CASE("leave_one_out: exact recovery on grouped planted data") {
  SynthSpec spec;
  spec.q = 120;
  spec.n = 8;
  spec.m = 16;
  spec.active_per_row = 2;
  spec.noise_sigma = 0.0;
  spec.seed = 7;
  const SynthData data = generate(spec);
  const AlignedDataset grouped = group_by_combination(data.dataset);

  LooOptions opts;
  opts.hits_k = 1;
  const LooReport report = leave_one_out(grouped, opts);
  CHECK(report.mean_l2 <= 1e-12);
  CHECK(report.mean_cosine >= 1.0 - 1e-8);
  CHECK(report.hits_at_k == 1.0);
}

TEST_CASE("leave_one_out: engine folds match direct per-fold pinv solves") {
  SplitMix64 rng(50);
  SynthSpec spec;
  spec.q = 25;
  spec.n = 5;
  spec.m = 7;
  spec.active_per_row = 2;
  spec.noise_sigma = 0.8;
  spec.seed = 3;
  const SynthData data = generate(spec);
  const Matrix& a = data.dataset.attributes.values;
  const Matrix& u = data.dataset.embeddings.values;

  const LooReport report = leave_one_out(data.dataset, LooOptions{});
  for (std::size_t i = 0; i < a.rows; ++i) {
    Matrix ai(a.rows - 1, a.cols);
    Matrix ui(a.rows - 1, u.cols);
    std::size_t r = 0;
    for (std::size_t j = 0; j < a.rows; ++j) {
      if (j == i) continue;
      std::copy(a.row(j), a.row(j) + a.cols, ai.row(r));
      std::copy(u.row(j), u.row(j) + u.cols, ui.row(r));
      ++r;
    }
    const Matrix x = pinv_solve(ai, ui);
    std::vector<double> pred(u.cols, 0.0);
    for (std::size_t jj = 0; jj < a.cols; ++jj) {
      if (a.at(i, jj) == 1.0) kernels::axpy(1.0, x.row(jj), pred.data(), u.cols);
    }
    const double l2 = kernels::squared_distance(pred.data(), u.row(i), u.cols);
    CHECK(report.records[i].l2_loss == doctest::Approx(l2).epsilon(1e-8));
  }
}

TEST_CASE("leave_one_out: monotone degradation with noise") {
  std::vector<double> cosines;
  std::vector<double> l2s;
  for (const double sigma : {0.0, 0.1, 0.5, 1.0, 2.0}) {
    SynthSpec spec;
    spec.q = 150;
    spec.n = 10;
    spec.m = 12;
    spec.active_per_row = 3;
    spec.noise_sigma = sigma;
    spec.seed = 11;  // paired draws across sigmas
    const SynthData data = generate(spec);
    const LooReport report = leave_one_out(data.dataset, LooOptions{});
    cosines.push_back(report.mean_cosine);
    l2s.push_back(report.mean_l2);
  }
  for (std::size_t i = 1; i < cosines.size(); ++i) {
    CHECK(cosines[i] <= cosines[i - 1] + 1e-12);
    CHECK(l2s[i] >= l2s[i - 1] - 1e-12);
  }
}

TEST_CASE("leave_one_out: row permutation equivariance") {
  SynthSpec spec;
  spec.q = 40;
  spec.n = 6;
  spec.m = 8;
  spec.active_per_row = 2;
  spec.noise_sigma = 0.5;
  spec.seed = 21;
  const SynthData data = generate(spec);
  const LooReport base = leave_one_out(data.dataset, LooOptions{});

  const auto perm = random_permutation(spec.q, 77);
  AlignedDataset moved;
  moved.attributes.attribute_names = data.dataset.attributes.attribute_names;
  moved.attributes.values = Matrix(spec.q, spec.n);
  moved.embeddings.values = Matrix(spec.q, spec.m);
  for (std::size_t i = 0; i < spec.q; ++i) {
    moved.attributes.entity_ids.push_back(data.dataset.attributes.entity_ids[perm[i]]);
    std::copy(data.dataset.attributes.values.row(perm[i]),
              data.dataset.attributes.values.row(perm[i]) + spec.n,
              moved.attributes.values.row(i));
    std::copy(data.dataset.embeddings.values.row(perm[i]),
              data.dataset.embeddings.values.row(perm[i]) + spec.m,
              moved.embeddings.values.row(i));
  }
  moved.embeddings.entity_ids = moved.attributes.entity_ids;
  const LooReport shifted = leave_one_out(moved, LooOptions{});

  CHECK(std::abs(shifted.mean_l2 - base.mean_l2) <= 1e-12);
  CHECK(std::abs(shifted.mean_cosine - base.mean_cosine) <= 1e-12);
  CHECK(std::abs(shifted.hits_at_k - base.hits_at_k) <= 1e-12);
  for (std::size_t i = 0; i < spec.q; ++i) {
    CHECK(shifted.records[i].entity_id == base.records[perm[i]].entity_id);
    CHECK(shifted.records[i].retrieval_rank == base.records[perm[i]].retrieval_rank);
    CHECK(std::abs(shifted.records[i].l2_loss - base.records[perm[i]].l2_loss) <= 1e-10);
  }
}

TEST_CASE("leave_one_out: hits monotone in k") {
  SynthSpec spec;
  spec.q = 60;
  spec.n = 6;
  spec.m = 6;
  spec.active_per_row = 2;
  spec.noise_sigma = 1.5;
  spec.seed = 5;
  const SynthData data = generate(spec);

  double prev = 0.0;
  for (std::size_t k = 1; k <= 10; ++k) {
    LooOptions opts;
    opts.hits_k = k;
    const LooReport report = leave_one_out(data.dataset, opts);
    CHECK(report.hits_at_k >= prev - 1e-12);
    prev = report.hits_at_k;
    for (const auto& rec : report.records) {
      CHECK(rec.hit_at_k == (rec.retrieval_rank <= k));
    }
  }
}

TEST_CASE("leave_one_out: all-zero attribute row flagged, not fatal") {
  SplitMix64 rng(52);
  Matrix a(5, 3, 0.0);
  a.at(0, 0) = 1.0;
  a.at(1, 1) = 1.0;
  a.at(2, 2) = 1.0;
  a.at(3, 0) = 1.0;
  a.at(3, 1) = 1.0;
  a.at(3, 2) = 1.0;  // every attribute has support outside its one-hot row
  // Row 4 stays all zero: its prediction is the zero vector.
  const Matrix u = random_matrix(5, 4, rng);
  const LooReport report = leave_one_out(make_dataset(a, u), LooOptions{});
  CHECK(report.records[4].cosine == 0.0);
  CHECK(report.records[4].zero_norm_flagged);
  CHECK(report.flagged_zero_norm_count == 1);
}

TEST_CASE("leave_one_out: byte-identical across thread counts") {
  SynthSpec spec;
  spec.q = 80;
  spec.n = 7;
  spec.m = 9;
  spec.active_per_row = 3;
  spec.noise_sigma = 0.3;
  spec.seed = 13;
  const SynthData data = generate(spec);

  LooOptions serial;
  serial.threads = 1;
  LooOptions parallel;
  parallel.threads = 8;
  const LooReport a = leave_one_out(data.dataset, serial);
  const LooReport b = leave_one_out(data.dataset, parallel);
  REQUIRE(a.records.size() == b.records.size());
  CHECK(a.mean_l2 == b.mean_l2);
  CHECK(a.mean_cosine == b.mean_cosine);
  CHECK(a.hits_at_k == b.hits_at_k);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].l2_loss == b.records[i].l2_loss);
    CHECK(a.records[i].cosine == b.records[i].cosine);
    CHECK(a.records[i].retrieval_rank == b.records[i].retrieval_rank);
  }
}

TEST_CASE("leave_one_out preconditions") {
  SplitMix64 rng(53);
  const Matrix a(2, 2, 1.0);
  const Matrix u = random_matrix(2, 2, rng);
  CHECK_THROWS_AS(leave_one_out(make_dataset(a, u), LooOptions{}), PreconditionError);
}
