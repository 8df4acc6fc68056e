#include "compaudit/permtest.hpp"

#include <algorithm>

#include "compaudit/error.hpp"
#include "compaudit/parallel.hpp"
#include "compaudit/rng.hpp"

namespace compaudit {

const char* statistic_name(Statistic s) {
  switch (s) {
    case Statistic::cca_rho: return "cca_rho";
    case Statistic::loo_cosine: return "loo_cosine";
    case Statistic::loo_l2: return "loo_l2";
    case Statistic::loo_hits: return "loo_hits";
  }
  return "unknown";
}

Statistic statistic_from_name(const std::string& name) {
  if (name == "cca_rho") return Statistic::cca_rho;
  if (name == "loo_cosine") return Statistic::loo_cosine;
  if (name == "loo_l2") return Statistic::loo_l2;
  if (name == "loo_hits") return Statistic::loo_hits;
  throw_precondition("UnknownStatistic", "unknown statistic '" + name + "'");
}

AttributeMatrix permute_rows(const AttributeMatrix& a, std::uint64_t seed) {
  const std::size_t q = a.values.rows;
  const std::vector<std::size_t> perm = random_permutation(q, seed);
  AttributeMatrix out;
  out.entity_ids = a.entity_ids;  // ids keep their original order; values move
  out.attribute_names = a.attribute_names;
  out.values = Matrix(q, a.values.cols);
  for (std::size_t i = 0; i < q; ++i) {
    std::copy(a.values.row(perm[i]), a.values.row(perm[i]) + a.values.cols, out.values.row(i));
  }
  return out;
}

namespace {

// Add-one (Phipson-Smyth) estimator. Ties count as at-least-as-extreme, so
// p is never 0 and degenerate statistics give p = 1.
double p_value(double t_real, std::span<const double> samples, Direction dir) {
  std::size_t c = 0;
  for (const double s : samples) {
    const bool extreme = dir == Direction::greater_is_extreme ? s >= t_real : s <= t_real;
    if (extreme) ++c;
  }
  return static_cast<double>(1 + c) / static_cast<double>(samples.size() + 1);
}

void finish_outcome(PermutationOutcome& o) {
  const std::size_t width = o.t_real.size();
  o.p_values.resize(width);
  std::vector<double> column(o.permuted_samples.size());
  for (std::size_t c = 0; c < width; ++c) {
    for (std::size_t i = 0; i < o.permuted_samples.size(); ++i) {
      column[i] = o.permuted_samples[i][c];
    }
    o.p_values[c] = p_value(o.t_real[c], column, o.direction);
  }
}

PermutationOutcome run_cca_test(const AlignedDataset& d, std::size_t n,
                                std::uint64_t master_seed, const TestConfig& config) {
  CcaOptions cca_opts;
  cca_opts.k_max = config.k_max;
  cca_opts.ridge = config.ridge;
  cca_opts.rcond = config.rcond;

  PermutationOutcome o;
  o.statistic_name = statistic_name(Statistic::cca_rho);
  o.direction = Direction::greater_is_extreme;
  o.n_permutations = n;
  o.master_seed = master_seed;

  const CcaResult real = fit_cca(d, cca_opts);
  o.t_real = real.correlations;

  o.permuted_samples.assign(n, {});
  parallel_for(0, n, config.threads, [&](std::size_t i) {
    AlignedDataset shuffled;
    shuffled.attributes = permute_rows(d.attributes, derive_seed(master_seed, i));
    shuffled.embeddings = d.embeddings;
    const CcaResult perm = fit_cca(shuffled, cca_opts);
    // Row shuffling cannot change column ranks, so k matches; guard anyway.
    std::vector<double> sample(real.k, 0.0);
    for (std::size_t c = 0; c < real.k && c < perm.correlations.size(); ++c) {
      sample[c] = perm.correlations[c];
    }
    o.permuted_samples[i] = std::move(sample);
  });

  finish_outcome(o);
  return o;
}

double extract(const LooReport& r, Statistic s) {
  switch (s) {
    case Statistic::loo_cosine: return r.mean_cosine;
    case Statistic::loo_l2: return r.mean_l2;
    case Statistic::loo_hits: return r.hits_at_k;
    default: break;
  }
  throw_precondition("UnknownStatistic", "extract: not a LOO statistic");
}

}  // namespace

LooTestBundle run_loo_tests(const AlignedDataset& d, std::span<const Statistic> statistics,
                            std::size_t n, std::uint64_t master_seed, const TestConfig& config) {
  for (const Statistic s : statistics) {
    if (s == Statistic::cca_rho) {
      throw_precondition("UnknownStatistic", "run_loo_tests: cca_rho is not a LOO statistic");
    }
  }
  LooOptions loo_opts;
  loo_opts.hits_k = config.hits_k;
  loo_opts.metric = config.metric;
  loo_opts.rcond = config.rcond;
  loo_opts.threads = config.threads;

  LooEngine engine(d, loo_opts);
  LooTestBundle bundle;
  bundle.real = engine.run(d.attributes);

  std::vector<LooReport> permuted(n);
  // Folds already fan out inside the engine; permutations run sequentially so
  // results never depend on which pass a thread picked up.
  for (std::size_t i = 0; i < n; ++i) {
    permuted[i] = engine.run(permute_rows(d.attributes, derive_seed(master_seed, i)));
  }

  for (const Statistic s : statistics) {
    PermutationOutcome o;
    o.statistic_name = statistic_name(s);
    o.direction =
        s == Statistic::loo_l2 ? Direction::smaller_is_extreme : Direction::greater_is_extreme;
    o.n_permutations = n;
    o.master_seed = master_seed;
    o.t_real = {extract(bundle.real, s)};
    o.permuted_samples.reserve(n);
    for (const LooReport& r : permuted) o.permuted_samples.push_back({extract(r, s)});
    finish_outcome(o);
    bundle.outcomes.push_back(std::move(o));
  }

  if (n > 0) {
    double sc = 0.0, sl = 0.0, sh = 0.0;
    for (const LooReport& r : permuted) {
      sc += r.mean_cosine;
      sl += r.mean_l2;
      sh += r.hits_at_k;
    }
    bundle.mean_cosine_permuted = sc / static_cast<double>(n);
    bundle.mean_l2_permuted = sl / static_cast<double>(n);
    bundle.hits_permuted = sh / static_cast<double>(n);
  }
  return bundle;
}

PermutationOutcome run_test(const AlignedDataset& d, Statistic statistic, std::size_t n,
                            std::uint64_t master_seed, const TestConfig& config) {
  if (n < 1) throw_precondition("TooFewPermutations", "run_test: need n >= 1");
  if (statistic == Statistic::cca_rho) {
    return run_cca_test(d, n, master_seed, config);
  }
  const Statistic stats[1] = {statistic};
  LooTestBundle bundle = run_loo_tests(d, stats, n, master_seed, config);
  return std::move(bundle.outcomes[0]);
}

}  // namespace compaudit
