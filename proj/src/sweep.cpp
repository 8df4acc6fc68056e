#include "compaudit/sweep.hpp"

#include <fstream>
#include <sstream>

#include "compaudit/error.hpp"

namespace compaudit {

std::pair<std::optional<double>, std::optional<double>> normalized_metrics(double real,
                                                                           double permuted) {
  std::optional<double> normalized;
  std::optional<double> relative;
  if (permuted < 1.0) normalized = (real - permuted) / (1.0 - permuted);
  if (permuted > 0.0) relative = 100.0 * (real - permuted) / permuted;
  return {normalized, relative};
}

PreparedDataset prepare_dataset(const AttributeMatrix& attributes, const EmbeddingMatrix& embeddings,
                                GroupMode group, bool normalize, PrepOrder order) {
  AlignResult aligned = align(attributes, embeddings);
  PreparedDataset out;
  out.dropped_from_attributes = std::move(aligned.dropped_from_attributes);
  out.dropped_from_embeddings = std::move(aligned.dropped_from_embeddings);
  out.data = std::move(aligned.dataset);
  out.q_before_grouping = out.data.attributes.values.rows;

  const bool want_group = group == GroupMode::on ||
                          (group == GroupMode::automatic &&
                           has_duplicate_attribute_rows(out.data.attributes));
  const auto apply_group = [&]() {
    if (!want_group) return;
    out.data = group_by_combination(out.data);
    out.grouped = true;
  };
  const auto apply_normalize = [&]() {
    if (!normalize) return;
    out.data.embeddings = normalize_rows(out.data.embeddings);
  };
  if (order == PrepOrder::group_first) {
    apply_group();
    apply_normalize();
  } else {
    apply_normalize();
    apply_group();
  }
  return out;
}

std::vector<SweepPoint> run_sweep(
    const AttributeMatrix& attributes,
    const std::vector<std::pair<std::string, EmbeddingMatrix>>& embeddings,
    const SweepConfig& config) {
  TestConfig tc;
  tc.hits_k = config.hits_k;
  tc.metric = config.metric;
  tc.rcond = config.rcond;
  tc.ridge = config.ridge;
  tc.k_max = config.k_max;
  tc.threads = config.threads;

  const Statistic stats[3] = {Statistic::loo_cosine, Statistic::loo_l2, Statistic::loo_hits};

  std::vector<SweepPoint> points;
  points.reserve(embeddings.size());
  for (const auto& [label, emb] : embeddings) {
    PreparedDataset prep;
    try {
      prep = prepare_dataset(attributes, emb, config.group, config.normalize, config.order);
    } catch (const Error& e) {
      throw PreconditionError(e.name(), "sweep point '" + label + "': " + e.what());
    }

    SweepPoint point;
    point.label = label;
    point.effective_q = prep.data.attributes.values.rows;

    // The same master seed across points keeps the permutation family
    // identical, so cross-point comparisons are paired.
    LooTestBundle bundle =
        run_loo_tests(prep.data, stats, config.permutations, config.master_seed, tc);
    point.loo = std::move(bundle.real);
    point.mean_cosine_permuted = bundle.mean_cosine_permuted;
    point.mean_l2_permuted = bundle.mean_l2_permuted;
    point.hits_permuted = bundle.hits_permuted;
    if (config.permutations > 0) {
      const auto [norm, rel] =
          normalized_metrics(point.loo.mean_cosine, point.mean_cosine_permuted);
      point.normalized_cosine = norm;
      point.relative_diff_pct = rel;
    }
    if (config.with_cca) {
      CcaOptions cca_opts;
      cca_opts.k_max = config.k_max;
      cca_opts.ridge = config.ridge;
      cca_opts.rcond = config.rcond;
      point.cca = fit_cca(prep.data, cca_opts);
    }
    points.push_back(std::move(point));
  }
  return points;
}

std::vector<std::pair<std::string, std::string>> load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_ingest("FileNotFound", "cannot open manifest " + path);
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
      throw_ingest("BadManifest", path + " line " + std::to_string(lineno) +
                                      ": expected label<TAB>path");
    }
    entries.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  if (entries.empty()) throw_ingest("BadManifest", path + ": no entries");
  return entries;
}

}  // namespace compaudit
