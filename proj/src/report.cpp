#include "compaudit/report.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "compaudit/error.hpp"
#include "compaudit/version.hpp"

namespace compaudit {
namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < m.cols; ++j) row.push_back(m.at(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_ingest("FileNotFound", "cannot open " + path);
  std::uint64_t h = 0xCBF29CE484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001B3ULL;
    }
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

nlohmann::json to_json(const CcaResult& r) {
  nlohmann::json j;
  j["k"] = r.k;
  j["correlations"] = r.correlations;
  j["dropped_attribute_columns"] = r.dropped_attribute_columns;
  j["w_a"] = matrix_to_json(r.w_a);
  j["w_u"] = matrix_to_json(r.w_u);
  return j;
}

nlohmann::json to_json(const LooRecord& r) {
  nlohmann::json j;
  j["entity_id"] = r.entity_id;
  j["l2_loss"] = r.l2_loss;
  j["cosine"] = r.cosine;
  j["retrieval_rank"] = r.retrieval_rank;
  j["hit_at_k"] = r.hit_at_k;
  if (r.zero_norm_flagged) j["zero_norm_flagged"] = true;
  return j;
}

nlohmann::json to_json(const LooReport& r) {
  nlohmann::json j;
  j["mean_l2"] = r.mean_l2;
  j["mean_cosine"] = r.mean_cosine;
  j["hits_at_k"] = r.hits_at_k;
  j["k"] = r.k;
  j["distance_metric"] = metric_name(r.distance_metric);
  j["flagged_zero_norm_count"] = r.flagged_zero_norm_count;
  nlohmann::json records = nlohmann::json::array();
  for (const auto& rec : r.records) records.push_back(to_json(rec));
  j["records"] = std::move(records);
  return j;
}

nlohmann::json to_json(const PermutationOutcome& o) {
  nlohmann::json j;
  j["statistic_name"] = o.statistic_name;
  j["direction"] = o.direction == Direction::greater_is_extreme ? "greater_is_extreme"
                                                                : "smaller_is_extreme";
  j["n_permutations"] = o.n_permutations;
  j["master_seed"] = o.master_seed;
  const bool scalar = o.t_real.size() == 1;
  if (scalar) {
    j["t_real"] = o.t_real[0];
    j["p_value"] = o.p_values[0];
    nlohmann::json samples = nlohmann::json::array();
    for (const auto& s : o.permuted_samples) samples.push_back(s[0]);
    j["permuted_samples"] = std::move(samples);
  } else {
    j["t_real"] = o.t_real;
    j["p_value"] = o.p_values;
    nlohmann::json samples = nlohmann::json::array();
    for (const auto& s : o.permuted_samples) samples.push_back(s);
    j["permuted_samples"] = std::move(samples);
  }
  return j;
}

nlohmann::json to_json(const SweepPoint& p) {
  nlohmann::json j;
  j["label"] = p.label;
  j["effective_q"] = p.effective_q;
  j["cosine_real"] = p.loo.mean_cosine;
  j["cosine_permuted"] = p.mean_cosine_permuted;
  j["l2_real"] = p.loo.mean_l2;
  j["l2_permuted"] = p.mean_l2_permuted;
  j["hits_real"] = p.loo.hits_at_k;
  j["hits_permuted"] = p.hits_permuted;
  j["hits_k"] = p.loo.k;
  if (p.normalized_cosine) {
    j["normalized_cosine"] = *p.normalized_cosine;
  } else {
    j["normalized_cosine"] = nullptr;
  }
  if (p.relative_diff_pct) {
    j["relative_diff_pct"] = *p.relative_diff_pct;
  } else {
    j["relative_diff_pct"] = nullptr;
  }
  if (p.cca) j["cca"] = to_json(*p.cca);
  return j;
}

nlohmann::json make_run_report(const std::vector<ReportInput>& inputs,
                               const nlohmann::json& config, const nlohmann::json& results,
                               const std::vector<std::string>& warnings) {
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  j["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  j["timestamp"] = utc_timestamp();
  nlohmann::json in = nlohmann::json::array();
  for (const auto& input : inputs) {
    in.push_back({{"role", input.role},
                  {"path", input.path},
                  {"digest_fnv1a64", hex64(fnv1a64_file(input.path))}});
  }
  j["inputs"] = std::move(in);
  j["config"] = config;
  j["warnings"] = warnings;
  j["results"] = results;
  return j;
}

void emit_report(const nlohmann::json& report, const std::string& path) {
  const std::string text = report.dump(2) + "\n";
  if (path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_ingest("FileNotFound", "cannot write " + path);
  out << text;
}

}  // namespace compaudit
