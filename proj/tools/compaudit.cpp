// compaudit: measures how much linear additive structure an embedding space
// shares with a binary attribute description of the same entities.
//
// Subcommands:
//   linearity  CCA between attributes and embeddings + permutation test
//   additive   leave-one-out additive reconstruction + permutation tests
//   sweep      the full diagnostic across a manifest of embedding matrices
//   synth      planted-structure dataset generator

#include <charconv>
#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "compaudit/additive.hpp"
#include "compaudit/cca.hpp"
#include "compaudit/dataset.hpp"
#include "compaudit/error.hpp"
#include "compaudit/kernels.hpp"
#include "compaudit/parallel.hpp"
#include "compaudit/permtest.hpp"
#include "compaudit/report.hpp"
#include "compaudit/sweep.hpp"
#include "compaudit/synth.hpp"
#include "compaudit/version.hpp"

namespace {

using namespace compaudit;

constexpr std::size_t kCcaDimensionWarning = 4096;

struct CommonFlags {
  std::string attributes_path;
  std::string embeddings_path;
  std::string manifest_path;
  std::size_t permutations = 100;
  std::uint64_t seed = 0;
  std::size_t hits_k = 5;
  std::string metric = "cosine";
  std::string group = "auto";
  std::string normalize = "off";
  std::string order = "group-first";
  double rcond = 0.0;
  double ridge = 1e-8;
  std::size_t k_max = 0;
  bool with_cca = false;
  std::string output = "-";
};

GroupMode parse_group(const std::string& s) {
  if (s == "auto") return GroupMode::automatic;
  if (s == "on") return GroupMode::on;
  if (s == "off") return GroupMode::off;
  throw_precondition("BadFlag", "--group-by-combination must be auto|on|off");
}

PrepOrder parse_order(const std::string& s) {
  if (s == "group-first") return PrepOrder::group_first;
  if (s == "normalize-first") return PrepOrder::normalize_first;
  throw_precondition("BadFlag", "--order must be group-first|normalize-first");
}

bool parse_on_off(const std::string& s, const char* flag) {
  if (s == "on") return true;
  if (s == "off") return false;
  throw_precondition("BadFlag", std::string(flag) + " must be on|off");
}

nlohmann::json config_echo(const CommonFlags& f) {
  nlohmann::json j;
  j["permutations"] = f.permutations;
  j["seed"] = f.seed;
  j["hits_k"] = f.hits_k;
  j["metric"] = f.metric;
  j["group_by_combination"] = f.group;
  j["normalize"] = f.normalize;
  j["order"] = f.order;
  j["rcond"] = f.rcond;
  j["ridge"] = f.ridge;
  j["k_max"] = f.k_max;
  j["with_cca"] = f.with_cca;
  // Thread count deliberately not echoed: results are schedule-independent,
  // so it is not part of what reproduces the run.
  j["simd_backend"] = kernels::backend_name(kernels::active_backend());
  return j;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_ingest("FileNotFound", "cannot write " + path);
  out << text;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void prep_warnings(const PreparedDataset& prep, std::vector<std::string>* warnings) {
  if (!prep.dropped_from_attributes.empty() || !prep.dropped_from_embeddings.empty()) {
    warnings->push_back("align dropped " + std::to_string(prep.dropped_from_attributes.size()) +
                        " attribute ids and " +
                        std::to_string(prep.dropped_from_embeddings.size()) + " embedding ids");
  }
  if (prep.grouped) {
    warnings->push_back("grouped " + std::to_string(prep.q_before_grouping) + " rows into " +
                        std::to_string(prep.data.attributes.values.rows) +
                        " attribute combinations; effective q = " +
                        std::to_string(prep.data.attributes.values.rows));
  }
}

int cmd_linearity(const CommonFlags& f, const std::string& components_csv) {
  const AttributeMatrix attributes = load_attributes_csv(f.attributes_path);
  const EmbeddingMatrix embeddings = load_embeddings_any(f.embeddings_path);

  std::vector<std::string> warnings;
  for (const auto& name : validate(attributes).constant_attribute_columns) {
    warnings.push_back("constant attribute column at load: " + name);
  }

  // The linearity step runs ungrouped by default (grouping belongs to the
  // additive step); --group-by-combination on|auto can still force it.
  const GroupMode group = f.group == "auto" ? GroupMode::off : parse_group(f.group);
  PreparedDataset prep = prepare_dataset(attributes, embeddings, group,
                                         parse_on_off(f.normalize, "--normalize"),
                                         parse_order(f.order));
  prep_warnings(prep, &warnings);
  if (prep.data.embeddings.values.cols > kCcaDimensionWarning) {
    warnings.push_back("embedding dimension " +
                       std::to_string(prep.data.embeddings.values.cols) +
                       " exceeds " + std::to_string(kCcaDimensionWarning) +
                       "; canonical correlations get unstable in this regime");
  }

  CcaOptions cca_opts;
  cca_opts.k_max = f.k_max;
  cca_opts.ridge = f.ridge;
  cca_opts.rcond = f.rcond;
  const CcaResult cca = fit_cca(prep.data, cca_opts);
  for (const auto& name : cca.dropped_attribute_columns) {
    warnings.push_back("dropped constant attribute column: " + name);
  }

  nlohmann::json results;
  results["cca"] = to_json(cca);

  std::string csv = "k,rho_real,rho_perm_mean,p_value\n";
  if (f.permutations > 0) {
    TestConfig tc;
    tc.hits_k = f.hits_k;
    tc.metric = metric_from_name(f.metric);
    tc.rcond = f.rcond;
    tc.ridge = f.ridge;
    tc.k_max = f.k_max;
    const PermutationOutcome outcome =
        run_test(prep.data, Statistic::cca_rho, f.permutations, f.seed, tc);
    results["permutation_test"] = to_json(outcome);
    for (std::size_t c = 0; c < outcome.t_real.size(); ++c) {
      double perm_mean = 0.0;
      for (const auto& s : outcome.permuted_samples) perm_mean += s[c];
      perm_mean /= static_cast<double>(outcome.permuted_samples.size());
      csv += std::to_string(c + 1) + "," + format_double(outcome.t_real[c]) + "," +
             format_double(perm_mean) + "," + format_double(outcome.p_values[c]) + "\n";
    }
  } else {
    for (std::size_t c = 0; c < cca.correlations.size(); ++c) {
      csv += std::to_string(c + 1) + "," + format_double(cca.correlations[c]) + ",,\n";
    }
  }
  if (!components_csv.empty()) write_text_file(components_csv, csv);

  const nlohmann::json report = make_run_report(
      {{"attributes", f.attributes_path}, {"embeddings", f.embeddings_path}}, config_echo(f),
      results, warnings);
  emit_report(report, f.output);
  return 0;
}

int cmd_additive(const CommonFlags& f, const std::string& records_csv) {
  const AttributeMatrix attributes = load_attributes_csv(f.attributes_path);
  const EmbeddingMatrix embeddings = load_embeddings_any(f.embeddings_path);

  std::vector<std::string> warnings;
  for (const auto& name : validate(attributes).constant_attribute_columns) {
    warnings.push_back("constant attribute column at load: " + name);
  }
  PreparedDataset prep = prepare_dataset(attributes, embeddings, parse_group(f.group),
                                         parse_on_off(f.normalize, "--normalize"),
                                         parse_order(f.order));
  prep_warnings(prep, &warnings);

  TestConfig tc;
  tc.hits_k = f.hits_k;
  tc.metric = metric_from_name(f.metric);
  tc.rcond = f.rcond;
  tc.ridge = f.ridge;
  tc.k_max = f.k_max;

  nlohmann::json results;
  LooReport loo;
  if (f.permutations > 0) {
    const Statistic stats[3] = {Statistic::loo_cosine, Statistic::loo_l2, Statistic::loo_hits};
    LooTestBundle bundle = run_loo_tests(prep.data, stats, f.permutations, f.seed, tc);
    loo = std::move(bundle.real);
    nlohmann::json tests = nlohmann::json::array();
    for (const auto& o : bundle.outcomes) tests.push_back(to_json(o));
    results["permutation_tests"] = std::move(tests);
    results["permuted_means"] = {{"cosine", bundle.mean_cosine_permuted},
                                 {"l2", bundle.mean_l2_permuted},
                                 {"hits", bundle.hits_permuted}};
  } else {
    LooOptions lo;
    lo.hits_k = tc.hits_k;
    lo.metric = tc.metric;
    lo.rcond = tc.rcond;
    loo = leave_one_out(prep.data, lo);
  }
  if (loo.flagged_zero_norm_count > 0) {
    warnings.push_back(std::to_string(loo.flagged_zero_norm_count) +
                       " entities had a zero-norm prediction or embedding (cosine recorded as 0)");
  }
  results["loo"] = to_json(loo);

  if (!records_csv.empty()) {
    std::string csv = "entity_id,l2_loss,cosine,retrieval_rank,hit_at_k\n";
    for (const auto& rec : loo.records) {
      csv += rec.entity_id + "," + format_double(rec.l2_loss) + "," + format_double(rec.cosine) +
             "," + std::to_string(rec.retrieval_rank) + "," + (rec.hit_at_k ? "1" : "0") + "\n";
    }
    write_text_file(records_csv, csv);
  }

  const nlohmann::json report = make_run_report(
      {{"attributes", f.attributes_path}, {"embeddings", f.embeddings_path}}, config_echo(f),
      results, warnings);
  emit_report(report, f.output);
  return 0;
}

int cmd_sweep(const CommonFlags& f, const std::string& table_csv) {
  const AttributeMatrix attributes = load_attributes_csv(f.attributes_path);
  const auto manifest = load_manifest(f.manifest_path);

  std::vector<std::pair<std::string, EmbeddingMatrix>> embeddings;
  embeddings.reserve(manifest.size());
  std::vector<ReportInput> inputs = {{"attributes", f.attributes_path},
                                     {"manifest", f.manifest_path}};
  for (const auto& [label, path] : manifest) {
    embeddings.emplace_back(label, load_embeddings_any(path));
    inputs.push_back({"embeddings:" + label, path});
  }

  SweepConfig sc;
  sc.permutations = f.permutations;
  sc.master_seed = f.seed;
  sc.hits_k = f.hits_k;
  sc.metric = metric_from_name(f.metric);
  sc.rcond = f.rcond;
  sc.ridge = f.ridge;
  sc.k_max = f.k_max;
  sc.group = parse_group(f.group);
  sc.normalize = parse_on_off(f.normalize, "--normalize");
  sc.order = parse_order(f.order);
  sc.with_cca = f.with_cca;

  const std::vector<SweepPoint> points = run_sweep(attributes, embeddings, sc);

  std::vector<std::string> warnings;
  nlohmann::json results;
  nlohmann::json jpoints = nlohmann::json::array();
  std::string csv =
      "label,cosine_real,cosine_permuted,normalized_cosine,relative_diff_pct,hits_real,"
      "hits_permuted,l2_real,l2_permuted\n";
  for (const auto& p : points) {
    jpoints.push_back(to_json(p));
    csv += p.label + "," + format_double(p.loo.mean_cosine) + "," +
           format_double(p.mean_cosine_permuted) + "," +
           (p.normalized_cosine ? format_double(*p.normalized_cosine) : std::string()) + "," +
           (p.relative_diff_pct ? format_double(*p.relative_diff_pct) : std::string()) + "," +
           format_double(p.loo.hits_at_k) + "," + format_double(p.hits_permuted) + "," +
           format_double(p.loo.mean_l2) + "," + format_double(p.mean_l2_permuted) + "\n";
    if (p.loo.flagged_zero_norm_count > 0) {
      warnings.push_back("point '" + p.label + "': " +
                         std::to_string(p.loo.flagged_zero_norm_count) +
                         " zero-norm predictions flagged");
    }
  }
  results["points"] = std::move(jpoints);
  if (!table_csv.empty()) write_text_file(table_csv, csv);

  const nlohmann::json report =
      make_run_report(inputs, config_echo(f), results, warnings);
  emit_report(report, f.output);
  return 0;
}

struct SynthFlags {
  std::size_t q = 200;
  std::size_t n = 12;
  std::size_t m = 32;
  std::size_t active = 3;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::string out_prefix;
  std::string output = "-";
};

int cmd_synth(const SynthFlags& f) {
  SynthSpec spec;
  spec.q = f.q;
  spec.n = f.n;
  spec.m = f.m;
  spec.active_per_row = f.active;
  spec.noise_sigma = f.noise;
  spec.seed = f.seed;
  const SynthData data = generate(spec);

  const std::string attributes_path = f.out_prefix + "attributes.csv";
  const std::string embeddings_path = f.out_prefix + "embeddings.cmpx";
  const std::string truth_path = f.out_prefix + "truth.csv";
  save_attributes_csv(attributes_path, data.dataset.attributes);
  save_binary(embeddings_path, data.dataset.embeddings);
  std::vector<std::string> dim_names;
  for (std::size_t j = 0; j < spec.m; ++j) dim_names.push_back("d" + std::to_string(j));
  save_matrix_csv(truth_path, data.truth.attribute_names, dim_names, data.truth.x);

  nlohmann::json config;
  config["q"] = spec.q;
  config["n"] = spec.n;
  config["m"] = spec.m;
  config["active_per_row"] = spec.active_per_row;
  config["noise_sigma"] = spec.noise_sigma;
  config["seed"] = spec.seed;
  nlohmann::json results;
  results["files"] = {attributes_path, embeddings_path, truth_path};

  const nlohmann::json report = make_run_report({{"attributes", attributes_path},
                                                 {"embeddings", embeddings_path},
                                                 {"truth", truth_path}},
                                                config, results, {});
  emit_report(report, f.output);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Additive compositionality diagnostics for embedding spaces"};
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1);

  CommonFlags f;
  std::string components_csv;
  std::string records_csv;
  std::string table_csv;

  const auto add_common = [&](CLI::App* cmd, bool needs_attributes) {
    if (needs_attributes) {
      cmd->add_option("--attributes", f.attributes_path, "attribute matrix CSV")->required();
    }
    cmd->add_option("--permutations", f.permutations, "Monte Carlo permutation count");
    cmd->add_option("--seed", f.seed, "master seed (required; no silent entropy)")->required();
    cmd->add_option("--hits-k", f.hits_k, "retrieval cutoff K")->check(CLI::PositiveNumber);
    cmd->add_option("--metric", f.metric, "retrieval metric: cosine|euclidean");
    cmd->add_option("--group-by-combination", f.group, "auto|on|off");
    cmd->add_option("--normalize", f.normalize, "normalize embedding rows: on|off");
    cmd->add_option("--order", f.order, "group-first|normalize-first");
    cmd->add_option("--rcond", f.rcond, "singular value cutoff (0 = default)");
    cmd->add_option("--ridge", f.ridge, "CCA whitening ridge");
    cmd->add_option("--k-max", f.k_max, "cap on canonical components (0 = auto)");
    cmd->add_option("--output", f.output, "report path, or - for stdout");
  };

  CLI::App* linearity = app.add_subcommand("linearity", "CCA linearity diagnostic");
  add_common(linearity, true);
  linearity->add_option("--embeddings", f.embeddings_path, "embedding matrix (csv/cmpx/table)")
      ->required();
  linearity->add_option("--components-csv", components_csv, "per-component CSV output");

  CLI::App* additive = app.add_subcommand("additive", "leave-one-out additive diagnostic");
  add_common(additive, true);
  additive->add_option("--embeddings", f.embeddings_path, "embedding matrix (csv/cmpx/table)")
      ->required();
  additive->add_option("--records-csv", records_csv, "per-entity CSV output");

  CLI::App* sweep = app.add_subcommand("sweep", "diagnostic across a manifest of matrices");
  add_common(sweep, true);
  sweep->add_option("--manifest", f.manifest_path, "label<TAB>path manifest")->required();
  sweep->add_option("--table-csv", table_csv, "per-point table CSV output");
  sweep->add_flag("--with-cca", f.with_cca, "also fit CCA per sweep point");

  SynthFlags sf;
  CLI::App* synth = app.add_subcommand("synth", "generate a planted additive dataset");
  synth->add_option("--q", sf.q, "entities");
  synth->add_option("--n", sf.n, "attributes");
  synth->add_option("--m", sf.m, "embedding dimensions");
  synth->add_option("--active", sf.active, "active attributes per entity");
  synth->add_option("--noise", sf.noise, "noise sigma");
  synth->add_option("--seed", sf.seed, "generator seed")->required();
  synth->add_option("--out-prefix", sf.out_prefix, "output file prefix")->required();
  synth->add_option("--output", sf.output, "report path, or - for stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (linearity->parsed()) return cmd_linearity(f, components_csv);
    if (additive->parsed()) return cmd_additive(f, records_csv);
    if (sweep->parsed()) return cmd_sweep(f, table_csv);
    if (synth->parsed()) return cmd_synth(sf);
  } catch (const IngestError& e) {
    std::cerr << kToolName << ": " << e.name() << ": " << e.what() << "\n";
    return 2;
  } catch (const PreconditionError& e) {
    std::cerr << kToolName << ": " << e.name() << ": " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << kToolName << ": " << e.what() << "\n";
    return 1;
  }
  return 1;
}
