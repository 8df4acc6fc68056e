#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string cli_path() {
  const char* env = std::getenv("COMPAUDIT_CLI");
  REQUIRE_MESSAGE(env != nullptr, "COMPAUDIT_CLI must point at the built binary");
  return env;
}

RunResult run(const std::string& args) {
  const fs::path dir = fs::temp_directory_path() / ("compaudit_cli_io_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string out_file = (dir / "out.txt").string();
  const std::string err_file = (dir / "err.txt").string();
  const std::string cmd = cli_path() + " " + args + " >" + out_file + " 2>" + err_file;
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  const auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  };
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() / ("compaudit_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string file(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("synth produces loadable files and a report on stdout") {
  Workspace ws;
  const std::string prefix = ws.file("toy_");
  const RunResult r = run("synth --q 40 --n 6 --m 8 --active 2 --seed 5 --out-prefix " + prefix);
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(prefix + "attributes.csv"));
  CHECK(fs::exists(prefix + "embeddings.cmpx"));
  CHECK(fs::exists(prefix + "truth.csv"));
  const json report = json::parse(r.out);
  CHECK(report["schema_version"] == 1);
  CHECK(report["results"]["files"].size() == 3);
}

TEST_CASE("additive on synth output: report structure and stdout discipline") {
  Workspace ws;
  const std::string prefix = ws.file("d_");
  REQUIRE(run("synth --q 40 --n 6 --m 8 --active 2 --seed 5 --out-prefix " + prefix).exit_code ==
          0);

  const std::string out = ws.file("report.json");
  const RunResult r = run("additive --attributes " + prefix + "attributes.csv --embeddings " +
                          prefix + "embeddings.cmpx --permutations 5 --seed 9 --output " + out +
                          " --records-csv " + ws.file("records.csv"));
  CHECK(r.exit_code == 0);
  CHECK(r.out.empty());  // report went to the file, stdout stays clean

  std::ifstream in(out);
  const json report = json::parse(in);
  CHECK(report["results"]["loo"]["mean_cosine"].is_number());
  CHECK(report["results"]["permutation_tests"].size() == 3);
  CHECK(report["config"]["seed"] == 9);

  std::ifstream csv(ws.file("records.csv"));
  std::string header;
  std::getline(csv, header);
  CHECK(header == "entity_id,l2_loss,cosine,retrieval_rank,hit_at_k");
}

TEST_CASE("linearity: --permutations 0 omits the test section") {
  Workspace ws;
  const std::string prefix = ws.file("d_");
  REQUIRE(run("synth --q 40 --n 6 --m 8 --active 2 --seed 5 --out-prefix " + prefix).exit_code ==
          0);
  const RunResult r = run("linearity --attributes " + prefix + "attributes.csv --embeddings " +
                          prefix + "embeddings.cmpx --permutations 0 --seed 1 --output -");
  CHECK(r.exit_code == 0);
  const json report = json::parse(r.out);
  CHECK(report["results"].contains("cca"));
  CHECK_FALSE(report["results"].contains("permutation_test"));
}

TEST_CASE("exit code 2 on ingestion errors, class named on stderr") {
  Workspace ws;
  const RunResult missing = run("additive --attributes /nonexistent.csv --embeddings /nop.cmpx "
                                "--seed 1");
  CHECK(missing.exit_code == 2);
  CHECK(missing.err.find("FileNotFound") != std::string::npos);

  const std::string bad = ws.file("bad.csv");
  std::ofstream(bad) << "id,a\nx,2\ny,1\n";
  const std::string emb = ws.file("e.csv");
  std::ofstream(emb) << "id,d0\nx,0.5\ny,1.5\n";
  const RunResult nonbinary =
      run("additive --attributes " + bad + " --embeddings " + emb + " --seed 1");
  CHECK(nonbinary.exit_code == 2);
  CHECK(nonbinary.err.find("NonBinaryValue") != std::string::npos);
}

TEST_CASE("exit code 3 on precondition violations") {
  Workspace ws;
  const std::string a = ws.file("a.csv");
  const std::string u = ws.file("u.csv");
  // Disjoint id sets -> align precondition EmptyIntersection.
  std::ofstream(a) << "id,f\nx,1\ny,0\n";
  std::ofstream(u) << "id,d0\np,0.5\nq,1.5\n";
  const RunResult r = run("linearity --attributes " + a + " --embeddings " + u + " --seed 1");
  CHECK(r.exit_code == 3);
  CHECK(r.err.find("EmptyIntersection") != std::string::npos);
}

TEST_CASE("sweep over a manifest") {
  Workspace ws;
  const std::string prefix = ws.file("d_");
  REQUIRE(run("synth --q 40 --n 6 --m 8 --active 2 --seed 5 --out-prefix " + prefix).exit_code ==
          0);
  const std::string manifest = ws.file("manifest.tsv");
  std::ofstream(manifest) << "p0\t" << prefix << "embeddings.cmpx\n"
                          << "p1\t" << prefix << "embeddings.cmpx\n";
  const RunResult r = run("sweep --attributes " + prefix + "attributes.csv --manifest " +
                          manifest + " --permutations 4 --seed 3 --output - --table-csv " +
                          ws.file("table.csv"));
  CHECK(r.exit_code == 0);
  const json report = json::parse(r.out);
  REQUIRE(report["results"]["points"].size() == 2);
  CHECK(report["results"]["points"][0]["cosine_real"] ==
        report["results"]["points"][1]["cosine_real"]);

  std::ifstream csv(ws.file("table.csv"));
  std::string line;
  int lines = 0;
  while (std::getline(csv, line)) ++lines;
  CHECK(lines == 3);  // header + 2 points
}

TEST_CASE("missing --seed is a usage error") {
  Workspace ws;
  const std::string prefix = ws.file("d_");
  REQUIRE(run("synth --q 40 --n 6 --m 8 --active 2 --seed 5 --out-prefix " + prefix).exit_code ==
          0);
  const RunResult r = run("additive --attributes " + prefix + "attributes.csv --embeddings " +
                          prefix + "embeddings.cmpx");
  CHECK(r.exit_code != 0);
}
