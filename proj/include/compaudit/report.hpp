#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "compaudit/additive.hpp"
#include "compaudit/cca.hpp"
#include "compaudit/permtest.hpp"
#include "compaudit/sweep.hpp"

namespace compaudit {

// FNV-1a 64-bit content fingerprint (reproducibility aid, not a security
// boundary; the digest algorithm is named in the report field).
std::uint64_t fnv1a64_file(const std::string& path);
std::string hex64(std::uint64_t v);

nlohmann::json to_json(const CcaResult& r);
nlohmann::json to_json(const LooRecord& r);
nlohmann::json to_json(const LooReport& r);
nlohmann::json to_json(const PermutationOutcome& o);
nlohmann::json to_json(const SweepPoint& p);

struct ReportInput {
  std::string role;
  std::string path;
};

// Envelope shared by every subcommand: schema version, tool identity, input
// digests, the full flag echo, warnings, and the results payload. Everything
// but the timestamp is a pure function of inputs and flags.
nlohmann::json make_run_report(const std::vector<ReportInput>& inputs,
                               const nlohmann::json& config, const nlohmann::json& results,
                               const std::vector<std::string>& warnings);

// Serializes with a stable layout and writes to `path`, or to stdout when
// path is "-".
void emit_report(const nlohmann::json& report, const std::string& path);

}  // namespace compaudit
