#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fpchain {

/// Parsed sweep configuration. The text format is one `key = value` per line
/// with `#` comments; see README for the keys.
struct ExperimentConfig {
  std::string id;
  std::string experiment;  // stationary-sweep | mixing-sweep | conjecture-sweep | expsum-sweep | cheeger-sweep
  std::vector<std::uint64_t> primes;
  std::vector<std::int64_t> gammas{1};
  std::vector<std::string> chains;  // chain descriptors without gamma= and p=
  std::vector<std::string> maps;    // map descriptors for expsum-sweep
  double epsilon = 0.25;
  std::vector<std::uint64_t> seeds;
  std::uint64_t budget = 100'000;
  std::uint64_t twists = 100;
  std::int64_t k = 1;
  std::optional<std::uint64_t> interval;  // defaults to floor(sqrt p)
  double c = 1.0;
  std::string output_dir = "results";
  std::vector<std::string> formats{"csv"};
  unsigned workers = 0;  // 0: hardware concurrency
  std::map<std::string, std::string> raw;  // normalized key/value pairs
  std::string config_hash;
};

/// Raises Config on unknown keys, missing seeds, non-prime moduli or a gamma
/// that vanishes mod some prime.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// FNV-1a 64 over the sorted `key=value` lines, as 16 hex digits.
std::string config_hash(const std::map<std::string, std::string>& raw);

struct ResultRow {
  std::string experiment;
  std::uint64_t p = 0;
  std::int64_t gamma = 0;
  std::string chain;
  std::string metric;
  std::string value;   // exact rationals as "num/den"
  std::string oracle;  // empty when none
  double runtime_ms = 0.0;
  std::uint64_t seed = 0;
  std::string config_hash;

  bool is_error() const noexcept { return metric == "error"; }
};

/// Runs every task of the configured experiment. Task failures become error
/// rows; the row order depends only on the configuration.
std::vector<ResultRow> run_experiment(const ExperimentConfig& config);

enum class ReportFormat { Csv, Jsonl };
ReportFormat parse_report_format(std::string_view name);

inline constexpr std::string_view kCsvHeader =
    "experiment,p,gamma,chain,metric,value,oracle,runtime_ms,seed,config_hash";

/// Serializes rows; runtime is left out when include_runtime is false so the
/// bytes depend only on the rows' deterministic fields.
std::string format_report(const std::vector<ResultRow>& rows, ReportFormat format, bool include_runtime = true);

/// Writes <dir>/<id>.<csv|jsonl>. Empty rows need allow_empty. Io on failure.
std::filesystem::path emit_report(const std::vector<ResultRow>& rows, ReportFormat format,
                                  const std::filesystem::path& dir, const std::string& id, bool allow_empty = false);

/// FPCHAIN_OUTPUT_DIR when set, otherwise the configured directory.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

}  // namespace fpchain
