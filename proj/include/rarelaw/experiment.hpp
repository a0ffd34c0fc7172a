#pragma once
// Config-driven experiment runner. A plain-text config (key = value inside
// [sections]) selects a map, a noise scheme, a grid size, a seed and one
// scenario; run() writes the scenario CSVs plus a manifest.json with the
// config echo and one pass/fail entry per criterion, and returns the CLI
// exit code (0 pass, 1 criterion failure).

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace rarelaw {

inline constexpr const char* kCodeVersion = "relab 0.1.0";

// usage errors carry the offending field path ("evl.trials")
struct ConfigError : std::runtime_error {
  std::string field;
  ConfigError(std::string field_, const std::string& message)
      : std::runtime_error(field_ + ": " + message), field(std::move(field_)) {}
};

struct ExperimentConfig {
  // ordered section -> (key -> value), echoed into the manifest
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> sections;

  bool has(const std::string& section, const std::string& key) const;
  std::string get_str(const std::string& section, const std::string& key) const;
  std::string get_str(const std::string& section, const std::string& key,
                      const std::string& fallback) const;
  double get_num(const std::string& section, const std::string& key) const;
  double get_num(const std::string& section, const std::string& key, double fallback) const;
  long get_int(const std::string& section, const std::string& key, long fallback) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key) const;
  std::vector<double> get_list(const std::string& section, const std::string& key) const;

  static ExperimentConfig parse_file(const std::string& path);
  static ExperimentConfig parse_text(const std::string& text, const std::string& origin);
};

struct RunOptions {
  bool has_seed_override = false;
  std::uint64_t seed_override = 0;
  int threads = 1;
  std::string out_dir = "out";
};

struct CriterionResult {
  std::string name;
  bool pass = false;
  double value = 0;
  double threshold = 0;
  std::string detail;
};

struct RunResult {
  int exit_code = 2;
  bool pass = false;
  std::string scenario;
  std::vector<CriterionResult> criteria;
  std::vector<std::string> artifacts;
  double wall_time_s = 0;
  std::string error;
};

// runs the configured scenario; always writes manifest.json under
// options.out_dir, even when a criterion fails or an error is thrown
RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options);

// writes kernel.csv (i,j,value triplets), kernel_header.json and
// stationary.csv for the configured map/noise/grid
int export_kernel(const ExperimentConfig& cfg, const RunOptions& options);

// quick internal battery (RNG vectors, kernel normalization, determinism)
int selftest(int threads);

std::vector<std::string> list_map_ids();

}  // namespace rarelaw
