#pragma once

// Experiment configuration and subcommand drivers for the rmgd tool. All
// numerical work is delegated to rmgd::core; this layer only parses,
// dispatches and writes files.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rmgd/data.hpp"
#include "rmgd/regret.hpp"
#include "rmgd/trainer.hpp"

namespace rmgd::cli {

/// Invalid configuration. `path` is the JSON pointer of the offending value.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

struct BlobsSource {
  std::int64_t classes = 5;
  std::int64_t per_class = 400;
  std::int64_t dim = 20;
  double spread = 1.5;
  std::optional<std::uint64_t> seed;  // defaults to the run seed
};

struct IdxSource {
  data::IdxPaths paths;
  std::size_t validation = 5000;
  std::optional<std::size_t> limit;
};

struct DatasetSource {
  std::optional<BlobsSource> blobs;
  std::optional<IdxSource> idx;
};

struct RegretSettings {
  std::vector<double> means{0.2, 0.6, 0.6, 0.6, 0.6, 0.6};
  std::vector<std::int64_t> horizons{1000, 4000, 10000};
  int repeats = 100;
  std::optional<double> beta;  // nullopt: default_beta(K, horizon) per horizon
};

struct ExperimentConfig {
  trainer::RunConfig run;
  DatasetSource dataset;
  std::filesystem::path output_dir = "runs/latest";
  std::int64_t log_every = 1;
  int parallel = 1;
  bool log_wall_time = false;
  std::optional<std::int64_t> batch_size;  // mgd subcommand
  RegretSettings regret;
};

/// Command-line overrides; each set field wins over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output;
  std::optional<int> parallel;
  std::optional<std::int64_t> epochs;
  std::optional<std::vector<std::int64_t>> arms;
  std::optional<std::string> beta;  // "auto" or a real
  std::optional<std::int64_t> batch_size;
};

/// Strict parse: unknown keys, wrong types and out-of-range values raise
/// ConfigError naming the JSON path. Overrides are applied, then "auto"
/// fields and dataset-derived model dimensions are resolved.
ExperimentConfig parse_config(const nlohmann::json& doc, const Overrides& overrides = {});
ExperimentConfig parse_config_file(const std::filesystem::path& path, const Overrides& overrides = {});
ExperimentConfig default_config(const Overrides& overrides = {});

/// Fully resolved document; parse_config(resolved_json(c)) reproduces c.
nlohmann::json resolved_json(const ExperimentConfig& config);

data::Dataset load_dataset(const ExperimentConfig& config);

/// Subcommand drivers. Each writes config.resolved.json into the output
/// directory first, and a failure.json marker if the run throws.
trainer::RunResult run_rmgd_command(const ExperimentConfig& config,
                                    const std::optional<std::filesystem::path>& resume = std::nullopt);
trainer::RunResult run_mgd_command(const ExperimentConfig& config);
trainer::GridSummary run_grid_command(const ExperimentConfig& config, bool count_only);
std::vector<regret::RegretSummary> run_regret_command(const ExperimentConfig& config);
void emit_trace_command(const std::filesystem::path& log, const std::optional<std::filesystem::path>& output);
void export_data_command(const ExperimentConfig& config);

/// {"error": kind, "message": ..., ["path": ...]} on a single line.
std::string error_line(const std::exception& e);

}  // namespace rmgd::cli
