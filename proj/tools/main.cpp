#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cli.hpp"

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("rmgd");
  logger->set_pattern("[%H:%M:%S] %^%l%$ %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("RMGD_LOG_LEVEL")) {
    spdlog::set_level(spdlog::level::from_str(env));
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace rmgd::cli;
  setup_logging();

  CLI::App app{"Adaptive minibatch-size selection for gradient descent"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides ov;
  std::string output;
  std::uint64_t seed = 0;
  int parallel = 1;
  std::int64_t epochs = 0;
  std::int64_t batch = 0;
  std::vector<std::int64_t> arms;
  std::string beta;
  std::string resume;
  std::string log_path;
  bool count_only = false;
  bool log_wall_time = false;
  int repeats = 0;
  std::vector<std::int64_t> horizons;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("-o,--output", output, "output directory");
    sub->add_option("--parallel", parallel, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--log-wall-time", log_wall_time, "include wall_time in epochs.jsonl");
  };
  auto add_training = [&](CLI::App* sub) {
    sub->add_option("--epochs", epochs, "number of epochs")->check(CLI::PositiveNumber);
    sub->add_option("--arms", arms, "candidate batch sizes, increasing")->delimiter(',');
    sub->add_option("--beta", beta, "bandit step size, or 'auto'");
  };

  auto* rmgd_cmd = app.add_subcommand("rmgd", "train with bandit-selected batch sizes");
  add_common(rmgd_cmd);
  add_training(rmgd_cmd);
  rmgd_cmd->add_option("--resume", resume, "checkpoint.json to resume from")->check(CLI::ExistingFile);

  auto* mgd_cmd = app.add_subcommand("mgd", "train with one fixed batch size");
  add_common(mgd_cmd);
  add_training(mgd_cmd);
  mgd_cmd->add_option("--batch", batch, "batch size")->check(CLI::PositiveNumber);

  auto* grid_cmd = app.add_subcommand("grid", "fixed-batch run for every arm");
  add_common(grid_cmd);
  add_training(grid_cmd);
  grid_cmd->add_flag("--count-only", count_only, "report iteration totals without training");

  auto* regret_cmd = app.add_subcommand("regret", "bandit regret on synthetic Bernoulli costs");
  add_common(regret_cmd);
  regret_cmd->add_option("--beta", beta, "step size, or 'auto'");
  regret_cmd->add_option("--repeats", repeats, "independent repeats")->check(CLI::PositiveNumber);
  regret_cmd->add_option("--horizons", horizons, "horizons")->delimiter(',');

  auto* trace_cmd = app.add_subcommand("emit-trace", "arm-probability trace from an epoch log");
  trace_cmd->add_option("--log", log_path, "epochs.jsonl")->required()->check(CLI::ExistingFile);
  trace_cmd->add_option("-o,--output", output, "directory for trace.csv (default: stdout)");

  auto* export_cmd = app.add_subcommand("export-data", "write the dataset splits as CSV");
  add_common(export_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (trace_cmd->parsed()) {
      emit_trace_command(log_path, output.empty() ? std::nullopt : std::optional<std::filesystem::path>(output));
      return 0;
    }

    CLI::App* sub = app.get_subcommands().front();
    if (sub->count("--seed")) ov.seed = seed;
    if (!output.empty()) ov.output = output;
    if (sub->count("--parallel")) ov.parallel = parallel;
    if (sub->get_option_no_throw("--epochs") && sub->count("--epochs")) ov.epochs = epochs;
    if (!arms.empty()) ov.arms = arms;
    if (!beta.empty() && !regret_cmd->parsed()) ov.beta = beta;
    if (mgd_cmd->parsed() && mgd_cmd->count("--batch")) ov.batch_size = batch;

    ExperimentConfig config = config_path.empty() ? default_config(ov) : parse_config_file(config_path, ov);
    if (log_wall_time) config.log_wall_time = true;

    if (rmgd_cmd->parsed()) {
      run_rmgd_command(config, resume.empty() ? std::nullopt : std::optional<std::filesystem::path>(resume));
    } else if (mgd_cmd->parsed()) {
      run_mgd_command(config);
    } else if (grid_cmd->parsed()) {
      const auto summary = run_grid_command(config, count_only);
      for (const auto& row : summary.rows) {
        if (!row.error.empty()) return 1;
      }
    } else if (regret_cmd->parsed()) {
      nlohmann::json doc = resolved_json(config);
      if (!beta.empty()) {
        try {
          doc["regret"]["beta"] = beta == "auto" ? nlohmann::json("auto") : nlohmann::json(std::stod(beta));
        } catch (const std::logic_error&) {
          throw ConfigError("/regret/beta", "--beta expects a real number or 'auto'");
        }
      }
      if (repeats > 0) doc["regret"]["repeats"] = repeats;
      if (!horizons.empty()) doc["regret"]["horizons"] = horizons;
      config = parse_config(doc);
      run_regret_command(config);
    } else if (export_cmd->parsed()) {
      export_data_command(config);
    }
  } catch (const std::exception& e) {
    std::cerr << error_line(e) << std::endl;
    return 2;
  }
  return 0;
}
