#pragma once

// Resizable mini-batch training: each epoch the selector samples a batch
// size, the optimizer makes ceil(m / b) steps with it, and the sign of the
// change in validation loss becomes the selector's cost.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rmgd/bandit.hpp"
#include "rmgd/data.hpp"
#include "rmgd/model.hpp"
#include "rmgd/optim.hpp"

namespace rmgd::trainer {

using optim::ModelParams;
using optim::OptimizerState;

struct RunConfig {
  bandit::ArmSet arms{{16, 32, 64, 128, 256, 512}};
  std::optional<double> beta;  // nullopt resolves through default_beta(K, epochs)
  std::int64_t epochs = 100;
  optim::OptimizerConfig optimizer;
  optim::LearningRateSchedule lr;
  model::ModelSpec model;
  std::uint64_t seed = 0;
  double prob_floor = bandit::kDefaultProbabilityFloor;
  bool reset_optimizer_on_switch = false;
};

void validate(const RunConfig& config);

/// Explicit beta, or default_beta(K, epochs). A single arm has nothing to
/// learn; auto then resolves to 0.5, which leaves pi = [1] either way.
double resolve_beta(const RunConfig& config);

nlohmann::json to_json(const RunConfig& config);

/// One line of the per-epoch log.
struct EpochRecord {
  std::int64_t epoch = 0;
  std::size_t arm_index = 0;
  std::int64_t batch_size = 0;
  std::int64_t iterations = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;  // sample-weighted mean of the mini-batch losses
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  int cost = 0;
  std::vector<double> probs;  // distribution the arm was sampled from
  std::int64_t cumulative_iterations = 0;
  std::uint64_t seed = 0;
  double wall_time = 0.0;  // seconds, monotonic clock; never feeds back into training

  /// Equality ignores wall_time.
  bool same_trajectory(const EpochRecord& other) const;
};

nlohmann::json to_json(const EpochRecord& record, bool include_wall_time = false);
EpochRecord record_from_json(const nlohmann::json& j);

/// 0 when `new_loss` is strictly below `prev_loss`, 1 otherwise (ties
/// included). Throws NumericError on a non-finite loss.
int validation_cost(double prev_loss, double new_loss);

struct EpochResult {
  ModelParams params;
  OptimizerState optimizer;
  double train_loss = 0.0;
  double val_loss = 0.0;
  std::int64_t iterations = 0;
};

/// ceil(m / b) optimizer steps over the training split in `plan` order, then
/// the unregularized validation loss of the result.
EpochResult run_epoch(const model::ModelSpec& spec, ModelParams params, OptimizerState optimizer,
                      std::int64_t batch_size, double lr, const data::Dataset& dataset,
                      const data::BatchPlan& plan);

/// Everything needed to continue a run after `epoch` completed epochs.
struct Checkpoint {
  std::int64_t epoch = 0;
  std::uint64_t seed = 0;
  ModelParams params;
  OptimizerState optimizer;
  bandit::BanditState bandit{bandit::init_uniform(bandit::ArmSet({1}), 0.5, 0)};
  double prev_val_loss = 0.0;
  std::int64_t cumulative_iterations = 0;
  std::optional<std::size_t> last_arm;
  ModelParams best_params;
  double best_val_loss = 0.0;
};

nlohmann::json to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

struct RunOptions {
  const Checkpoint* resume = nullptr;
  /// Stop once this many epochs are complete (for checkpointing mid-run).
  std::optional<std::int64_t> stop_after;
  /// Called with each record as soon as it exists.
  std::function<void(const EpochRecord&)> on_record;
  /// Replaces the validation-derived cost: (epoch, arm, observed cost) -> cost.
  std::function<int(std::int64_t, std::size_t, int)> cost_override;
};

struct RunResult {
  std::string algorithm;
  std::vector<EpochRecord> records;
  Checkpoint checkpoint;
  std::int64_t total_iterations = 0;
  double final_val_loss = 0.0;
  double final_val_accuracy = 0.0;
  std::optional<double> test_accuracy;           // final-epoch model
  std::optional<double> best_val_test_accuracy;  // lowest-validation-loss model
  double wall_time_s = 0.0;
};

/// The adaptive loop over config.arms.
RunResult run_rmgd(const RunConfig& config, const data::Dataset& dataset, const RunOptions& options = {});

/// Fixed batch size baseline; identical to run_rmgd over the single arm
/// {batch_size}. The selector is never sampled or updated.
RunResult run_mgd(const RunConfig& config, const data::Dataset& dataset, std::int64_t batch_size,
                  const RunOptions& options = {});

struct GridRow {
  std::string algorithm;
  std::optional<std::int64_t> batch_size;
  std::int64_t iterations = 0;
  double wall_time_s = 0.0;
  std::optional<double> final_val_loss;
  std::optional<double> test_accuracy;
  std::optional<double> best_val_test_accuracy;
  std::string error;  // non-empty when the run failed
};

struct GridOptions {
  int parallel = 1;
  /// Report planned iteration counts without training.
  bool count_only = false;
  std::function<void(std::size_t arm, const RunResult&)> on_run;
};

struct GridSummary {
  std::vector<GridRow> rows;   // one per arm, in arm order
  GridRow total;               // summed iterations and wall time
  std::optional<std::size_t> best;  // highest test accuracy; ties go to the smaller batch
  std::vector<RunResult> runs;      // empty when count_only
};

/// run_mgd once per arm of config.arms. A failing arm is recorded in its
/// row's error and the remaining arms still run.
GridSummary run_grid_search(const RunConfig& config, const data::Dataset& dataset, const GridOptions& options = {});

/// Row for a finished run, as it appears in the summary CSV.
GridRow summary_row(const RunResult& result, std::optional<std::int64_t> batch_size);

/// columns: algorithm,batch_size,iterations,wall_time_s,final_val_loss,test_accuracy,best_val_test_accuracy
void write_summary_csv(std::ostream& out, const std::vector<GridRow>& rows);

/// One JSON object per line.
void write_jsonl(std::ostream& out, const std::vector<EpochRecord>& records, bool include_wall_time = false);
std::vector<EpochRecord> read_jsonl(std::istream& in);

/// Probability trace for plotting: header epoch,chosen,p1..pK, then one row
/// per record with the chosen batch size.
void write_trace_csv(std::ostream& out, const std::vector<EpochRecord>& records);

}  // namespace rmgd::trainer
