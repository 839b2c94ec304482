#include "rmgd/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "parallel.hpp"
#include "rmgd/error.hpp"
#include "rmgd/rng.hpp"

namespace rmgd::trainer {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_optional(std::ostream& out, const std::optional<double>& v) {
  if (v) out << format_double(*v);
}

Checkpoint fresh_start(const RunConfig& config, const data::Dataset& dataset, const bandit::ArmSet& arms,
                       double beta) {
  Checkpoint cp;
  cp.epoch = 0;
  cp.seed = config.seed;
  cp.params = model::init_params(config.model, derive_seed(config.seed, streams::kParams));
  cp.optimizer = optim::make_state(config.optimizer, cp.params.size());
  cp.bandit = bandit::init_uniform(arms, beta, derive_seed(config.seed, streams::kBandit), config.prob_floor);
  cp.prev_val_loss = model::data_loss(config.model, cp.params, dataset.validation);
  if (!std::isfinite(cp.prev_val_loss)) throw NumericError("initial validation loss is not finite");
  cp.cumulative_iterations = 0;
  cp.best_params = cp.params;
  cp.best_val_loss = cp.prev_val_loss;
  return cp;
}

// Shared loop for the adaptive and fixed-size runs. With adaptive == false
// the selector over the single arm is left untouched.
RunResult run_loop(const RunConfig& config, const data::Dataset& dataset, const bandit::ArmSet& arms,
                   bool adaptive, std::string algorithm, const RunOptions& options) {
  validate(config);
  data::validate(dataset);
  if (static_cast<std::int64_t>(dataset.input_dim()) != config.model.input_dim ||
      dataset.num_classes != config.model.num_classes) {
    throw std::invalid_argument("model spec does not match the dataset's input width or class count");
  }

  const double beta = adaptive ? resolve_beta(config) : 0.5;
  Checkpoint state;
  if (options.resume) {
    state = *options.resume;
    if (state.bandit.arms != arms) throw std::invalid_argument("checkpoint arm set does not match the run");
    if (state.seed != config.seed) throw std::invalid_argument("checkpoint seed does not match the run");
    if (state.epoch > config.epochs) throw std::invalid_argument("checkpoint is past the configured horizon");
    bandit::validate(state.bandit);
  } else {
    state = fresh_start(config, dataset, arms, beta);
  }

  RunResult result;
  result.algorithm = std::move(algorithm);
  const auto run_start = Clock::now();
  const std::int64_t last_epoch =
      options.stop_after ? std::min(*options.stop_after, config.epochs) : config.epochs;
  for (std::int64_t tau = state.epoch; tau < last_epoch; ++tau) {
    const auto epoch_start = Clock::now();
    EpochRecord rec;
    rec.epoch = tau;
    rec.seed = config.seed;
    rec.probs = state.bandit.probs;
    rec.arm_index = adaptive ? bandit::sample_arm(state.bandit) : 0;
    rec.batch_size = arms[rec.arm_index];
    rec.learning_rate = optim::effective_lr(config.lr, tau, rec.batch_size);

    if (config.reset_optimizer_on_switch && state.last_arm && *state.last_arm != rec.arm_index) {
      state.optimizer = optim::make_state(config.optimizer, state.params.size());
    }

    const data::BatchPlan plan = data::make_plan(dataset.m(), derive_seed(config.seed, streams::kShuffle,
                                                                          static_cast<std::uint64_t>(tau)));
    EpochResult epoch = run_epoch(config.model, std::move(state.params), std::move(state.optimizer),
                                  rec.batch_size, rec.learning_rate, dataset, plan);
    state.params = std::move(epoch.params);
    state.optimizer = std::move(epoch.optimizer);

    rec.iterations = epoch.iterations;
    rec.train_loss = epoch.train_loss;
    rec.val_loss = epoch.val_loss;
    rec.val_accuracy = model::accuracy(config.model, state.params, dataset.validation);
    rec.cost = validation_cost(state.prev_val_loss, epoch.val_loss);
    if (options.cost_override) rec.cost = options.cost_override(tau, rec.arm_index, rec.cost);
    if (rec.cost != 0 && rec.cost != 1) throw std::invalid_argument("cost override must return 0 or 1");

    if (adaptive) {
      state.bandit = bandit::update(std::move(state.bandit), bandit::Cost{rec.cost, rec.arm_index});
    }
    state.cumulative_iterations += epoch.iterations;
    rec.cumulative_iterations = state.cumulative_iterations;
    state.prev_val_loss = epoch.val_loss;
    state.last_arm = rec.arm_index;
    if (epoch.val_loss < state.best_val_loss) {
      state.best_val_loss = epoch.val_loss;
      state.best_params = state.params;
    }
    state.epoch = tau + 1;

    rec.wall_time = seconds_since(epoch_start);
    if (options.on_record) options.on_record(rec);
    result.records.push_back(std::move(rec));
  }

  result.total_iterations = state.cumulative_iterations;
  result.final_val_loss = state.prev_val_loss;
  result.final_val_accuracy = model::accuracy(config.model, state.params, dataset.validation);
  if (dataset.test.size() > 0) {
    result.test_accuracy = model::accuracy(config.model, state.params, dataset.test);
    result.best_val_test_accuracy = model::accuracy(config.model, state.best_params, dataset.test);
  }
  result.checkpoint = std::move(state);
  result.wall_time_s = seconds_since(run_start);
  return result;
}

}  // namespace

void validate(const RunConfig& config) {
  if (config.epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (config.beta && !(*config.beta > 0.0 && *config.beta < 1.0)) {
    throw std::invalid_argument("beta must lie in (0, 1)");
  }
  optim::validate(config.optimizer);
  optim::validate(config.lr);
  model::validate(config.model);
}

double resolve_beta(const RunConfig& config) {
  if (config.beta) return *config.beta;
  if (config.arms.size() < 2) return 0.5;
  return bandit::default_beta(static_cast<std::int64_t>(config.arms.size()), config.epochs);
}

nlohmann::json to_json(const RunConfig& config) {
  return {{"arms", config.arms.sizes()},
          {"beta", resolve_beta(config)},
          {"epochs", config.epochs},
          {"optimizer", optim::to_json(config.optimizer)},
          {"lr", optim::to_json(config.lr)},
          {"model", model::to_json(config.model)},
          {"seed", config.seed},
          {"prob_floor", config.prob_floor},
          {"reset_optimizer_on_switch", config.reset_optimizer_on_switch}};
}

bool EpochRecord::same_trajectory(const EpochRecord& o) const {
  return epoch == o.epoch && arm_index == o.arm_index && batch_size == o.batch_size &&
         iterations == o.iterations && learning_rate == o.learning_rate && train_loss == o.train_loss &&
         val_loss == o.val_loss && val_accuracy == o.val_accuracy && cost == o.cost && probs == o.probs &&
         cumulative_iterations == o.cumulative_iterations && seed == o.seed;
}

nlohmann::json to_json(const EpochRecord& r, bool include_wall_time) {
  nlohmann::json j{{"epoch", r.epoch},
                   {"arm_index", r.arm_index},
                   {"batch_size", r.batch_size},
                   {"iterations", r.iterations},
                   {"learning_rate", r.learning_rate},
                   {"train_loss", r.train_loss},
                   {"val_loss", r.val_loss},
                   {"val_accuracy", r.val_accuracy},
                   {"cost", r.cost},
                   {"probs_snapshot", r.probs},
                   {"cumulative_iterations", r.cumulative_iterations},
                   {"seed", r.seed}};
  if (include_wall_time) j["wall_time"] = r.wall_time;
  return j;
}

EpochRecord record_from_json(const nlohmann::json& j) {
  EpochRecord r;
  r.epoch = j.at("epoch").get<std::int64_t>();
  r.arm_index = j.at("arm_index").get<std::size_t>();
  r.batch_size = j.at("batch_size").get<std::int64_t>();
  r.iterations = j.at("iterations").get<std::int64_t>();
  r.learning_rate = j.at("learning_rate").get<double>();
  r.train_loss = j.at("train_loss").get<double>();
  r.val_loss = j.at("val_loss").get<double>();
  r.val_accuracy = j.at("val_accuracy").get<double>();
  r.cost = j.at("cost").get<int>();
  r.probs = j.at("probs_snapshot").get<std::vector<double>>();
  r.cumulative_iterations = j.at("cumulative_iterations").get<std::int64_t>();
  r.seed = j.value("seed", std::uint64_t{0});
  r.wall_time = j.value("wall_time", 0.0);
  return r;
}

int validation_cost(double prev_loss, double new_loss) {
  if (!std::isfinite(prev_loss) || !std::isfinite(new_loss)) {
    throw NumericError("validation loss is not finite (previous " + format_double(prev_loss) + ", new " +
                       format_double(new_loss) + ")");
  }
  return new_loss < prev_loss ? 0 : 1;
}

EpochResult run_epoch(const model::ModelSpec& spec, ModelParams params, OptimizerState optimizer,
                      std::int64_t batch_size, double lr, const data::Dataset& dataset,
                      const data::BatchPlan& plan) {
  if (plan.order.size() != dataset.m()) throw std::invalid_argument("batch plan does not cover the training split");
  EpochResult out;
  std::vector<double> grad;
  double weighted_loss = 0.0;
  for (auto indices : data::batch_indices(plan, batch_size)) {
    const Batch batch = data::gather(dataset.train, indices);
    const double value = model::loss_and_grad(spec, params, batch, grad);
    if (!std::isfinite(value)) throw NumericError("training loss is not finite");
    weighted_loss += value * static_cast<double>(batch.size());
    optim::apply_step(params.values, grad, optimizer, lr);
    ++out.iterations;
  }
  out.train_loss = weighted_loss / static_cast<double>(dataset.m());
  out.val_loss = model::data_loss(spec, params, dataset.validation);
  out.params = std::move(params);
  out.optimizer = std::move(optimizer);
  return out;
}

nlohmann::json to_json(const Checkpoint& cp) {
  nlohmann::json j{{"epoch", cp.epoch},
                   {"seed", cp.seed},
                   {"params", optim::to_json(cp.params)},
                   {"optimizer_state", optim::to_json(cp.optimizer)},
                   {"bandit_state", bandit::to_json(cp.bandit)},
                   {"prev_val_loss", cp.prev_val_loss},
                   {"cumulative_iterations", cp.cumulative_iterations},
                   {"best_params", optim::to_json(cp.best_params)},
                   {"best_val_loss", cp.best_val_loss}};
  j["last_arm"] = cp.last_arm ? nlohmann::json(*cp.last_arm) : nlohmann::json(nullptr);
  j["rng"] = {{"bandit", {{"seed", cp.bandit.seed}, {"draw_count", cp.bandit.draw_count}}},
              {"shuffle", {{"stream", streams::kShuffle}, {"next_epoch", cp.epoch}}},
              {"params", {{"stream", streams::kParams}}}};
  return j;
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  Checkpoint cp;
  cp.epoch = j.at("epoch").get<std::int64_t>();
  cp.seed = j.at("seed").get<std::uint64_t>();
  cp.params = optim::params_from_json(j.at("params"));
  cp.optimizer = optim::state_from_json(j.at("optimizer_state"));
  cp.bandit = bandit::state_from_json(j.at("bandit_state"));
  cp.prev_val_loss = j.at("prev_val_loss").get<double>();
  cp.cumulative_iterations = j.at("cumulative_iterations").get<std::int64_t>();
  if (j.contains("last_arm") && !j.at("last_arm").is_null()) cp.last_arm = j.at("last_arm").get<std::size_t>();
  cp.best_params = optim::params_from_json(j.at("best_params"));
  cp.best_val_loss = j.at("best_val_loss").get<double>();
  return cp;
}

RunResult run_rmgd(const RunConfig& config, const data::Dataset& dataset, const RunOptions& options) {
  return run_loop(config, dataset, config.arms, true, "rmgd", options);
}

RunResult run_mgd(const RunConfig& config, const data::Dataset& dataset, std::int64_t batch_size,
                  const RunOptions& options) {
  return run_loop(config, dataset, bandit::ArmSet({batch_size}), false, "mgd", options);
}

GridRow summary_row(const RunResult& result, std::optional<std::int64_t> batch_size) {
  GridRow row;
  row.algorithm = result.algorithm;
  row.batch_size = batch_size;
  row.iterations = result.total_iterations;
  row.wall_time_s = result.wall_time_s;
  row.final_val_loss = result.final_val_loss;
  row.test_accuracy = result.test_accuracy;
  row.best_val_test_accuracy = result.best_val_test_accuracy;
  return row;
}

GridSummary run_grid_search(const RunConfig& config, const data::Dataset& dataset, const GridOptions& options) {
  const std::size_t k = config.arms.size();
  GridSummary summary;
  summary.rows.resize(k);
  const auto m = static_cast<std::int64_t>(dataset.m());

  if (options.count_only) {
    for (std::size_t i = 0; i < k; ++i) {
      summary.rows[i].algorithm = "mgd";
      summary.rows[i].batch_size = config.arms[i];
      summary.rows[i].iterations = config.epochs * data::iterations_per_epoch(m, config.arms[i]);
    }
  } else {
    summary.runs.resize(k);
    detail::parallel_for(k, options.parallel, [&](std::size_t i) {
      GridRow& row = summary.rows[i];
      row.algorithm = "mgd";
      row.batch_size = config.arms[i];
      try {
        summary.runs[i] = run_mgd(config, dataset, config.arms[i]);
        row = summary_row(summary.runs[i], config.arms[i]);
        if (options.on_run) options.on_run(i, summary.runs[i]);
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    });
  }

  summary.total.algorithm = "mgd_total";
  for (std::size_t i = 0; i < k; ++i) {
    const GridRow& row = summary.rows[i];
    summary.total.iterations += row.iterations;
    summary.total.wall_time_s += row.wall_time_s;
    if (!row.error.empty() || !row.test_accuracy) continue;
    // Strict comparison keeps the earlier (smaller) batch size on ties.
    if (!summary.best || *row.test_accuracy > *summary.rows[*summary.best].test_accuracy) summary.best = i;
  }
  return summary;
}

void write_summary_csv(std::ostream& out, const std::vector<GridRow>& rows) {
  out << "algorithm,batch_size,iterations,wall_time_s,final_val_loss,test_accuracy,best_val_test_accuracy\n";
  for (const auto& row : rows) {
    out << row.algorithm << ',';
    if (row.batch_size) out << *row.batch_size;
    out << ',' << row.iterations << ',' << format_double(row.wall_time_s) << ',';
    write_optional(out, row.final_val_loss);
    out << ',';
    write_optional(out, row.test_accuracy);
    out << ',';
    write_optional(out, row.best_val_test_accuracy);
    out << '\n';
  }
}

void write_jsonl(std::ostream& out, const std::vector<EpochRecord>& records, bool include_wall_time) {
  for (const auto& r : records) out << to_json(r, include_wall_time).dump() << '\n';
}

std::vector<EpochRecord> read_jsonl(std::istream& in) {
  std::vector<EpochRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    records.push_back(record_from_json(nlohmann::json::parse(line)));
  }
  return records;
}

void write_trace_csv(std::ostream& out, const std::vector<EpochRecord>& records) {
  const std::size_t k = records.empty() ? 0 : records.front().probs.size();
  out << "epoch,chosen";
  for (std::size_t i = 1; i <= k; ++i) out << ",p" << i;
  out << '\n';
  for (const auto& r : records) {
    if (r.probs.size() != k) throw std::invalid_argument("trace records disagree on the number of arms");
    out << r.epoch << ',' << r.batch_size;
    for (double p : r.probs) out << ',' << format_double(p);
    out << '\n';
  }
}

}  // namespace rmgd::trainer
