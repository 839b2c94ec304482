#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace rmgd::optim {

/// A named rows x cols block of the flat parameter vector, stored row-major.
struct Slice {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 1;
  bool is_weight = true;  // false for biases; only weights are L2-regularized

  std::size_t size() const noexcept { return rows * cols; }
  friend bool operator==(const Slice&, const Slice&) = default;
};

/// Flat parameter vector plus the layout mapping model components into it.
struct ModelParams {
  std::vector<double> values;
  std::vector<Slice> layout;

  std::size_t size() const noexcept { return values.size(); }
  const Slice& slice(std::string_view name) const;
  std::span<double> view(const Slice& s) { return {values.data() + s.offset, s.size()}; }
  std::span<const double> view(const Slice& s) const { return {values.data() + s.offset, s.size()}; }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

enum class OptimizerKind { kSgd, kMomentum, kAdagrad, kAdam };

std::string_view to_string(OptimizerKind kind);
OptimizerKind kind_from_string(std::string_view name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kSgd;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;  // coupled: adds weight_decay * w to the gradient

  friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

/// Hyperparameters plus per-parameter slots:
///   sgd      -> none
///   momentum -> {velocity}
///   adagrad  -> {sum of squared gradients}
///   adam     -> {first moment, second moment}
struct OptimizerState {
  OptimizerConfig config;
  std::vector<std::vector<double>> slots;
  std::uint64_t step_count = 0;

  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

void validate(const OptimizerConfig& config);
OptimizerState make_state(const OptimizerConfig& config, std::size_t num_params);

/// In-place update used by the training loop. Rejects non-finite gradients
/// with a NumericError naming the first bad index, and non-finite results.
void apply_step(std::span<double> params, std::span<const double> grads, OptimizerState& state,
                double lr);

/// Value-semantics form of apply_step.
std::pair<ModelParams, OptimizerState> step(ModelParams params, std::span<const double> grads,
                                            OptimizerState state, double lr);

struct BatchScaling {
  double reference_lr = 0.05;
  std::int64_t reference_batch = 256;
  friend bool operator==(const BatchScaling&, const BatchScaling&) = default;
};

struct Milestone {
  std::int64_t epoch = 0;
  double multiplier = 0.1;
  friend bool operator==(const Milestone&, const Milestone&) = default;
};

/// Learning rate resolved once per epoch: either a fixed base or a rate
/// proportional to the batch size, decayed by step multipliers.
struct LearningRateSchedule {
  double base = 0.01;
  std::optional<BatchScaling> scale_with_batch;
  std::vector<Milestone> milestones;
  friend bool operator==(const LearningRateSchedule&, const LearningRateSchedule&) = default;
};

void validate(const LearningRateSchedule& schedule);

/// Base rate (or reference_lr * batch_size / reference_batch when scaling is
/// on), times every milestone multiplier whose epoch is <= `epoch`.
double effective_lr(const LearningRateSchedule& schedule, std::int64_t epoch,
                    std::int64_t batch_size);

nlohmann::json to_json(const ModelParams& params);
ModelParams params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const OptimizerConfig& config);
OptimizerConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const OptimizerState& state);
OptimizerState state_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LearningRateSchedule& schedule);
LearningRateSchedule schedule_from_json(const nlohmann::json& j);

}  // namespace rmgd::optim
