#pragma once

// Small differentiable classifiers with analytic gradients:
//   logistic: x -> W x + b -> softmax
//   mlp:      x -> ReLU(W1 x + b1) -> W2 h + b2 -> softmax
// Training loss is mean softmax cross-entropy plus (l2 / 2) * ||weights||^2;
// biases are not regularized.

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rmgd/optim.hpp"
#include "rmgd/tensor.hpp"

namespace rmgd::model {

using optim::ModelParams;

enum class ModelKind { kLogistic, kMlp };

std::string_view to_string(ModelKind kind);
ModelKind kind_from_string(std::string_view name);

struct ModelSpec {
  ModelKind kind = ModelKind::kLogistic;
  std::int64_t input_dim = 1;
  std::int64_t hidden_dim = 0;  // mlp only
  std::int64_t num_classes = 2;
  double l2 = 0.0;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

void validate(const ModelSpec& spec);
std::vector<optim::Slice> make_layout(const ModelSpec& spec);
std::size_t num_params(const ModelSpec& spec);

/// All-zero parameters with the spec's layout.
ModelParams zero_params(const ModelSpec& spec);

/// Weights uniform in (-a, a) with a = sqrt(6 / (fan_in + fan_out)), biases 0.
ModelParams init_params(const ModelSpec& spec, std::uint64_t seed);

/// Regularized training loss. Throws LayoutError when `params` does not
/// match the spec.
double loss(const ModelSpec& spec, const ModelParams& params, const Batch& batch);

/// Mean cross-entropy without the L2 term (the validation loss).
double data_loss(const ModelSpec& spec, const ModelParams& params, const Batch& batch);

/// Regularized loss and its gradient; `grad` is resized to params.size().
double loss_and_grad(const ModelSpec& spec, const ModelParams& params, const Batch& batch,
                     std::vector<double>& grad);

std::pair<double, std::vector<double>> loss_and_grad(const ModelSpec& spec, const ModelParams& params,
                                                     const Batch& batch);

/// Argmax class per sample; ties go to the lowest class index.
std::vector<int> predict(const ModelSpec& spec, const ModelParams& params, const Batch& batch);

/// Fraction of samples whose predicted class equals the label.
double accuracy(const ModelSpec& spec, const ModelParams& params, const Batch& batch);

nlohmann::json to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j);

}  // namespace rmgd::model
