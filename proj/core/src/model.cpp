#include "rmgd/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "rmgd/error.hpp"
#include "rmgd/rng.hpp"

namespace rmgd::model {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMat>;
using MatMap = Eigen::Map<RowMat>;
using ConstVecMap = Eigen::Map<const Eigen::RowVectorXd>;
using VecMap = Eigen::Map<Eigen::RowVectorXd>;

ConstMatMap as_matrix(const ModelParams& p, const optim::Slice& s) {
  return {p.values.data() + s.offset, static_cast<Eigen::Index>(s.rows), static_cast<Eigen::Index>(s.cols)};
}
MatMap as_matrix(std::vector<double>& g, const optim::Slice& s) {
  return {g.data() + s.offset, static_cast<Eigen::Index>(s.rows), static_cast<Eigen::Index>(s.cols)};
}
ConstVecMap as_row(const ModelParams& p, const optim::Slice& s) {
  return {p.values.data() + s.offset, static_cast<Eigen::Index>(s.size())};
}
VecMap as_row(std::vector<double>& g, const optim::Slice& s) {
  return {g.data() + s.offset, static_cast<Eigen::Index>(s.size())};
}

void check_inputs(const ModelSpec& spec, const ModelParams& params, const Batch& batch) {
  if (params.layout != make_layout(spec) || params.values.size() != num_params(spec)) {
    throw LayoutError("parameter layout does not match the model spec");
  }
  const auto n = batch.labels.size();
  if (n == 0) throw std::invalid_argument("batch must contain at least one sample");
  if (batch.features.rows != n || batch.features.data.size() != n * batch.features.cols) {
    throw std::invalid_argument("batch feature rows do not match label count");
  }
  if (batch.features.cols != static_cast<std::size_t>(spec.input_dim)) {
    throw LayoutError("batch feature width " + std::to_string(batch.features.cols) +
                      " does not match input_dim " + std::to_string(spec.input_dim));
  }
  for (int y : batch.labels) {
    if (y < 0 || y >= spec.num_classes) {
      throw std::invalid_argument("label " + std::to_string(y) + " outside [0, num_classes)");
    }
  }
}

struct Forward {
  RowMat pre_activation;  // mlp only, n x hidden
  RowMat hidden;          // mlp only, n x hidden
  RowMat logits;          // n x classes
};

Forward forward(const ModelSpec& spec, const ModelParams& params, const Batch& batch) {
  const ConstMatMap x(batch.features.data.data(), static_cast<Eigen::Index>(batch.features.rows),
                      static_cast<Eigen::Index>(batch.features.cols));
  Forward f;
  const auto& layout = params.layout;
  if (spec.kind == ModelKind::kLogistic) {
    f.logits = x * as_matrix(params, layout[0]).transpose();
    f.logits.rowwise() += as_row(params, layout[1]);
  } else {
    f.pre_activation = x * as_matrix(params, layout[0]).transpose();
    f.pre_activation.rowwise() += as_row(params, layout[1]);
    f.hidden = f.pre_activation.cwiseMax(0.0);
    f.logits = f.hidden * as_matrix(params, layout[2]).transpose();
    f.logits.rowwise() += as_row(params, layout[3]);
  }
  return f;
}

// Turns logits into softmax probabilities in place and returns the mean
// cross-entropy, using log-sum-exp per row.
double softmax_cross_entropy(RowMat& logits, const std::vector<int>& labels) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    auto row = logits.row(i);
    const double peak = row.maxCoeff();
    const double lse = peak + std::log((row.array() - peak).exp().sum());
    total += lse - row(labels[static_cast<std::size_t>(i)]);
    row = (row.array() - lse).exp().matrix();
  }
  return total / static_cast<double>(logits.rows());
}

double l2_penalty(const ModelSpec& spec, const ModelParams& params) {
  if (spec.l2 == 0.0) return 0.0;
  double sq = 0.0;
  for (const auto& s : params.layout) {
    if (!s.is_weight) continue;
    for (double w : params.view(s)) sq += w * w;
  }
  return 0.5 * spec.l2 * sq;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::kLogistic ? "logistic" : "mlp";
}

ModelKind kind_from_string(std::string_view name) {
  if (name == "logistic") return ModelKind::kLogistic;
  if (name == "mlp") return ModelKind::kMlp;
  throw std::invalid_argument("unknown model kind '" + std::string(name) + "'");
}

void validate(const ModelSpec& spec) {
  if (spec.input_dim < 1) throw std::invalid_argument("input_dim must be positive");
  if (spec.num_classes < 2) throw std::invalid_argument("num_classes must be at least 2");
  if (spec.kind == ModelKind::kMlp && spec.hidden_dim < 1) {
    throw std::invalid_argument("mlp hidden_dim must be positive");
  }
  if (!(spec.l2 >= 0.0)) throw std::invalid_argument("l2 must be non-negative");
}

std::vector<optim::Slice> make_layout(const ModelSpec& spec) {
  validate(spec);
  const auto d = static_cast<std::size_t>(spec.input_dim);
  const auto c = static_cast<std::size_t>(spec.num_classes);
  std::vector<optim::Slice> layout;
  std::size_t offset = 0;
  auto add = [&](const char* name, std::size_t rows, std::size_t cols, bool is_weight) {
    layout.push_back(optim::Slice{.name = name, .offset = offset, .rows = rows, .cols = cols, .is_weight = is_weight});
    offset += rows * cols;
  };
  if (spec.kind == ModelKind::kLogistic) {
    add("W", c, d, true);
    add("b", 1, c, false);
  } else {
    const auto h = static_cast<std::size_t>(spec.hidden_dim);
    add("W1", h, d, true);
    add("b1", 1, h, false);
    add("W2", c, h, true);
    add("b2", 1, c, false);
  }
  return layout;
}

std::size_t num_params(const ModelSpec& spec) {
  std::size_t n = 0;
  for (const auto& s : make_layout(spec)) n += s.size();
  return n;
}

ModelParams zero_params(const ModelSpec& spec) {
  ModelParams p;
  p.layout = make_layout(spec);
  p.values.assign(num_params(spec), 0.0);
  return p;
}

ModelParams init_params(const ModelSpec& spec, std::uint64_t seed) {
  ModelParams p = zero_params(spec);
  CounterRng rng(seed);
  for (const auto& s : p.layout) {
    if (!s.is_weight) continue;
    const double limit = std::sqrt(6.0 / static_cast<double>(s.rows + s.cols));
    for (double& w : p.view(s)) w = limit * (2.0 * rng.uniform() - 1.0);
  }
  return p;
}

double loss(const ModelSpec& spec, const ModelParams& params, const Batch& batch) {
  return data_loss(spec, params, batch) + l2_penalty(spec, params);
}

double data_loss(const ModelSpec& spec, const ModelParams& params, const Batch& batch) {
  check_inputs(spec, params, batch);
  Forward f = forward(spec, params, batch);
  return softmax_cross_entropy(f.logits, batch.labels);
}

double loss_and_grad(const ModelSpec& spec, const ModelParams& params, const Batch& batch,
                     std::vector<double>& grad) {
  check_inputs(spec, params, batch);
  Forward f = forward(spec, params, batch);
  const double ce = softmax_cross_entropy(f.logits, batch.labels);

  // d(mean CE)/d(logits) = (softmax - onehot) / n
  RowMat& delta = f.logits;
  for (std::size_t i = 0; i < batch.labels.size(); ++i) {
    delta(static_cast<Eigen::Index>(i), batch.labels[i]) -= 1.0;
  }
  delta /= static_cast<double>(batch.labels.size());

  grad.assign(params.values.size(), 0.0);
  const auto& layout = params.layout;
  const ConstMatMap x(batch.features.data.data(), static_cast<Eigen::Index>(batch.features.rows),
                      static_cast<Eigen::Index>(batch.features.cols));
  if (spec.kind == ModelKind::kLogistic) {
    as_matrix(grad, layout[0]).noalias() = delta.transpose() * x;
    as_row(grad, layout[1]) = delta.colwise().sum();
  } else {
    as_matrix(grad, layout[2]).noalias() = delta.transpose() * f.hidden;
    as_row(grad, layout[3]) = delta.colwise().sum();
    RowMat d_hidden = delta * as_matrix(params, layout[2]);
    // ReLU subgradient at zero is taken as zero.
    d_hidden = (f.pre_activation.array() > 0.0).select(d_hidden, 0.0);
    as_matrix(grad, layout[0]).noalias() = d_hidden.transpose() * x;
    as_row(grad, layout[1]) = d_hidden.colwise().sum();
  }

  if (spec.l2 != 0.0) {
    for (const auto& s : layout) {
      if (!s.is_weight) continue;
      for (std::size_t i = s.offset; i < s.offset + s.size(); ++i) grad[i] += spec.l2 * params.values[i];
    }
  }
  return ce + l2_penalty(spec, params);
}

std::pair<double, std::vector<double>> loss_and_grad(const ModelSpec& spec, const ModelParams& params,
                                                     const Batch& batch) {
  std::vector<double> grad;
  const double value = loss_and_grad(spec, params, batch, grad);
  return {value, std::move(grad)};
}

std::vector<int> predict(const ModelSpec& spec, const ModelParams& params, const Batch& batch) {
  check_inputs(spec, params, batch);
  const Forward f = forward(spec, params, batch);
  std::vector<int> out(batch.labels.size());
  for (Eigen::Index i = 0; i < f.logits.rows(); ++i) {
    int best = 0;
    for (Eigen::Index c = 1; c < f.logits.cols(); ++c) {
      if (f.logits(i, c) > f.logits(i, best)) best = static_cast<int>(c);
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

double accuracy(const ModelSpec& spec, const ModelParams& params, const Batch& batch) {
  const auto predicted = predict(spec, params, batch);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == batch.labels[i];
  return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

nlohmann::json to_json(const ModelSpec& spec) {
  nlohmann::json j{{"kind", to_string(spec.kind)},
                   {"input_dim", spec.input_dim},
                   {"num_classes", spec.num_classes},
                   {"l2", spec.l2}};
  if (spec.kind == ModelKind::kMlp) j["hidden_dim"] = spec.hidden_dim;
  return j;
}

ModelSpec spec_from_json(const nlohmann::json& j) {
  ModelSpec spec;
  spec.kind = kind_from_string(j.at("kind").get<std::string>());
  spec.input_dim = j.at("input_dim").get<std::int64_t>();
  spec.num_classes = j.at("num_classes").get<std::int64_t>();
  spec.hidden_dim = j.value("hidden_dim", std::int64_t{0});
  spec.l2 = j.value("l2", 0.0);
  validate(spec);
  return spec;
}

}  // namespace rmgd::model
