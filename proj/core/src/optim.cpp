#include "rmgd/optim.hpp"

#include <cmath>
#include <stdexcept>

#include "rmgd/error.hpp"

namespace rmgd::optim {

const Slice& ModelParams::slice(std::string_view name) const {
  for (const auto& s : layout) {
    if (s.name == name) return s;
  }
  throw LayoutError("no parameter slice named '" + std::string(name) + "'");
}

std::string_view to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kSgd: return "sgd";
    case OptimizerKind::kMomentum: return "momentum";
    case OptimizerKind::kAdagrad: return "adagrad";
    case OptimizerKind::kAdam: return "adam";
  }
  return "unknown";
}

OptimizerKind kind_from_string(std::string_view name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "momentum") return OptimizerKind::kMomentum;
  if (name == "adagrad") return OptimizerKind::kAdagrad;
  if (name == "adam") return OptimizerKind::kAdam;
  throw std::invalid_argument("unknown optimizer '" + std::string(name) + "'");
}

void validate(const OptimizerConfig& config) {
  if (!(config.momentum >= 0.0 && config.momentum < 1.0)) {
    throw std::invalid_argument("momentum must lie in [0, 1)");
  }
  if (!(config.beta1 >= 0.0 && config.beta1 < 1.0) || !(config.beta2 >= 0.0 && config.beta2 < 1.0)) {
    throw std::invalid_argument("adam betas must lie in [0, 1)");
  }
  if (!(config.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (!(config.weight_decay >= 0.0)) throw std::invalid_argument("weight decay must be non-negative");
}

OptimizerState make_state(const OptimizerConfig& config, std::size_t num_params) {
  validate(config);
  std::size_t num_slots = 0;
  switch (config.kind) {
    case OptimizerKind::kSgd: num_slots = 0; break;
    case OptimizerKind::kMomentum:
    case OptimizerKind::kAdagrad: num_slots = 1; break;
    case OptimizerKind::kAdam: num_slots = 2; break;
  }
  return OptimizerState{.config = config,
                        .slots = std::vector<std::vector<double>>(num_slots,
                                                                  std::vector<double>(num_params, 0.0)),
                        .step_count = 0};
}

void apply_step(std::span<double> params, std::span<const double> grads, OptimizerState& state,
                double lr) {
  if (grads.size() != params.size()) {
    throw std::invalid_argument("gradient length " + std::to_string(grads.size()) +
                                " does not match parameter length " + std::to_string(params.size()));
  }
  if (!(lr > 0.0) || !std::isfinite(lr)) {
    throw std::invalid_argument("learning rate must be positive and finite");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw NumericError("non-finite gradient at index " + std::to_string(i),
                         static_cast<std::int64_t>(i));
    }
  }
  for (const auto& slot : state.slots) {
    if (slot.size() != params.size()) {
      throw std::invalid_argument("optimizer slot length does not match parameter length");
    }
  }

  const OptimizerConfig& c = state.config;
  ++state.step_count;
  const double wd = c.weight_decay;

  switch (c.kind) {
    case OptimizerKind::kSgd:
      for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i] + wd * params[i];
        params[i] -= lr * g;
      }
      break;
    case OptimizerKind::kMomentum: {
      auto& velocity = state.slots[0];
      for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i] + wd * params[i];
        velocity[i] = c.momentum * velocity[i] + g;
        params[i] -= lr * velocity[i];
      }
      break;
    }
    case OptimizerKind::kAdagrad: {
      auto& accum = state.slots[0];
      for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i] + wd * params[i];
        accum[i] += g * g;
        params[i] -= lr * g / (std::sqrt(accum[i]) + c.epsilon);
      }
      break;
    }
    case OptimizerKind::kAdam: {
      auto& m = state.slots[0];
      auto& v = state.slots[1];
      const auto t = static_cast<double>(state.step_count);
      const double correction1 = 1.0 - std::pow(c.beta1, t);
      const double correction2 = 1.0 - std::pow(c.beta2, t);
      for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i] + wd * params[i];
        m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
        v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
        const double m_hat = m[i] / correction1;
        const double v_hat = v[i] / correction2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + c.epsilon);
      }
      break;
    }
  }

  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!std::isfinite(params[i])) {
      throw NumericError("parameter " + std::to_string(i) + " became non-finite",
                         static_cast<std::int64_t>(i));
    }
  }
}

std::pair<ModelParams, OptimizerState> step(ModelParams params, std::span<const double> grads,
                                            OptimizerState state, double lr) {
  apply_step(params.values, grads, state, lr);
  return {std::move(params), std::move(state)};
}

void validate(const LearningRateSchedule& schedule) {
  if (schedule.scale_with_batch) {
    if (!(schedule.scale_with_batch->reference_lr > 0.0) || schedule.scale_with_batch->reference_batch < 1) {
      throw std::invalid_argument("batch scaling needs a positive reference rate and batch");
    }
  } else if (!(schedule.base > 0.0)) {
    throw std::invalid_argument("base learning rate must be positive");
  }
  for (std::size_t i = 0; i < schedule.milestones.size(); ++i) {
    const auto& ms = schedule.milestones[i];
    if (!(ms.multiplier > 0.0)) throw std::invalid_argument("milestone multipliers must be positive");
    if (i > 0 && ms.epoch <= schedule.milestones[i - 1].epoch) {
      throw std::invalid_argument("milestone epochs must be strictly increasing");
    }
  }
}

double effective_lr(const LearningRateSchedule& schedule, std::int64_t epoch,
                    std::int64_t batch_size) {
  double lr = schedule.base;
  if (schedule.scale_with_batch) {
    lr = schedule.scale_with_batch->reference_lr * static_cast<double>(batch_size) /
         static_cast<double>(schedule.scale_with_batch->reference_batch);
  }
  for (const auto& ms : schedule.milestones) {
    if (epoch >= ms.epoch) lr *= ms.multiplier;
  }
  return lr;
}

nlohmann::json to_json(const ModelParams& params) {
  nlohmann::json layout = nlohmann::json::array();
  for (const auto& s : params.layout) {
    layout.push_back({{"name", s.name},
                      {"offset", s.offset},
                      {"rows", s.rows},
                      {"cols", s.cols},
                      {"is_weight", s.is_weight}});
  }
  return {{"values", params.values}, {"layout", layout}};
}

ModelParams params_from_json(const nlohmann::json& j) {
  ModelParams params;
  params.values = j.at("values").get<std::vector<double>>();
  for (const auto& s : j.at("layout")) {
    params.layout.push_back(Slice{.name = s.at("name").get<std::string>(),
                                  .offset = s.at("offset").get<std::size_t>(),
                                  .rows = s.at("rows").get<std::size_t>(),
                                  .cols = s.at("cols").get<std::size_t>(),
                                  .is_weight = s.at("is_weight").get<bool>()});
  }
  return params;
}

nlohmann::json to_json(const OptimizerConfig& config) {
  return {{"kind", to_string(config.kind)},
          {"momentum", config.momentum},
          {"beta1", config.beta1},
          {"beta2", config.beta2},
          {"epsilon", config.epsilon},
          {"weight_decay", config.weight_decay}};
}

OptimizerConfig config_from_json(const nlohmann::json& j) {
  OptimizerConfig c;
  c.kind = kind_from_string(j.at("kind").get<std::string>());
  c.momentum = j.value("momentum", c.momentum);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  validate(c);
  return c;
}

nlohmann::json to_json(const OptimizerState& state) {
  return {{"config", to_json(state.config)}, {"slots", state.slots}, {"step_count", state.step_count}};
}

OptimizerState state_from_json(const nlohmann::json& j) {
  return OptimizerState{.config = config_from_json(j.at("config")),
                        .slots = j.at("slots").get<std::vector<std::vector<double>>>(),
                        .step_count = j.at("step_count").get<std::uint64_t>()};
}

nlohmann::json to_json(const LearningRateSchedule& schedule) {
  nlohmann::json j{{"base", schedule.base}};
  if (schedule.scale_with_batch) {
    j["scale_with_batch"] = {{"reference_lr", schedule.scale_with_batch->reference_lr},
                             {"reference_batch", schedule.scale_with_batch->reference_batch}};
  }
  nlohmann::json ms = nlohmann::json::array();
  for (const auto& m : schedule.milestones) ms.push_back({m.epoch, m.multiplier});
  j["milestones"] = ms;
  return j;
}

LearningRateSchedule schedule_from_json(const nlohmann::json& j) {
  LearningRateSchedule s;
  s.base = j.value("base", s.base);
  if (j.contains("scale_with_batch") && !j.at("scale_with_batch").is_null()) {
    const auto& sc = j.at("scale_with_batch");
    s.scale_with_batch = BatchScaling{.reference_lr = sc.at("reference_lr").get<double>(),
                                      .reference_batch = sc.at("reference_batch").get<std::int64_t>()};
  }
  if (j.contains("milestones")) {
    for (const auto& m : j.at("milestones")) {
      s.milestones.push_back(Milestone{.epoch = m.at(0).get<std::int64_t>(),
                                       .multiplier = m.at(1).get<double>()});
    }
  }
  validate(s);
  return s;
}

}  // namespace rmgd::optim
