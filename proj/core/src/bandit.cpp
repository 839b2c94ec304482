#include "rmgd/bandit.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "rmgd/rng.hpp"

namespace rmgd::bandit {

namespace {

constexpr double kSimplexTolerance = 1e-12;

void check_cost(const BanditState& state, const Cost& cost) {
  if (cost.value != 0 && cost.value != 1) {
    throw std::invalid_argument("cost value must be 0 or 1, got " + std::to_string(cost.value));
  }
  if (cost.arm_index >= state.probs.size()) {
    throw std::invalid_argument("cost arm index " + std::to_string(cost.arm_index) +
                                " out of range for " + std::to_string(state.probs.size()) + " arms");
  }
}

void check_floor(double floor, std::size_t k) {
  if (!(floor >= 0.0) || floor * static_cast<double>(k) > 1.0) {
    throw std::invalid_argument("probability floor must lie in [0, 1/K]");
  }
}

}  // namespace

ArmSet::ArmSet(std::vector<std::int64_t> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.empty()) {
    throw std::invalid_argument("arm set must contain at least one batch size");
  }
  for (std::size_t i = 0; i < sizes_.size(); ++i) {
    if (sizes_[i] <= 0) {
      throw std::invalid_argument("batch sizes must be positive, got " + std::to_string(sizes_[i]));
    }
    if (i > 0 && sizes_[i] <= sizes_[i - 1]) {
      throw std::invalid_argument("batch sizes must be strictly increasing");
    }
  }
}

std::optional<std::size_t> ArmSet::index_of(std::int64_t batch_size) const noexcept {
  for (std::size_t i = 0; i < sizes_.size(); ++i) {
    if (sizes_[i] == batch_size) return i;
  }
  return std::nullopt;
}

BanditState init_uniform(ArmSet arms, double beta, std::uint64_t seed, double floor) {
  if (!(beta > 0.0 && beta < 1.0)) {
    throw std::invalid_argument("beta must lie in (0, 1), got " + std::to_string(beta));
  }
  const std::size_t k = arms.size();
  check_floor(floor, k);
  BanditState state{.arms = std::move(arms),
                    .probs = std::vector<double>(k, 1.0 / static_cast<double>(k)),
                    .beta = beta,
                    .epoch = 0,
                    .seed = seed,
                    .draw_count = 0,
                    .floor = floor};
  return state;
}

double default_beta(std::int64_t k, std::int64_t horizon) {
  if (k < 2) throw std::invalid_argument("default beta needs at least two arms");
  if (horizon < 1) throw std::invalid_argument("default beta needs a horizon of at least one epoch");
  const auto kd = static_cast<double>(k);
  return std::sqrt(std::log(kd) / (kd * static_cast<double>(horizon)));
}

double regret_bound(std::int64_t k, std::int64_t horizon) {
  if (k < 1 || horizon < 0) throw std::invalid_argument("regret bound needs k >= 1 and horizon >= 0");
  const auto kd = static_cast<double>(k);
  return 2.0 * std::sqrt(kd * std::log(kd) * static_cast<double>(horizon));
}

std::size_t sample_arm(BanditState& state) {
  CounterRng rng(state.seed, state.draw_count);
  const double u = rng.uniform();
  state.draw_count = rng.counter();

  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < state.probs.size(); ++i) {
    if (state.probs[i] <= 0.0) continue;
    cumulative += state.probs[i];
    last_positive = i;
    if (u < cumulative) return i;
  }
  // u landed in the rounding gap between the cumulative sum and 1.
  return last_positive;
}

BanditState update(BanditState state, const Cost& cost) {
  check_cost(state, cost);
  ++state.epoch;
  if (cost.value == 0) return state;

  auto& probs = state.probs;
  const std::size_t k = cost.arm_index;
  const double played = probs[k];
  probs[k] = played * std::exp(-state.beta * static_cast<double>(cost.value) / played);

  double total = 0.0;
  for (double p : probs) total += p;
  for (double& p : probs) p /= total;

  if (state.floor > 0.0) apply_floor(probs, state.floor);
  return state;
}

std::vector<double> estimated_gradient(const BanditState& state, const Cost& cost) {
  check_cost(state, cost);
  std::vector<double> z(state.probs.size(), 0.0);
  if (cost.value != 0) {
    z[cost.arm_index] = static_cast<double>(cost.value) / state.probs[cost.arm_index];
  }
  return z;
}

void apply_floor(std::vector<double>& probs, double floor) {
  check_floor(floor, probs.size());
  if (floor == 0.0) return;

  std::vector<bool> clamped(probs.size(), false);
  for (;;) {
    std::size_t clamped_count = 0;
    bool changed = false;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (!clamped[i] && probs[i] < floor) {
        clamped[i] = true;
        changed = true;
      }
      if (clamped[i]) ++clamped_count;
    }
    if (!changed) return;

    double free_mass = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (!clamped[i]) free_mass += probs[i];
    }
    const double target = 1.0 - static_cast<double>(clamped_count) * floor;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      probs[i] = clamped[i] ? floor : probs[i] * (target / free_mass);
    }
  }
}

void validate(const BanditState& state) {
  if (state.probs.size() != state.arms.size()) {
    throw std::invalid_argument("probability vector length does not match arm count");
  }
  if (!(state.beta > 0.0 && state.beta < 1.0)) {
    throw std::invalid_argument("beta must lie in (0, 1)");
  }
  check_floor(state.floor, state.probs.size());
  double total = 0.0;
  for (std::size_t i = 0; i < state.probs.size(); ++i) {
    const double p = state.probs[i];
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw std::invalid_argument("probability " + std::to_string(i) + " outside [0, 1]");
    }
    if (p < state.floor) {
      throw std::invalid_argument("probability " + std::to_string(i) + " below floor");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > kSimplexTolerance) {
    throw std::invalid_argument("probabilities do not sum to one");
  }
}

nlohmann::json to_json(const BanditState& state) {
  return nlohmann::json{{"sizes", state.arms.sizes()},
                        {"probs", state.probs},
                        {"beta", state.beta},
                        {"epoch", state.epoch},
                        {"seed", state.seed},
                        {"draw_count", state.draw_count},
                        {"floor", state.floor}};
}

BanditState state_from_json(const nlohmann::json& j) {
  BanditState state{.arms = ArmSet(j.at("sizes").get<std::vector<std::int64_t>>()),
                    .probs = j.at("probs").get<std::vector<double>>(),
                    .beta = j.at("beta").get<double>(),
                    .epoch = j.at("epoch").get<std::uint64_t>(),
                    .seed = j.at("seed").get<std::uint64_t>(),
                    .draw_count = j.at("draw_count").get<std::uint64_t>(),
                    .floor = j.value("floor", kDefaultProbabilityFloor)};
  validate(state);
  return state;
}

}  // namespace rmgd::bandit
