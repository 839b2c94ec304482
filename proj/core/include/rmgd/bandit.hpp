#pragma once

// Batch-size selector: a probability distribution over K candidate batch
// sizes, sampled once per epoch and updated with a normalized
// exponentiated-gradient step on the binary cost of the sampled arm.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

namespace rmgd::bandit {

/// Lower bound kept on every arm probability after an update. Without it the
/// importance weight 1/pi of a heavily penalized arm grows without bound and
/// the arm can never recover. Zero disables flooring.
inline constexpr double kDefaultProbabilityFloor = 1e-6;

/// Ordered set of candidate batch sizes: non-empty, positive, strictly increasing.
class ArmSet {
 public:
  explicit ArmSet(std::vector<std::int64_t> sizes);

  std::size_t size() const noexcept { return sizes_.size(); }
  std::int64_t operator[](std::size_t i) const { return sizes_.at(i); }
  const std::vector<std::int64_t>& sizes() const noexcept { return sizes_; }
  std::int64_t smallest() const noexcept { return sizes_.front(); }
  std::int64_t largest() const noexcept { return sizes_.back(); }
  std::optional<std::size_t> index_of(std::int64_t batch_size) const noexcept;

  friend bool operator==(const ArmSet&, const ArmSet&) = default;

 private:
  std::vector<std::int64_t> sizes_;
};

/// Binary feedback for the arm played in one epoch.
struct Cost {
  int value = 0;  // 0 = validation loss decreased, 1 = otherwise
  std::size_t arm_index = 0;
};

struct BanditState {
  ArmSet arms;
  std::vector<double> probs;
  double beta = 0.0;
  std::uint64_t epoch = 0;
  std::uint64_t seed = 0;
  std::uint64_t draw_count = 0;
  double floor = kDefaultProbabilityFloor;

  std::size_t num_arms() const noexcept { return probs.size(); }
  friend bool operator==(const BanditState&, const BanditState&) = default;
};

/// Uniform prior over `arms`. Throws std::invalid_argument when beta is not in
/// (0, 1) or the floor is negative or exceeds 1/K.
BanditState init_uniform(ArmSet arms, double beta, std::uint64_t seed,
                         double floor = kDefaultProbabilityFloor);

/// sqrt(ln k / (k * horizon)), the step size that balances the two terms of
/// the regret bound. Requires k >= 2 and horizon >= 1.
double default_beta(std::int64_t k, std::int64_t horizon);

/// Regret bound 2 * sqrt(k * ln k * horizon) attained with default_beta.
double regret_bound(std::int64_t k, std::int64_t horizon);

/// Draws an arm index by inverse CDF over `probs` in index order and advances
/// `draw_count`. The draw is a pure function of (seed, draw_count, probs).
std::size_t sample_arm(BanditState& state);

/// One selector step. The played arm's mass is multiplied by
/// exp(-beta * y / pi_k), the vector is renormalized, then the floor is
/// re-applied. A zero cost returns the probabilities bit-for-bit unchanged.
/// The epoch counter advances in both cases.
[[nodiscard]] BanditState update(BanditState state, const Cost& cost);

/// Importance-weighted cost estimate: y / pi_k at the played arm, 0 elsewhere.
std::vector<double> estimated_gradient(const BanditState& state, const Cost& cost);

/// Clamps every entry to at least `floor` and rescales the unclamped entries
/// so the vector sums to one. Repeats until no entry is below the floor.
void apply_floor(std::vector<double>& probs, double floor);

/// Throws std::invalid_argument describing the first violated invariant.
void validate(const BanditState& state);

nlohmann::json to_json(const BanditState& state);
BanditState state_from_json(const nlohmann::json& j);

}  // namespace rmgd::bandit
