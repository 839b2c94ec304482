#pragma once

// Bandit-only simulation of the batch-size selector against binary cost
// sequences, with regret accounting against the best fixed arm in hindsight.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

namespace rmgd::regret {

/// horizon x K matrix of 0/1 costs, row-major.
struct CostMatrix {
  std::size_t horizon = 0;
  std::size_t num_arms = 0;
  std::vector<std::uint8_t> data;

  std::uint8_t operator()(std::size_t t, std::size_t i) const { return data[t * num_arms + i]; }
  std::span<const std::uint8_t> row(std::size_t t) const { return {data.data() + t * num_arms, num_arms}; }
};

enum class EnvironmentKind { kStochastic, kAdversarial };

/// Either independent Bernoulli costs per arm and epoch, or a fixed
/// (oblivious) cost matrix.
struct CostEnvironment {
  EnvironmentKind kind = EnvironmentKind::kStochastic;
  std::vector<double> means;  // stochastic
  CostMatrix matrix;          // adversarial
  std::int64_t horizon = 0;

  static CostEnvironment stochastic(std::vector<double> means, std::int64_t horizon);
  static CostEnvironment adversarial(CostMatrix matrix);

  std::size_t num_arms() const noexcept;
};

void validate(const CostEnvironment& env);

/// Full cost table for one repeat. Adversarial environments ignore the seed.
CostMatrix realize(const CostEnvironment& env, std::uint64_t seed);

/// <pi, y>: the expected cost of one epoch under distribution `probs`.
double expected_selecting_loss(std::span<const double> probs, std::span<const std::uint8_t> costs);

/// Arm with the smallest column sum and that sum; ties go to the lowest index.
std::pair<std::size_t, std::int64_t> best_fixed_arm(const CostMatrix& costs);
std::pair<std::size_t, std::int64_t> best_fixed_arm(const CostEnvironment& env);

struct RegretReport {
  double cumulative_cost = 0.0;   // sum of costs of the played arms
  double best_fixed_cost = 0.0;   // min_i sum_t y_t^i
  std::size_t best_arm = 0;
  double regret = 0.0;            // cumulative_cost - best_fixed_cost
  double expected_cumulative_cost = 0.0;  // sum_t <pi_t, y_t>
  double bound = 0.0;
  std::vector<double> expected_loss;      // per-epoch <pi_t, y_t>
};

struct RegretSummary {
  std::size_t num_arms = 0;
  std::int64_t horizon = 0;
  double beta = 0.0;
  double bound = 0.0;
  double mean_regret = 0.0;
  double regret_std_error = 0.0;
  double mean_cumulative_cost = 0.0;
  double mean_expected_regret = 0.0;  // expected_cumulative_cost - best_fixed_cost
  std::vector<RegretReport> reports;
};

struct SimulationOptions {
  int threads = 1;
  bool keep_trace = true;
  double prob_floor = 1e-6;
};

/// Plays the selector against `env` once per repeat. Repeat r draws arms
/// from derive_seed(seed, bandit stream, r) and realizes stochastic costs
/// from derive_seed(seed, environment stream, r). The selector only sees the
/// played arm's cost.
RegretSummary run_bandit(const CostEnvironment& env, double beta, std::uint64_t seed, int repeats,
                         const SimulationOptions& options = {});

/// Columns K,horizon,repeat,beta,regret,bound; each summary ends with a row
/// whose repeat column reads "mean".
void write_regret_csv(std::ostream& out, const std::vector<RegretSummary>& summaries);

}  // namespace rmgd::regret
