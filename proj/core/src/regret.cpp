#include "rmgd/regret.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>

#include "parallel.hpp"
#include "rmgd/bandit.hpp"
#include "rmgd/rng.hpp"

namespace rmgd::regret {

CostEnvironment CostEnvironment::stochastic(std::vector<double> means, std::int64_t horizon) {
  CostEnvironment env;
  env.kind = EnvironmentKind::kStochastic;
  env.means = std::move(means);
  env.horizon = horizon;
  validate(env);
  return env;
}

CostEnvironment CostEnvironment::adversarial(CostMatrix matrix) {
  CostEnvironment env;
  env.kind = EnvironmentKind::kAdversarial;
  env.horizon = static_cast<std::int64_t>(matrix.horizon);
  env.matrix = std::move(matrix);
  validate(env);
  return env;
}

std::size_t CostEnvironment::num_arms() const noexcept {
  return kind == EnvironmentKind::kStochastic ? means.size() : matrix.num_arms;
}

void validate(const CostEnvironment& env) {
  if (env.horizon < 1) throw std::invalid_argument("environment horizon must be at least 1");
  if (env.kind == EnvironmentKind::kStochastic) {
    if (env.means.empty()) throw std::invalid_argument("stochastic environment needs at least one arm");
    for (double mu : env.means) {
      if (!(mu >= 0.0 && mu <= 1.0)) throw std::invalid_argument("Bernoulli means must lie in [0, 1]");
    }
  } else {
    const auto& m = env.matrix;
    if (m.num_arms == 0 || m.data.size() != m.horizon * m.num_arms ||
        static_cast<std::int64_t>(m.horizon) != env.horizon) {
      throw std::invalid_argument("adversarial cost matrix has inconsistent shape");
    }
    for (auto y : m.data) {
      if (y > 1) throw std::invalid_argument("adversarial costs must be 0 or 1");
    }
  }
}

CostMatrix realize(const CostEnvironment& env, std::uint64_t seed) {
  if (env.kind == EnvironmentKind::kAdversarial) return env.matrix;
  CostMatrix m{.horizon = static_cast<std::size_t>(env.horizon), .num_arms = env.means.size(), .data = {}};
  m.data.resize(m.horizon * m.num_arms);
  CounterRng rng(seed);
  for (std::size_t t = 0; t < m.horizon; ++t) {
    for (std::size_t i = 0; i < m.num_arms; ++i) {
      m.data[t * m.num_arms + i] = rng.uniform() < env.means[i] ? 1 : 0;
    }
  }
  return m;
}

double expected_selecting_loss(std::span<const double> probs, std::span<const std::uint8_t> costs) {
  if (probs.size() != costs.size()) throw std::invalid_argument("probability and cost vectors differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) total += probs[i] * static_cast<double>(costs[i]);
  return total;
}

std::pair<std::size_t, std::int64_t> best_fixed_arm(const CostMatrix& costs) {
  if (costs.num_arms == 0) throw std::invalid_argument("cost matrix has no arms");
  std::vector<std::int64_t> sums(costs.num_arms, 0);
  for (std::size_t t = 0; t < costs.horizon; ++t) {
    for (std::size_t i = 0; i < costs.num_arms; ++i) sums[i] += costs(t, i);
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < sums.size(); ++i) {
    if (sums[i] < sums[best]) best = i;
  }
  return {best, sums[best]};
}

std::pair<std::size_t, std::int64_t> best_fixed_arm(const CostEnvironment& env) {
  if (env.kind != EnvironmentKind::kAdversarial) {
    throw std::invalid_argument("best fixed arm of a stochastic environment needs a realization");
  }
  return best_fixed_arm(env.matrix);
}

RegretSummary run_bandit(const CostEnvironment& env, double beta, std::uint64_t seed, int repeats,
                         const SimulationOptions& options) {
  validate(env);
  if (repeats < 1) throw std::invalid_argument("repeats must be at least 1");
  const std::size_t k = env.num_arms();
  std::vector<std::int64_t> sizes(k);
  for (std::size_t i = 0; i < k; ++i) sizes[i] = static_cast<std::int64_t>(i + 1);
  const bandit::ArmSet arms(std::move(sizes));

  RegretSummary summary;
  summary.num_arms = k;
  summary.horizon = env.horizon;
  summary.beta = beta;
  summary.bound = bandit::regret_bound(static_cast<std::int64_t>(k), env.horizon);
  summary.reports.resize(static_cast<std::size_t>(repeats));

  detail::parallel_for(summary.reports.size(), options.threads, [&](std::size_t r) {
    const CostMatrix costs = realize(env, derive_seed(seed, streams::kEnvironment, r));
    bandit::BanditState state =
        bandit::init_uniform(arms, beta, derive_seed(seed, streams::kBandit, r), options.prob_floor);

    RegretReport report;
    report.bound = summary.bound;
    if (options.keep_trace) report.expected_loss.reserve(costs.horizon);
    for (std::size_t t = 0; t < costs.horizon; ++t) {
      const double f = expected_selecting_loss(state.probs, costs.row(t));
      report.expected_cumulative_cost += f;
      if (options.keep_trace) report.expected_loss.push_back(f);

      const std::size_t played = bandit::sample_arm(state);
      const bandit::Cost cost{costs(t, played), played};
      report.cumulative_cost += cost.value;
      for (double z : bandit::estimated_gradient(state, cost)) {
        if (beta * z < -1.0) throw std::logic_error("step-size condition beta * z >= -1 violated");
      }
      state = bandit::update(std::move(state), cost);
    }
    const auto [best_arm, best_cost] = best_fixed_arm(costs);
    report.best_arm = best_arm;
    report.best_fixed_cost = static_cast<double>(best_cost);
    report.regret = report.cumulative_cost - report.best_fixed_cost;
    summary.reports[r] = std::move(report);
  });

  double sum = 0.0;
  double sum_sq = 0.0;
  for (const auto& rep : summary.reports) {
    sum += rep.regret;
    sum_sq += rep.regret * rep.regret;
    summary.mean_cumulative_cost += rep.cumulative_cost;
    summary.mean_expected_regret += rep.expected_cumulative_cost - rep.best_fixed_cost;
  }
  const auto n = static_cast<double>(summary.reports.size());
  summary.mean_regret = sum / n;
  summary.mean_cumulative_cost /= n;
  summary.mean_expected_regret /= n;
  if (summary.reports.size() > 1) {
    const double var = (sum_sq - n * summary.mean_regret * summary.mean_regret) / (n - 1.0);
    summary.regret_std_error = std::sqrt(std::max(var, 0.0) / n);
  }
  return summary;
}

void write_regret_csv(std::ostream& out, const std::vector<RegretSummary>& summaries) {
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return std::string(buf);
  };
  out << "K,horizon,repeat,beta,regret,bound\n";
  for (const auto& s : summaries) {
    for (std::size_t r = 0; r < s.reports.size(); ++r) {
      out << s.num_arms << ',' << s.horizon << ',' << r << ',' << num(s.beta) << ',' << num(s.reports[r].regret)
          << ',' << num(s.bound) << '\n';
    }
    out << s.num_arms << ',' << s.horizon << ",mean," << num(s.beta) << ',' << num(s.mean_regret) << ','
        << num(s.bound) << '\n';
  }
}

}  // namespace rmgd::regret
