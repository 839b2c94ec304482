// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. Every check runs at its contracted tolerance.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rmgd/bandit.hpp"
#include "rmgd/data.hpp"
#include "rmgd/model.hpp"
#include "rmgd/regret.hpp"
#include "rmgd/rng.hpp"
#include "rmgd/trainer.hpp"

using namespace rmgd;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("violated: ") + what;
    }
  }
  void note(const std::string& text) { detail += (detail.empty() ? "" : "; ") + text; }
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// --- iteration arithmetic --------------------------------------------------

Outcome iteration_arithmetic() {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  data::Dataset ds;
  ds.num_classes = 2;
  ds.train.features = Matrix(55000, 1);
  ds.train.labels.assign(55000, 0);
  ds.validation.features = Matrix(1, 1);
  ds.validation.labels = {1};
  trainer::RunConfig cfg;
  cfg.arms = bandit::ArmSet({16, 32, 64, 128, 256, 512});
  cfg.epochs = 100;
  trainer::GridOptions opts;
  opts.count_only = true;
  const auto grid = trainer::run_grid_search(cfg, ds, opts);
  const double elapsed = seconds_since(start);

  const std::vector<std::int64_t> expected{343800, 171900, 86000, 43000, 21500, 10800};
  for (std::size_t i = 0; i < expected.size(); ++i) {
    out.require(grid.rows[i].iterations == expected[i],
                fmt("b=%lld gives %lld, expected %lld", static_cast<long long>(cfg.arms[i]),
                    static_cast<long long>(grid.rows[i].iterations), static_cast<long long>(expected[i])));
  }
  out.require(grid.total.iterations == 677000, fmt("total %lld != 677000", static_cast<long long>(grid.total.iterations)));
  out.require(elapsed < 1.0, fmt("took %.3f s", elapsed));
  out.note(fmt("total %lld in %.4f s", static_cast<long long>(grid.total.iterations), elapsed));
  return out;
}

// --- beta recipe -------------------------------------------------------------

Outcome beta_recipe() {
  Outcome out;
  const double b6 = bandit::default_beta(6, 100);
  const double b5 = bandit::default_beta(5, 350);
  const auto round3 = [](double x) { return std::round(x * 1000.0) / 1000.0; };
  out.require(round3(b6) == 0.055, fmt("default_beta(6,100)=%.6f", b6));
  out.require(round3(b5) == 0.030, fmt("default_beta(5,350)=%.6f", b5));
  out.note(fmt("default_beta(6,100)=%.5f, default_beta(5,350)=%.5f", b6, b5));
  return out;
}

// --- regret bound --------------------------------------------------------------

Outcome regret_bound() {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  const std::vector<double> means{0.2, 0.6, 0.6, 0.6, 0.6, 0.6};
  regret::SimulationOptions opts;
  opts.keep_trace = false;
  auto run = [&](std::int64_t horizon) {
    const auto env = regret::CostEnvironment::stochastic(means, horizon);
    return regret::run_bandit(env, bandit::default_beta(6, horizon), 20240601, 100, opts);
  };
  const auto r1k = run(1000);
  const auto r4k = run(4000);
  const auto r10k = run(10000);
  const double elapsed = seconds_since(start);
  const double bound = 2.0 * std::sqrt(6.0 * std::log(6.0) * 10000.0);
  const double ratio = r4k.mean_regret / r1k.mean_regret;
  out.require(r10k.mean_regret <= bound, fmt("mean regret %.1f > bound %.1f", r10k.mean_regret, bound));
  out.require(ratio < 2.05, fmt("regret(4000)/regret(1000) = %.3f", ratio));
  out.require(elapsed < 10.0, fmt("took %.2f s", elapsed));
  out.note(fmt("mean regret %.1f (se %.1f) <= %.1f at T=10000; regret T=1000 %.1f, T=4000 %.1f, ratio %.3f; %.2f s",
               r10k.mean_regret, r10k.regret_std_error, bound, r1k.mean_regret, r4k.mean_regret, ratio, elapsed));
  return out;
}

// --- estimator unbiasedness -------------------------------------------------

Outcome estimator_unbiasedness() {
  Outcome out;
  constexpr int kPairs = 20;
  constexpr int kDraws = 100000;
  constexpr std::size_t k = 6;
  CounterRng rng(7);
  int checked = 0;
  double worst = 0.0;
  for (int pair = 0; pair < kPairs; ++pair) {
    auto state = bandit::init_uniform(bandit::ArmSet({1, 2, 3, 4, 5, 6}), 0.1, derive_seed(7, streams::kBandit, pair), 0.0);
    double total = 0.0;
    for (auto& p : state.probs) total += (p = 0.05 + rng.uniform());
    for (auto& p : state.probs) p /= total;
    std::vector<int> y(k);
    for (auto& v : y) v = static_cast<int>(rng.below(2));

    std::vector<double> mean(k, 0.0);
    for (int n = 0; n < kDraws; ++n) {
      const std::size_t arm = bandit::sample_arm(state);
      const auto z = bandit::estimated_gradient(state, bandit::Cost{y[arm], arm});
      for (std::size_t i = 0; i < k; ++i) mean[i] += z[i];
    }
    for (std::size_t i = 0; i < k; ++i) {
      mean[i] /= kDraws;
      // z_i = (y_i / pi_i) * Bernoulli(pi_i): binomial standard error of the mean.
      const double pi = state.probs[i];
      const double se = y[i] / pi * std::sqrt(pi * (1.0 - pi) / kDraws);
      const double dev = std::abs(mean[i] - y[i]);
      if (se > 0) worst = std::max(worst, dev / se);
      out.require(dev <= 3.0 * se, fmt("pair %d arm %zu: |%.5f - %d| > 3 * %.5f", pair, i, mean[i], y[i], se));
      ++checked;
    }
  }
  out.note(fmt("%d components, worst deviation %.2f standard errors", checked, worst));
  return out;
}

// --- gradient correctness -----------------------------------------------------

Outcome gradient_correctness() {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  CounterRng rng(31337);
  double worst[2] = {0.0, 0.0};
  constexpr int kInstances = 25;
  for (auto kind : {model::ModelKind::kLogistic, model::ModelKind::kMlp}) {
    for (int instance = 0; instance < kInstances; ++instance) {
      model::ModelSpec spec;
      spec.kind = kind;
      spec.input_dim = 2 + static_cast<std::int64_t>(rng.below(6));
      spec.num_classes = 2 + static_cast<std::int64_t>(rng.below(4));
      spec.hidden_dim = kind == model::ModelKind::kMlp ? 2 + static_cast<std::int64_t>(rng.below(6)) : 0;
      spec.l2 = instance % 2 ? 0.01 : 0.0;
      auto params = model::zero_params(spec);
      for (double& w : params.values) w = 0.5 * rng.normal();
      Batch batch;
      const std::size_t n = 1 + rng.below(10);
      batch.features = Matrix(n, static_cast<std::size_t>(spec.input_dim));
      for (double& x : batch.features.data) x = rng.normal();
      for (std::size_t i = 0; i < n; ++i) batch.labels.push_back(static_cast<int>(rng.below(spec.num_classes)));

      const auto [value, grad] = model::loss_and_grad(spec, params, batch);
      constexpr double h = 1e-5;
      for (std::size_t i = 0; i < params.size(); ++i) {
        auto plus = params;
        auto minus = params;
        plus.values[i] += h;
        minus.values[i] -= h;
        const double numeric = (model::loss(spec, plus, batch) - model::loss(spec, minus, batch)) / (2 * h);
        const double scale = std::max({std::abs(numeric), std::abs(grad[i]), 1e-8});
        const double rel = std::abs(numeric - grad[i]) / scale;
        auto& w = worst[kind == model::ModelKind::kMlp];
        w = std::max(w, rel);
      }
    }
  }
  const double elapsed = seconds_since(start);
  out.require(worst[0] < 1e-5, fmt("logistic max relative error %.3g", worst[0]));
  out.require(worst[1] < 1e-5, fmt("mlp max relative error %.3g", worst[1]));
  out.require(elapsed < 5.0, fmt("took %.2f s", elapsed));
  out.note(fmt("%d instances each; max relative error logistic %.2e, mlp %.2e; %.3f s", kInstances, worst[0], worst[1],
               elapsed));
  return out;
}

// --- exploration -> exploitation ------------------------------------------------

// Rigged environment: arm 0 never costs anything, every other arm always
// costs 1. Two arms, horizon 10000, step size default_beta(2, 10000).
Outcome exploitation() {
  Outcome out;
  constexpr std::size_t kArms = 2;
  constexpr std::int64_t kHorizon = 10000;
  constexpr std::size_t kWinner = 0;
  const double beta = bandit::default_beta(kArms, kHorizon);
  const double deadline = 3.0 / beta;
  std::int64_t worst_hit = 0;
  double worst_freq = 1.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto state = bandit::init_uniform(bandit::ArmSet({64, 128}), beta, derive_seed(seed, streams::kBandit));
    std::int64_t hit = -1;
    std::int64_t late_picks = 0;
    for (std::int64_t t = 0; t < kHorizon; ++t) {
      if (hit < 0 && state.probs[kWinner] > 0.9) hit = t;
      const std::size_t arm = bandit::sample_arm(state);
      if (t >= kHorizon - kHorizon / 4) late_picks += arm == kWinner;
      state = bandit::update(std::move(state), bandit::Cost{arm == kWinner ? 0 : 1, arm});
    }
    const double freq = static_cast<double>(late_picks) / static_cast<double>(kHorizon / 4);
    out.require(hit >= 0 && static_cast<double>(hit) < deadline,
                fmt("seed %llu: pi_win > 0.9 at epoch %lld, deadline %.0f", static_cast<unsigned long long>(seed),
                    static_cast<long long>(hit), deadline));
    out.require(freq > 0.8, fmt("seed %llu: last-quarter frequency %.3f", static_cast<unsigned long long>(seed), freq));
    worst_hit = std::max(worst_hit, hit < 0 ? kHorizon : hit);
    worst_freq = std::min(worst_freq, freq);
  }
  out.note(fmt("K=2, T=10000, 20 seeds: latest crossing epoch %lld < 3/beta = %.0f; min last-quarter frequency %.4f",
               static_cast<long long>(worst_hit), deadline, worst_freq));
  return out;
}

// --- desk-scale end-to-end -----------------------------------------------------

trainer::RunConfig desk_config(std::uint64_t seed) {
  trainer::RunConfig cfg;
  cfg.arms = bandit::ArmSet({8, 16, 32, 64, 128});
  cfg.epochs = 50;
  cfg.model = model::ModelSpec{model::ModelKind::kMlp, 20, 32, 5, 0.0};
  cfg.optimizer.kind = optim::OptimizerKind::kAdam;
  cfg.lr.base = 1e-3;
  cfg.seed = seed;
  return cfg;
}

Outcome desk_scale() {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  constexpr int kSeeds = 10;
  std::vector<double> mgd_acc(5, 0.0);
  double rmgd_acc = 0.0;
  std::int64_t rmgd_iters = 0;
  std::int64_t grid_iters = 0;
  bool identical = true;
  for (int s = 0; s < kSeeds; ++s) {
    const auto seed = static_cast<std::uint64_t>(s);
    const auto ds = data::make_blobs(5, 400, 20, 1.5, seed);
    const auto cfg = desk_config(seed);
    const auto rmgd = trainer::run_rmgd(cfg, ds);
    const auto grid = trainer::run_grid_search(cfg, ds);
    rmgd_acc += rmgd.final_val_accuracy / kSeeds;
    rmgd_iters += rmgd.total_iterations;
    grid_iters += grid.total.iterations;
    for (std::size_t i = 0; i < 5; ++i) mgd_acc[i] += grid.runs[i].final_val_accuracy / kSeeds;

    // (c): RMGD restricted to one arm against the matching MGD run.
    const std::int64_t b = cfg.arms[static_cast<std::size_t>(s) % 5];
    auto single = cfg;
    single.arms = bandit::ArmSet({b});
    const auto one = trainer::run_rmgd(single, ds);
    const auto& ref = grid.runs[static_cast<std::size_t>(s) % 5];
    bool same = one.records.size() == ref.records.size() && one.checkpoint.params == ref.checkpoint.params;
    for (std::size_t t = 0; same && t < one.records.size(); ++t) same = one.records[t].same_trajectory(ref.records[t]);
    if (!same) out.require(false, fmt("seed %d: single-arm RMGD(b=%lld) differs from MGD", s, static_cast<long long>(b)));
    identical = identical && same;
  }
  const double elapsed = seconds_since(start);
  const auto best = static_cast<std::size_t>(std::max_element(mgd_acc.begin(), mgd_acc.end()) - mgd_acc.begin());
  const double share = static_cast<double>(rmgd_iters) / static_cast<double>(grid_iters);
  out.require(rmgd_acc >= mgd_acc[best] - 0.005,
              fmt("(a) RMGD accuracy %.4f < best MGD %.4f - 0.005", rmgd_acc, mgd_acc[best]));
  out.require(share < 0.30, fmt("(b) RMGD iterations are %.1f%% of grid", 100 * share));
  out.require(elapsed < 300.0, fmt("took %.1f s", elapsed));

  std::string per_arm;
  for (std::size_t i = 0; i < 5; ++i) per_arm += fmt("%s%lld:%.4f", i ? " " : "", static_cast<long long>(desk_config(0).arms[i]), mgd_acc[i]);
  out.note(fmt("(a) RMGD %.4f vs best MGD(b=%lld) %.4f [%s]", rmgd_acc,
               static_cast<long long>(desk_config(0).arms[best]), mgd_acc[best], per_arm.c_str()));
  out.note(fmt("(b) %lld / %lld iterations = %.1f%%", static_cast<long long>(rmgd_iters),
               static_cast<long long>(grid_iters), 100 * share));
  out.note(fmt("(c) single-arm identity %s; %.1f s", identical ? "holds" : "broken", elapsed));
  return out;
}

// --- determinism & replay -------------------------------------------------------

Outcome determinism_and_replay() {
  Outcome out;
  const auto ds = data::make_blobs(5, 100, 20, 1.5, 42);
  auto cfg = desk_config(42);
  cfg.epochs = 30;
  const auto a = trainer::run_rmgd(cfg, ds);
  const auto b = trainer::run_rmgd(cfg, ds);
  std::ostringstream ja, jb;
  trainer::write_jsonl(ja, a.records);
  trainer::write_jsonl(jb, b.records);
  out.require(ja.str() == jb.str(), "same-seed JSONL logs differ");

  std::size_t resumed_points = 0;
  for (std::int64_t cut : {1, 13, 29}) {
    trainer::RunOptions head_opts;
    head_opts.stop_after = cut;
    const auto head = trainer::run_rmgd(cfg, ds, head_opts);
    // Through the serialized form, exactly as a resumed process would see it.
    const auto cp = trainer::checkpoint_from_json(nlohmann::json::parse(trainer::to_json(head.checkpoint).dump()));
    trainer::RunOptions tail_opts;
    tail_opts.resume = &cp;
    const auto tail = trainer::run_rmgd(cfg, ds, tail_opts);
    std::vector<trainer::EpochRecord> joined = head.records;
    joined.insert(joined.end(), tail.records.begin(), tail.records.end());
    std::ostringstream jr;
    trainer::write_jsonl(jr, joined);
    out.require(jr.str() == ja.str(), fmt("resume at epoch %lld does not reproduce the log", static_cast<long long>(cut)));
    out.require(tail.checkpoint.params == a.checkpoint.params && tail.checkpoint.bandit == a.checkpoint.bandit,
                fmt("resume at epoch %lld ends in a different state", static_cast<long long>(cut)));
    ++resumed_points;
  }
  out.note(fmt("%zu-byte log identical across reruns; resume at %zu cut points byte-identical", ja.str().size(),
               resumed_points));
  return out;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"iteration-arithmetic", iteration_arithmetic},
      {"beta-recipe", beta_recipe},
      {"regret-bound", regret_bound},
      {"estimator-unbiasedness", estimator_unbiasedness},
      {"gradient-correctness", gradient_correctness},
      {"exploration-exploitation", exploitation},
      {"desk-scale-end-to-end", desk_scale},
      {"determinism-replay", determinism_and_replay},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome result;
    try {
      result = run();
    } catch (const std::exception& e) {
      result.pass = false;
      result.detail = std::string("exception: ") + e.what();
    }
    failed += !result.pass;
    std::printf("%s  %-26s %s\n", result.pass ? "PASS" : "FAIL", name, result.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
  return failed == 0 ? 0 : 1;
}
