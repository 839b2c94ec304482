#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>
#include <string_view>

#include <spdlog/spdlog.h>

#include "rmgd/bandit.hpp"
#include "rmgd/error.hpp"
#include "rmgd/regret.hpp"

namespace rmgd::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Strict JSON readers. Every accessor takes the JSON pointer of the value so
// errors can name exactly what was wrong.

std::string child(const std::string& path, std::string_view key) { return path + "/" + std::string(key); }
std::string child(const std::string& path, std::size_t index) { return path + "/" + std::to_string(index); }

void expect_object(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "/" : path, "expected an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(child(path, key), "unknown key '" + key + "'");
    }
  }
}

std::int64_t read_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  return j.get<std::int64_t>();
}

std::int64_t read_positive(const json& j, const std::string& path) {
  const auto v = read_int(j, path);
  if (v < 1) throw ConfigError(path, "must be at least 1");
  return v;
}

std::uint64_t read_seed(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0) throw ConfigError(path, "expected a non-negative integer");
  return static_cast<std::uint64_t>(j.get<std::int64_t>());
}

double read_real(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

bool read_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw ConfigError(path, "expected true or false");
  return j.get<bool>();
}

std::string read_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

template <typename F>
auto read_array(const json& j, const std::string& path, F&& element) {
  if (!j.is_array()) throw ConfigError(path, "expected an array");
  std::vector<decltype(element(j, path))> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(element(j[i], child(path, i)));
  return out;
}

// Runs a core validator and re-labels its failure with a config path.
template <typename F>
void checked(const std::string& path, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

std::optional<double> read_beta(const json& j, const std::string& path) {
  if (j.is_string()) {
    if (j.get<std::string>() != "auto") throw ConfigError(path, "expected a number in (0, 1) or \"auto\"");
    return std::nullopt;
  }
  const double beta = read_real(j, path);
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError(path, "beta must lie in (0, 1)");
  return beta;
}

std::optional<double> beta_from_flag(const std::string& text) {
  if (text == "auto") return std::nullopt;
  std::size_t used = 0;
  double beta = 0.0;
  try {
    beta = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size()) throw ConfigError("/beta", "--beta expects a real number or 'auto'");
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("/beta", "beta must lie in (0, 1)");
  return beta;
}

void parse_optimizer(const json& j, const std::string& path, optim::OptimizerConfig& out) {
  expect_object(j, path, {"kind", "momentum", "beta1", "beta2", "epsilon", "weight_decay"});
  if (j.contains("kind")) {
    checked(child(path, "kind"), [&] { out.kind = optim::kind_from_string(read_string(j["kind"], child(path, "kind"))); });
  }
  if (j.contains("momentum")) out.momentum = read_real(j["momentum"], child(path, "momentum"));
  if (j.contains("beta1")) out.beta1 = read_real(j["beta1"], child(path, "beta1"));
  if (j.contains("beta2")) out.beta2 = read_real(j["beta2"], child(path, "beta2"));
  if (j.contains("epsilon")) out.epsilon = read_real(j["epsilon"], child(path, "epsilon"));
  if (j.contains("weight_decay")) out.weight_decay = read_real(j["weight_decay"], child(path, "weight_decay"));
  checked(path, [&] { optim::validate(out); });
}

void parse_lr(const json& j, const std::string& path, optim::LearningRateSchedule& out) {
  expect_object(j, path, {"base", "scale_with_batch", "milestones"});
  if (j.contains("base")) out.base = read_real(j["base"], child(path, "base"));
  if (j.contains("scale_with_batch")) {
    const auto& s = j["scale_with_batch"];
    const auto spath = child(path, "scale_with_batch");
    if (s.is_null()) {
      out.scale_with_batch.reset();
    } else {
      expect_object(s, spath, {"reference_lr", "reference_batch"});
      if (!s.contains("reference_lr") || !s.contains("reference_batch")) {
        throw ConfigError(spath, "needs reference_lr and reference_batch");
      }
      out.scale_with_batch = optim::BatchScaling{
          .reference_lr = read_real(s["reference_lr"], child(spath, "reference_lr")),
          .reference_batch = read_positive(s["reference_batch"], child(spath, "reference_batch"))};
    }
  }
  if (j.contains("milestones")) {
    const auto mpath = child(path, "milestones");
    out.milestones = read_array(j["milestones"], mpath, [](const json& m, const std::string& p) {
      if (!m.is_array() || m.size() != 2) throw ConfigError(p, "expected [epoch, multiplier]");
      return optim::Milestone{.epoch = read_int(m[0], child(p, std::size_t{0})),
                              .multiplier = read_real(m[1], child(p, std::size_t{1}))};
    });
  }
  checked(path, [&] { optim::validate(out); });
}

struct ModelFields {
  std::optional<std::int64_t> input_dim;
  std::optional<std::int64_t> num_classes;
};

ModelFields parse_model(const json& j, const std::string& path, model::ModelSpec& out) {
  expect_object(j, path, {"kind", "input_dim", "hidden_dim", "num_classes", "l2"});
  ModelFields given;
  if (j.contains("kind")) {
    checked(child(path, "kind"), [&] { out.kind = model::kind_from_string(read_string(j["kind"], child(path, "kind"))); });
  }
  if (j.contains("hidden_dim")) out.hidden_dim = read_positive(j["hidden_dim"], child(path, "hidden_dim"));
  if (j.contains("input_dim")) given.input_dim = read_positive(j["input_dim"], child(path, "input_dim"));
  if (j.contains("num_classes")) given.num_classes = read_positive(j["num_classes"], child(path, "num_classes"));
  if (j.contains("l2")) {
    out.l2 = read_real(j["l2"], child(path, "l2"));
    if (!(out.l2 >= 0.0)) throw ConfigError(child(path, "l2"), "must be non-negative");
  }
  return given;
}

void parse_dataset(const json& j, const std::string& path, DatasetSource& out) {
  expect_object(j, path, {"blobs", "idx"});
  if (j.contains("blobs") == j.contains("idx")) throw ConfigError(path, "specify exactly one of blobs or idx");
  if (j.contains("blobs")) {
    const auto& b = j["blobs"];
    const auto bpath = child(path, "blobs");
    expect_object(b, bpath, {"classes", "per_class", "dim", "spread", "seed"});
    BlobsSource src;
    if (b.contains("classes")) src.classes = read_int(b["classes"], child(bpath, "classes"));
    if (src.classes < 2) throw ConfigError(child(bpath, "classes"), "must be at least 2");
    if (b.contains("per_class")) src.per_class = read_positive(b["per_class"], child(bpath, "per_class"));
    if (b.contains("dim")) src.dim = read_positive(b["dim"], child(bpath, "dim"));
    if (b.contains("spread")) src.spread = read_real(b["spread"], child(bpath, "spread"));
    if (!(src.spread >= 0.0)) throw ConfigError(child(bpath, "spread"), "must be non-negative");
    if (b.contains("seed")) src.seed = read_seed(b["seed"], child(bpath, "seed"));
    out.blobs = src;
    out.idx.reset();
  } else {
    const auto& x = j["idx"];
    const auto xpath = child(path, "idx");
    expect_object(x, xpath, {"train_images", "train_labels", "test_images", "test_labels", "validation", "limit"});
    IdxSource src;
    auto file = [&](const char* key) {
      if (!x.contains(key)) throw ConfigError(child(xpath, key), "missing required path");
      fs::path p = read_string(x[key], child(xpath, key));
      if (!fs::exists(p)) throw ConfigError(child(xpath, key), "file does not exist: " + p.string());
      return p;
    };
    src.paths = data::IdxPaths{.train_images = file("train_images"),
                               .train_labels = file("train_labels"),
                               .test_images = file("test_images"),
                               .test_labels = file("test_labels")};
    if (x.contains("validation")) {
      src.validation = static_cast<std::size_t>(read_positive(x["validation"], child(xpath, "validation")));
    }
    if (x.contains("limit")) src.limit = static_cast<std::size_t>(read_positive(x["limit"], child(xpath, "limit")));
    out.idx = src;
    out.blobs.reset();
  }
}

void parse_regret(const json& j, const std::string& path, RegretSettings& out) {
  expect_object(j, path, {"means", "horizons", "repeats", "beta"});
  if (j.contains("means")) {
    out.means = read_array(j["means"], child(path, "means"), [](const json& v, const std::string& p) {
      const double mu = read_real(v, p);
      if (!(mu >= 0.0 && mu <= 1.0)) throw ConfigError(p, "Bernoulli mean must lie in [0, 1]");
      return mu;
    });
    if (out.means.empty()) throw ConfigError(child(path, "means"), "needs at least one arm");
  }
  if (j.contains("horizons")) {
    out.horizons = read_array(j["horizons"], child(path, "horizons"), read_positive);
  }
  if (j.contains("repeats")) out.repeats = static_cast<int>(read_positive(j["repeats"], child(path, "repeats")));
  if (j.contains("beta")) out.beta = read_beta(j["beta"], child(path, "beta"));
}

// Reads only the dimension table of an IDX file.
std::vector<std::uint32_t> idx_dims(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::vector<std::uint8_t> head(4);
  in.read(reinterpret_cast<char*>(head.data()), 4);
  if (in.gcount() == 4 && head[3] > 0) {
    head.resize(4 + 4 * static_cast<std::size_t>(head[3]));
    in.read(reinterpret_cast<char*>(head.data() + 4), static_cast<std::streamsize>(head.size() - 4));
    head.resize(4 + static_cast<std::size_t>(in.gcount()));
  }
  // Only the header is read here, so parse_idx (which checks the payload
  // length) does not apply.
  if (head.size() < 4 || head[0] != 0 || head[1] != 0 || head[2] != 0x08 || head[3] == 0 ||
      head.size() < 4 + 4 * static_cast<std::size_t>(head[3])) {
    throw ParseError("invalid IDX header in " + path.string(), 0);
  }
  std::vector<std::uint32_t> dims;
  for (std::size_t i = 0; i < head[3]; ++i) {
    const std::size_t o = 4 + 4 * i;
    dims.push_back((std::uint32_t{head[o]} << 24) | (std::uint32_t{head[o + 1]} << 16) |
                   (std::uint32_t{head[o + 2]} << 8) | std::uint32_t{head[o + 3]});
  }
  return dims;
}

ExperimentConfig cli_defaults() {
  ExperimentConfig c;
  c.run.optimizer.kind = optim::OptimizerKind::kAdam;
  c.run.lr.base = 1e-3;
  c.run.model.kind = model::ModelKind::kMlp;
  c.run.model.hidden_dim = 32;
  c.dataset.blobs = BlobsSource{};
  return c;
}

void apply_overrides(ExperimentConfig& c, const Overrides& o, std::optional<double>& beta, bool& beta_set) {
  if (o.seed) c.run.seed = *o.seed;
  if (o.output) c.output_dir = *o.output;
  if (o.parallel) {
    if (*o.parallel < 1) throw ConfigError("/parallel", "--parallel must be at least 1");
    c.parallel = *o.parallel;
  }
  if (o.epochs) {
    if (*o.epochs < 1) throw ConfigError("/epochs", "--epochs must be at least 1");
    c.run.epochs = *o.epochs;
  }
  if (o.arms) checked("/arms", [&] { c.run.arms = bandit::ArmSet(*o.arms); });
  if (o.beta) {
    beta = beta_from_flag(*o.beta);
    beta_set = true;
  }
  if (o.batch_size) {
    if (*o.batch_size < 1) throw ConfigError("/batch_size", "--batch must be at least 1");
    c.batch_size = *o.batch_size;
  }
}

// Fills model dimensions from the dataset, checking any explicit values.
void resolve_model_shape(ExperimentConfig& c, const ModelFields& given) {
  std::int64_t input_dim = 0;
  std::int64_t num_classes = 0;
  if (c.dataset.blobs) {
    input_dim = c.dataset.blobs->dim;
    num_classes = c.dataset.blobs->classes;
  } else {
    const auto dims = idx_dims(c.dataset.idx->paths.train_images);
    if (dims.size() != 3) throw ConfigError("/dataset/idx/train_images", "expected a 3-d image tensor");
    input_dim = static_cast<std::int64_t>(dims[1]) * dims[2];
    num_classes = given.num_classes.value_or(10);
  }
  if (given.input_dim && *given.input_dim != input_dim) {
    throw ConfigError("/model/input_dim", "does not match the dataset width " + std::to_string(input_dim));
  }
  if (c.dataset.blobs && given.num_classes && *given.num_classes != num_classes) {
    throw ConfigError("/model/num_classes", "does not match the dataset class count " + std::to_string(num_classes));
  }
  c.run.model.input_dim = input_dim;
  c.run.model.num_classes = num_classes;
  checked("/model", [&] { model::validate(c.run.model); });
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void prepare_output(const ExperimentConfig& config) {
  fs::create_directories(config.output_dir);
  fs::remove(config.output_dir / "failure.json");
  write_text(config.output_dir / "config.resolved.json", resolved_json(config).dump(2) + "\n");
}

void write_failure(const fs::path& dir, const std::exception& e) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream out(dir / "failure.json");
  out << error_line(e) << "\n";
}

void write_run_outputs(const fs::path& dir, const trainer::RunResult& result,
                       std::optional<std::int64_t> batch_size) {
  write_text(dir / "checkpoint.json", trainer::to_json(result.checkpoint).dump() + "\n");
  std::ofstream summary(dir / "summary.csv");
  trainer::write_summary_csv(summary, {trainer::summary_row(result, batch_size)});
}

std::function<void(const trainer::EpochRecord&)> streaming_logger(std::ofstream& log, const ExperimentConfig& config,
                                                                  std::string label) {
  return [&log, &config, label = std::move(label)](const trainer::EpochRecord& r) {
    log << trainer::to_json(r, config.log_wall_time).dump() << '\n';
    log.flush();
    if (config.log_every > 0 && (r.epoch + 1) % config.log_every == 0) {
      spdlog::info("{} epoch {:>4}  b={:<5} val_loss={:.6f} val_acc={:.4f} cost={} iters={}", label, r.epoch, r.batch_size,
                   r.val_loss, r.val_accuracy, r.cost, r.cumulative_iterations);
    }
  };
}

template <typename F>
auto guarded(const fs::path& dir, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    write_failure(dir, e);
    throw;
  }
}

trainer::RunResult run_single(const ExperimentConfig& config, bool adaptive, const std::optional<fs::path>& resume) {
  return guarded(config.output_dir, [&] {
    const data::Dataset dataset = load_dataset(config);
    prepare_output(config);

    std::optional<trainer::Checkpoint> checkpoint;
    std::vector<trainer::EpochRecord> kept;
    const fs::path log_path = config.output_dir / "epochs.jsonl";
    if (resume) {
      std::ifstream in(*resume);
      if (!in) throw std::runtime_error("cannot open checkpoint " + resume->string());
      checkpoint = trainer::checkpoint_from_json(json::parse(in));
      if (std::ifstream old{log_path}) {
        for (auto& r : trainer::read_jsonl(old)) {
          if (r.epoch < checkpoint->epoch) kept.push_back(std::move(r));
        }
      }
    }

    std::ofstream log(log_path, std::ios::trunc);
    trainer::write_jsonl(log, kept, config.log_wall_time);
    trainer::RunOptions options;
    options.resume = checkpoint ? &*checkpoint : nullptr;

    trainer::RunResult result;
    std::optional<std::int64_t> batch;
    if (adaptive) {
      options.on_record = streaming_logger(log, config, "rmgd");
      result = trainer::run_rmgd(config.run, dataset, options);
    } else {
      batch = config.batch_size ? *config.batch_size
                                : (config.run.arms.size() == 1 ? config.run.arms[0] : std::int64_t{0});
      if (*batch == 0) throw ConfigError("/batch_size", "mgd needs batch_size (or --batch) when several arms are set");
      options.on_record = streaming_logger(log, config, "mgd(" + std::to_string(*batch) + ")");
      result = trainer::run_mgd(config.run, dataset, *batch, options);
    }
    write_run_outputs(config.output_dir, result, batch);
    spdlog::info("{} finished: {} iterations, final val_loss {:.6f}, test accuracy {:.4f}", result.algorithm,
                 result.total_iterations, result.final_val_loss, result.test_accuracy.value_or(0.0));
    return result;
  });
}

}  // namespace

ExperimentConfig parse_config(const json& doc, const Overrides& overrides) {
  ExperimentConfig c = cli_defaults();
  expect_object(doc, "",
                {"arms", "beta", "epochs", "seed", "optimizer", "lr", "model", "dataset", "output_dir", "log_every",
                 "parallel", "log_wall_time", "prob_floor", "reset_optimizer_on_switch", "batch_size", "regret"});

  if (doc.contains("arms")) {
    const auto sizes = read_array(doc["arms"], "/arms", read_int);
    checked("/arms", [&] { c.run.arms = bandit::ArmSet(sizes); });
  }
  std::optional<double> beta;
  if (doc.contains("beta")) beta = read_beta(doc["beta"], "/beta");
  if (doc.contains("epochs")) c.run.epochs = read_positive(doc["epochs"], "/epochs");
  if (doc.contains("seed")) c.run.seed = read_seed(doc["seed"], "/seed");
  if (doc.contains("optimizer")) parse_optimizer(doc["optimizer"], "/optimizer", c.run.optimizer);
  if (doc.contains("lr")) parse_lr(doc["lr"], "/lr", c.run.lr);
  ModelFields given;
  if (doc.contains("model")) given = parse_model(doc["model"], "/model", c.run.model);
  if (doc.contains("dataset")) parse_dataset(doc["dataset"], "/dataset", c.dataset);
  if (doc.contains("output_dir")) c.output_dir = read_string(doc["output_dir"], "/output_dir");
  if (doc.contains("log_every")) c.log_every = read_positive(doc["log_every"], "/log_every");
  if (doc.contains("parallel")) c.parallel = static_cast<int>(read_positive(doc["parallel"], "/parallel"));
  if (doc.contains("log_wall_time")) c.log_wall_time = read_bool(doc["log_wall_time"], "/log_wall_time");
  if (doc.contains("prob_floor")) c.run.prob_floor = read_real(doc["prob_floor"], "/prob_floor");
  if (doc.contains("reset_optimizer_on_switch")) {
    c.run.reset_optimizer_on_switch = read_bool(doc["reset_optimizer_on_switch"], "/reset_optimizer_on_switch");
  }
  if (doc.contains("batch_size")) c.batch_size = read_positive(doc["batch_size"], "/batch_size");
  if (doc.contains("regret")) parse_regret(doc["regret"], "/regret", c.regret);

  bool beta_flag = false;
  std::optional<double> flag_beta;
  apply_overrides(c, overrides, flag_beta, beta_flag);
  if (beta_flag) beta = flag_beta;

  if (!(c.run.prob_floor >= 0.0) || c.run.prob_floor * static_cast<double>(c.run.arms.size()) > 1.0) {
    throw ConfigError("/prob_floor", "must lie in [0, 1/K]");
  }
  if (c.dataset.blobs && !c.dataset.blobs->seed) c.dataset.blobs->seed = c.run.seed;
  resolve_model_shape(c, given);

  c.run.beta = beta;
  checked("/beta", [&] { c.run.beta = trainer::resolve_beta(c.run); });
  checked("/", [&] { trainer::validate(c.run); });
  return c;
}

ExperimentConfig parse_config_file(const fs::path& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("/", "cannot read config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("/", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc, overrides);
}

ExperimentConfig default_config(const Overrides& overrides) { return parse_config(json::object(), overrides); }

json resolved_json(const ExperimentConfig& c) {
  json j = trainer::to_json(c.run);
  json dataset;
  if (c.dataset.blobs) {
    const auto& b = *c.dataset.blobs;
    dataset["blobs"] = {{"classes", b.classes},
                        {"per_class", b.per_class},
                        {"dim", b.dim},
                        {"spread", b.spread},
                        {"seed", b.seed.value_or(c.run.seed)}};
  } else {
    const auto& x = *c.dataset.idx;
    dataset["idx"] = {{"train_images", x.paths.train_images.string()},
                      {"train_labels", x.paths.train_labels.string()},
                      {"test_images", x.paths.test_images.string()},
                      {"test_labels", x.paths.test_labels.string()},
                      {"validation", x.validation}};
    if (x.limit) dataset["idx"]["limit"] = *x.limit;
  }
  j["dataset"] = dataset;
  j["output_dir"] = c.output_dir.string();
  j["log_every"] = c.log_every;
  j["parallel"] = c.parallel;
  j["log_wall_time"] = c.log_wall_time;
  if (c.batch_size) j["batch_size"] = *c.batch_size;
  j["regret"] = {{"means", c.regret.means},
                 {"horizons", c.regret.horizons},
                 {"repeats", c.regret.repeats},
                 {"beta", c.regret.beta ? json(*c.regret.beta) : json("auto")}};
  return j;
}

data::Dataset load_dataset(const ExperimentConfig& config) {
  if (config.dataset.blobs) {
    const auto& b = *config.dataset.blobs;
    return data::make_blobs(b.classes, b.per_class, b.dim, b.spread, b.seed.value_or(config.run.seed));
  }
  const auto& x = *config.dataset.idx;
  data::Dataset ds = data::load_idx_dataset(x.paths, x.validation, x.limit);
  if (ds.num_classes > config.run.model.num_classes) {
    throw ConfigError("/model/num_classes", "dataset has labels up to " + std::to_string(ds.num_classes - 1));
  }
  ds.num_classes = config.run.model.num_classes;
  return ds;
}

trainer::RunResult run_rmgd_command(const ExperimentConfig& config, const std::optional<fs::path>& resume) {
  return run_single(config, true, resume);
}

trainer::RunResult run_mgd_command(const ExperimentConfig& config) { return run_single(config, false, std::nullopt); }

trainer::GridSummary run_grid_command(const ExperimentConfig& config, bool count_only) {
  return guarded(config.output_dir, [&] {
    const data::Dataset dataset = load_dataset(config);
    prepare_output(config);

    trainer::GridOptions options;
    options.parallel = config.parallel;
    options.count_only = count_only;
    options.on_run = [&](std::size_t arm, const trainer::RunResult& result) {
      const fs::path dir = config.output_dir / ("mgd_b" + std::to_string(config.run.arms[arm]));
      fs::create_directories(dir);
      std::ofstream log(dir / "epochs.jsonl");
      trainer::write_jsonl(log, result.records, config.log_wall_time);
      write_run_outputs(dir, result, config.run.arms[arm]);
      spdlog::info("mgd({}) finished: {} iterations, test accuracy {:.4f}", config.run.arms[arm],
                   result.total_iterations, result.test_accuracy.value_or(0.0));
    };
    trainer::GridSummary summary = trainer::run_grid_search(config.run, dataset, options);

    std::vector<trainer::GridRow> rows = summary.rows;
    rows.push_back(summary.total);
    std::ofstream csv(config.output_dir / "summary.csv");
    trainer::write_summary_csv(csv, rows);
    for (const auto& row : summary.rows) {
      if (!row.error.empty()) spdlog::error("mgd({}) failed: {}", row.batch_size.value_or(0), row.error);
    }
    if (summary.best) spdlog::info("best batch size: {}", config.run.arms[*summary.best]);
    spdlog::info("grid total: {} iterations", summary.total.iterations);
    return summary;
  });
}

std::vector<regret::RegretSummary> run_regret_command(const ExperimentConfig& config) {
  return guarded(config.output_dir, [&] {
    prepare_output(config);
    const auto k = static_cast<std::int64_t>(config.regret.means.size());
    std::vector<regret::RegretSummary> out;
    for (const std::int64_t horizon : config.regret.horizons) {
      const auto env = regret::CostEnvironment::stochastic(config.regret.means, horizon);
      double beta = 0.5;
      if (config.regret.beta) {
        beta = *config.regret.beta;
      } else if (k >= 2) {
        beta = bandit::default_beta(k, horizon);
      }
      regret::SimulationOptions options;
      options.threads = config.parallel;
      options.keep_trace = false;
      options.prob_floor = config.run.prob_floor;
      out.push_back(regret::run_bandit(env, beta, config.run.seed, config.regret.repeats, options));
      const auto& s = out.back();
      spdlog::info("K={} horizon={} beta={:.5f}: mean regret {:.2f} (+/- {:.2f}), bound {:.2f}", k, horizon, beta,
                   s.mean_regret, s.regret_std_error, s.bound);
    }
    std::ofstream csv(config.output_dir / "regret.csv");
    regret::write_regret_csv(csv, out);
    return out;
  });
}

void emit_trace_command(const fs::path& log, const std::optional<fs::path>& output) {
  std::ifstream in(log);
  if (!in) throw std::runtime_error("cannot open epoch log " + log.string());
  const auto records = trainer::read_jsonl(in);
  if (output) {
    fs::create_directories(*output);
    std::ofstream out(*output / "trace.csv");
    trainer::write_trace_csv(out, records);
  } else {
    trainer::write_trace_csv(std::cout, records);
  }
}

void export_data_command(const ExperimentConfig& config) {
  guarded(config.output_dir, [&] {
    const data::Dataset dataset = load_dataset(config);
    prepare_output(config);
    for (const auto& [name, split] : {std::pair<const char*, const Batch*>{"train.csv", &dataset.train},
                                      {"validation.csv", &dataset.validation},
                                      {"test.csv", &dataset.test}}) {
      std::ofstream out(config.output_dir / name);
      data::write_csv(out, *split);
    }
    return 0;
  });
}

std::string error_line(const std::exception& e) {
  json j;
  if (const auto* c = dynamic_cast<const ConfigError*>(&e)) {
    j = {{"error", "config"}, {"path", c->path()}, {"message", e.what()}};
  } else if (dynamic_cast<const ParseError*>(&e)) {
    j = {{"error", "parse"}, {"message", e.what()}};
  } else if (const auto* n = dynamic_cast<const NumericError*>(&e)) {
    j = {{"error", "numeric"}, {"message", e.what()}, {"index", n->index()}};
  } else if (dynamic_cast<const std::invalid_argument*>(&e)) {
    j = {{"error", "invalid_argument"}, {"message", e.what()}};
  } else {
    j = {{"error", "runtime"}, {"message", e.what()}};
  }
  return j.dump();
}

}  // namespace rmgd::cli
