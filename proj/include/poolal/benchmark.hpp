#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "poolal/dataset.hpp"
#include "poolal/pipeline.hpp"
#include "poolal/strategy.hpp"

namespace poolal {

using nlohmann::json;

// ---------------------------------------------------------------------------
// IPAUC

struct CurvePoint {
  double k = 0.0;
  double value = 0.0;
};

/// Trapezoidal area under a performance curve divided by its iteration span,
/// so a constant curve at c scores c.
inline double ipauc(const std::vector<CurvePoint>& curve) {
  require(curve.size() >= 2, ErrorCode::InvalidArgument, "IPAUC needs at least two curve points");
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const double dk = curve[i].k - curve[i - 1].k;
    require(dk > 0.0, ErrorCode::InvalidArgument, "IPAUC needs strictly increasing iterations");
    area += 0.5 * dk * (curve[i].value + curve[i - 1].value);
  }
  return area / (curve.back().k - curve.front().k);
}

inline std::string primary_metric(TaskKind task) { return task.is_classification() ? "balanced_accuracy" : "mse"; }

inline std::vector<CurvePoint> metric_curve(const RunLog& log, const std::string& metric) {
  std::vector<CurvePoint> curve;
  for (const auto& it : log.iterations) curve.push_back({static_cast<double>(it.k), it.metrics.at(metric)});
  return curve;
}

// ---------------------------------------------------------------------------
// Experiment description

struct DatasetSpec {
  enum class Source { Checkerboard, GaussianClouds, SynthRegression, Csv };

  Source source = Source::Checkerboard;
  std::size_t n_samples = 300;
  int grid = 2;
  std::size_t n_clouds = 2;
  double overlap_sigma = 1.0;
  SynthRegVariant variant = SynthRegVariant::SynthReg1;
  double noise_sd = 0.1;
  std::optional<std::uint64_t> seed;  // defaults to a child of the master seed
  std::string path;
  CsvSchema schema;
};

struct ModelSpec {
  enum class Kind { Gpc, Gpr, Ensemble };

  Kind kind = Kind::Gpc;
  GpHyperparams hp;
  HyperoptOptions hyperopt;
  std::string base = "gpr";  // ensemble base learner: gpr, gpc, ridge or logistic
  std::size_t n_estimators = 5;
};

struct StrategySpec {
  std::string name;
  StrategyConfig config;
};

struct ExperimentSpec {
  std::string name = "experiment";
  DatasetSpec dataset;
  std::size_t folds = 5;
  TaskConfig start;
  ModelSpec model;
  std::vector<StrategySpec> strategies;
  std::size_t m = 1;
  std::optional<std::size_t> budget;
  std::uint64_t seed = 0;
};

inline Dataset build_dataset(const DatasetSpec& spec, std::uint64_t master_seed) {
  const std::uint64_t seed = spec.seed.value_or(derive_seed({master_seed, 1}));
  switch (spec.source) {
    case DatasetSpec::Source::Checkerboard: return generate_checkerboard(spec.n_samples, spec.grid, seed);
    case DatasetSpec::Source::GaussianClouds:
      return generate_gaussian_clouds(spec.n_samples, spec.n_clouds, spec.overlap_sigma, seed);
    case DatasetSpec::Source::SynthRegression:
      return generate_synth_regression(spec.variant, spec.n_samples, spec.noise_sd, seed);
    case DatasetSpec::Source::Csv: return load_csv(spec.path, spec.schema);
  }
  fail(ErrorCode::SpecError, "unknown dataset source");
}

inline std::shared_ptr<const ModelManager> build_model(const ModelSpec& spec, TaskKind task) {
  auto single = [&](const std::string& kind) -> std::shared_ptr<const ModelManager> {
    if (kind == "gpc" || kind == "logistic") {
      require(task.is_classification(), ErrorCode::SpecError, "model '" + kind + "' needs a classification dataset");
      if (kind == "gpc") return std::make_shared<GpClassifierManager>(task.n_classes, spec.hp, spec.hyperopt);
      return std::make_shared<LogisticManager>(task.n_classes);
    }
    if (kind == "gpr" || kind == "ridge") {
      require(!task.is_classification(), ErrorCode::SpecError, "model '" + kind + "' needs a regression dataset");
      if (kind == "gpr") return std::make_shared<GpRegressorManager>(spec.hp, spec.hyperopt);
      return std::make_shared<RidgeManager>();
    }
    fail(ErrorCode::SpecError, "unknown model kind '" + kind + "'");
  };
  switch (spec.kind) {
    case ModelSpec::Kind::Gpc: return single("gpc");
    case ModelSpec::Kind::Gpr: return single("gpr");
    case ModelSpec::Kind::Ensemble:
      return std::make_shared<EnsembleManager>(single(spec.base), EnsembleOptions{spec.n_estimators, false});
  }
  fail(ErrorCode::SpecError, "unknown model kind");
}

// ---------------------------------------------------------------------------
// JSON <-> spec

namespace detail {

class SpecReader {
 public:
  SpecReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) error("expected an object");
  }

  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorCode::SpecError, "field '" + (path_.empty() ? std::string("<root>") : path_) + "': " + what);
  }

  [[nodiscard]] bool has(const std::string& key) const { return node_.contains(key); }

  [[nodiscard]] SpecReader child(const std::string& key) const {
    if (!has(key)) fail(ErrorCode::SpecError, "field '" + join(key) + "': required");
    return SpecReader(node_.at(key), join(key));
  }

  [[nodiscard]] std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) const {
    if (!has(key)) return required(key, fallback);
    const auto& v = node_.at(key);
    if (!v.is_string()) fail(ErrorCode::SpecError, "field '" + join(key) + "': expected a string");
    return v.get<std::string>();
  }

  [[nodiscard]] double number(const std::string& key, std::optional<double> fallback = std::nullopt) const {
    if (!has(key)) return required(key, fallback);
    const auto& v = node_.at(key);
    if (!v.is_number()) fail(ErrorCode::SpecError, "field '" + join(key) + "': expected a number");
    return v.get<double>();
  }

  [[nodiscard]] std::uint64_t unsigned_int(const std::string& key,
                                           std::optional<std::uint64_t> fallback = std::nullopt) const {
    if (!has(key)) return required(key, fallback);
    const auto& v = node_.at(key);
    const bool non_negative = v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    if (!non_negative) fail(ErrorCode::SpecError, "field '" + join(key) + "': expected an unsigned integer");
    return v.get<std::uint64_t>();
  }

  [[nodiscard]] bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& v = node_.at(key);
    if (!v.is_boolean()) fail(ErrorCode::SpecError, "field '" + join(key) + "': expected true or false");
    return v.get<bool>();
  }

  [[nodiscard]] const json& raw() const noexcept { return node_; }
  [[nodiscard]] std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  template <typename T>
  T required(const std::string& key, const std::optional<T>& fallback) const {
    if (!fallback) fail(ErrorCode::SpecError, "field '" + join(key) + "': required");
    return *fallback;
  }

  const json& node_;
  std::string path_;
};

inline StrategySpec parse_strategy(const json& node, const std::string& path) {
  StrategySpec out;
  if (node.is_string()) {
    const auto id = node.get<std::string>();
    if (id == "random") {
      out.config = StrategyConfig::random();
    } else if (id == "representative") {
      out.config = StrategyConfig::representative();
    } else if (const auto m = parse_measure(id)) {
      out.config = StrategyConfig::top_m(*m);
    } else {
      fail(ErrorCode::SpecError, "field '" + path + "': unknown strategy '" + id + "'");
    }
    out.name = out.config.label();
    return out;
  }
  const SpecReader r(node, path);
  const std::string kind = r.string("kind");
  auto measure = [&](std::optional<std::string> fallback) {
    const auto id = r.string("measure", std::move(fallback));
    const auto m = parse_measure(id);
    if (!m) fail(ErrorCode::SpecError, "field '" + r.join("measure") + "': unknown measure '" + id + "'");
    return *m;
  };
  if (kind == "random") {
    out.config = StrategyConfig::random();
  } else if (kind == "representative") {
    out.config = StrategyConfig::representative();
  } else if (kind == "top_m") {
    out.config = StrategyConfig::top_m(measure(std::nullopt));
  } else if (kind == "epsilon_greedy") {
    out.config = StrategyConfig::epsilon_greedy(r.number("eps"), measure("greedy"));
    if (out.config.eps < 0.0 || out.config.eps > 1.0) fail(ErrorCode::SpecError, "field '" + r.join("eps") + "': must lie in [0, 1]");
  } else {
    fail(ErrorCode::SpecError, "field '" + r.join("kind") + "': unknown strategy kind '" + kind + "'");
  }
  out.config.params.lambda = r.number("lambda", 1.0);
  if (out.config.params.lambda < 0.0) fail(ErrorCode::SpecError, "field '" + r.join("lambda") + "': must be >= 0");
  out.config.rng_seed = r.unsigned_int("seed", 0);
  out.name = r.string("name", out.config.label());
  return out;
}

inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace detail

inline ExperimentSpec parse_experiment_spec(const json& root) {
  const detail::SpecReader r(root, "");
  ExperimentSpec spec;
  spec.name = r.string("name", "experiment");
  spec.seed = r.unsigned_int("seed", 0);
  spec.folds = r.unsigned_int("folds", 5);
  if (spec.folds < 2) fail(ErrorCode::SpecError, "field 'folds': must be >= 2");
  spec.m = r.unsigned_int("m", 1);
  if (spec.m < 1) fail(ErrorCode::SpecError, "field 'm': must be >= 1");
  if (r.has("budget") && !root.at("budget").is_null()) spec.budget = r.unsigned_int("budget");

  {
    const auto d = r.child("dataset");
    const std::string gen = d.string("generator");
    DatasetSpec& ds = spec.dataset;
    if (d.has("seed")) ds.seed = d.unsigned_int("seed");
    if (gen == "checkerboard") {
      ds.source = DatasetSpec::Source::Checkerboard;
      ds.n_samples = d.unsigned_int("n_samples", 300);
      ds.grid = static_cast<int>(d.unsigned_int("grid", 2));
      if (ds.grid != 2 && ds.grid != 4) fail(ErrorCode::SpecError, "field 'dataset.grid': must be 2 or 4");
    } else if (gen == "gaussian_clouds") {
      ds.source = DatasetSpec::Source::GaussianClouds;
      ds.n_samples = d.unsigned_int("n_samples", 300);
      ds.n_clouds = d.unsigned_int("n_clouds", 2);
      ds.overlap_sigma = d.number("overlap_sigma", 1.0);
    } else if (gen == "synth_reg1" || gen == "synth_reg2") {
      ds.source = DatasetSpec::Source::SynthRegression;
      ds.variant = gen == "synth_reg1" ? SynthRegVariant::SynthReg1 : SynthRegVariant::SynthReg2;
      ds.n_samples = d.unsigned_int("n_samples", 200);
      ds.noise_sd = d.number("noise_sd", 0.1);
    } else if (gen == "csv") {
      ds.source = DatasetSpec::Source::Csv;
      ds.path = d.string("path");
      ds.schema.target_column = d.string("target_column");
      const auto task = d.string("task");
      if (task == "classification") {
        ds.schema.task = TaskKind::Kind::Classification;
      } else if (task == "regression") {
        ds.schema.task = TaskKind::Kind::Regression;
      } else {
        fail(ErrorCode::SpecError, "field 'dataset.task': expected 'classification' or 'regression'");
      }
    } else {
      fail(ErrorCode::SpecError, "field 'dataset.generator': unknown generator '" + gen + "'");
    }
  }

  if (r.has("start")) {
    const auto s = r.child("start");
    const auto mode = s.string("mode");
    if (mode == "cold") {
      spec.start.start_mode = StartMode::ColdStart;
    } else if (mode == "warm") {
      spec.start.start_mode = StartMode::WarmStart;
    } else {
      fail(ErrorCode::SpecError, "field 'start.mode': expected 'cold' or 'warm'");
    }
    spec.start.warm_fraction = s.number("warm_fraction", 0.10);
    if (!(spec.start.warm_fraction > 0.0 && spec.start.warm_fraction <= 1.0)) {
      fail(ErrorCode::SpecError, "field 'start.warm_fraction': must lie in (0, 1]");
    }
  }

  {
    const auto mdl = r.child("model");
    const auto kind = mdl.string("kind");
    if (kind == "gpc") {
      spec.model.kind = ModelSpec::Kind::Gpc;
    } else if (kind == "gpr") {
      spec.model.kind = ModelSpec::Kind::Gpr;
    } else if (kind == "ensemble") {
      spec.model.kind = ModelSpec::Kind::Ensemble;
      spec.model.base = mdl.string("base", "ridge");
      spec.model.n_estimators = mdl.unsigned_int("n_estimators", 5);
      if (spec.model.n_estimators < 2) fail(ErrorCode::SpecError, "field 'model.n_estimators': must be >= 2");
    } else {
      fail(ErrorCode::SpecError, "field 'model.kind': unknown model '" + kind + "'");
    }
    spec.model.hp.lengthscale = mdl.number("lengthscale", 1.0);
    spec.model.hp.signal_variance = mdl.number("signal_variance", 1.0);
    spec.model.hp.noise_variance = mdl.number("noise_variance", 1e-2);
    if (!(spec.model.hp.lengthscale > 0 && spec.model.hp.signal_variance > 0 && spec.model.hp.noise_variance > 0)) {
      fail(ErrorCode::SpecError, "field 'model': hyperparameters must be strictly positive");
    }
    spec.model.hyperopt.optimize = mdl.boolean("optimize", true);
    spec.model.hyperopt.restarts = static_cast<int>(mdl.unsigned_int("restarts", 3));
    spec.model.hyperopt.max_iterations = static_cast<int>(mdl.unsigned_int("max_iterations", 200));
    if (spec.model.hyperopt.restarts < 1) fail(ErrorCode::SpecError, "field 'model.restarts': must be >= 1");
  }

  if (!r.has("strategies")) fail(ErrorCode::SpecError, "field 'strategies': required");
  const json& strategies = root.at("strategies");
  if (!strategies.is_array() || strategies.empty()) {
    fail(ErrorCode::SpecError, "field 'strategies': expected a non-empty array");
  }
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    spec.strategies.push_back(detail::parse_strategy(strategies[i], "strategies[" + std::to_string(i) + "]"));
  }
  return spec;
}

/// Parses spec text; syntax errors report line and column.
inline ExperimentSpec parse_experiment_spec(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = detail::line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    fail(ErrorCode::SpecError, "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what());
  }
  return parse_experiment_spec(root);
}

inline ExperimentSpec load_experiment_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::SpecError, "cannot open spec file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_experiment_spec(buf.str());
}

inline json strategy_to_json(const StrategySpec& s) {
  json j;
  j["name"] = s.name;
  j["seed"] = s.config.rng_seed;
  switch (s.config.kind) {
    case StrategyConfig::Kind::Random: j["kind"] = "random"; break;
    case StrategyConfig::Kind::Representative: j["kind"] = "representative"; break;
    case StrategyConfig::Kind::TopM:
      j["kind"] = "top_m";
      j["measure"] = measure_id(s.config.measure);
      j["lambda"] = s.config.params.lambda;
      break;
    case StrategyConfig::Kind::EpsilonGreedy:
      j["kind"] = "epsilon_greedy";
      j["measure"] = measure_id(s.config.measure);
      j["eps"] = s.config.eps;
      j["lambda"] = s.config.params.lambda;
      break;
  }
  return j;
}

/// Canonical echo of a parsed spec; every defaulted field is explicit.
inline json spec_to_json(const ExperimentSpec& spec) {
  json j;
  j["name"] = spec.name;
  j["seed"] = spec.seed;
  j["folds"] = spec.folds;
  j["m"] = spec.m;
  j["budget"] = spec.budget ? json(*spec.budget) : json(nullptr);
  json d;
  const auto& ds = spec.dataset;
  switch (ds.source) {
    case DatasetSpec::Source::Checkerboard:
      d = {{"generator", "checkerboard"}, {"n_samples", ds.n_samples}, {"grid", ds.grid}};
      break;
    case DatasetSpec::Source::GaussianClouds:
      d = {{"generator", "gaussian_clouds"}, {"n_samples", ds.n_samples}, {"n_clouds", ds.n_clouds},
           {"overlap_sigma", ds.overlap_sigma}};
      break;
    case DatasetSpec::Source::SynthRegression:
      d = {{"generator", ds.variant == SynthRegVariant::SynthReg1 ? "synth_reg1" : "synth_reg2"},
           {"n_samples", ds.n_samples}, {"noise_sd", ds.noise_sd}};
      break;
    case DatasetSpec::Source::Csv:
      d = {{"generator", "csv"}, {"path", ds.path}, {"target_column", ds.schema.target_column},
           {"task", ds.schema.task == TaskKind::Kind::Classification ? "classification" : "regression"}};
      break;
  }
  if (ds.seed) d["seed"] = *ds.seed;
  j["dataset"] = d;
  j["start"] = {{"mode", spec.start.start_mode == StartMode::ColdStart ? "cold" : "warm"},
                {"warm_fraction", spec.start.warm_fraction}};
  json mdl = {{"lengthscale", spec.model.hp.lengthscale},
              {"signal_variance", spec.model.hp.signal_variance},
              {"noise_variance", spec.model.hp.noise_variance},
              {"optimize", spec.model.hyperopt.optimize},
              {"restarts", spec.model.hyperopt.restarts},
              {"max_iterations", spec.model.hyperopt.max_iterations}};
  switch (spec.model.kind) {
    case ModelSpec::Kind::Gpc: mdl["kind"] = "gpc"; break;
    case ModelSpec::Kind::Gpr: mdl["kind"] = "gpr"; break;
    case ModelSpec::Kind::Ensemble:
      mdl["kind"] = "ensemble";
      mdl["base"] = spec.model.base;
      mdl["n_estimators"] = spec.model.n_estimators;
      break;
  }
  j["model"] = mdl;
  j["strategies"] = json::array();
  for (const auto& s : spec.strategies) j["strategies"].push_back(strategy_to_json(s));
  return j;
}

// ---------------------------------------------------------------------------
// Running

struct RunResult {
  std::size_t strategy = 0;
  std::size_t fold = 0;
  RunLog log;
  std::optional<double> ipauc;
  std::string error;  // empty on success
};

struct StrategySummary {
  std::string name;
  std::vector<std::optional<double>> fold_ipauc;  // nullopt marks a failed cell
  double mean = std::nan("");
  double std = std::nan("");
  std::size_t failed = 0;
};

struct IpaucSummary {
  std::string metric;
  std::vector<StrategySummary> strategies;
};

struct ExperimentResult {
  IpaucSummary summary;
  std::vector<RunResult> runs;  // ordered by (fold, strategy)
};

struct RunOptions {
  std::size_t jobs = 1;
};

/// Mean and population standard deviation of the available fold values.
inline void summarise(StrategySummary& s) {
  std::vector<double> v;
  for (const auto& x : s.fold_ipauc) {
    if (x) v.push_back(*x);
  }
  s.failed = s.fold_ipauc.size() - v.size();
  if (v.empty()) return;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(v.size()));
}

/// Runs every (fold, strategy) cell. All strategies in a fold share the split,
/// the initial labelled set and the model seed; the strategy's own seed and
/// the fold index determine its random stream, so two identical strategy
/// entries produce identical runs. Failed cells are recorded, not rethrown.
inline ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& options = {}) {
  require(!spec.strategies.empty(), ErrorCode::SpecError, "experiment needs at least one strategy");
  require(spec.folds >= 2, ErrorCode::SpecError, "experiment needs at least two folds");
  const auto dataset = std::make_shared<const Dataset>(build_dataset(spec.dataset, spec.seed));
  const TaskKind task = dataset->task();
  const auto model = build_model(spec.model, task);
  const auto oracle = std::make_shared<const BenchmarkOracle>(dataset);
  const auto folds = kfold(*dataset, spec.folds, derive_seed({spec.seed, 2}), task.is_classification());

  std::vector<IndexList> initial(spec.folds);
  for (std::size_t f = 0; f < spec.folds; ++f) {
    TaskConfig cfg = spec.start;
    cfg.rng_seed = derive_seed({spec.seed, 3, f});
    initial[f] = initial_labels(*dataset, folds[f].train, cfg);
  }

  const std::string metric = primary_metric(task);
  const std::string config_echo = spec_to_json(spec).dump();
  const std::size_t n_cells = spec.folds * spec.strategies.size();
  std::vector<RunResult> runs(n_cells);

  auto run_cell = [&](std::size_t cell) {
    const std::size_t f = cell / spec.strategies.size();
    const std::size_t s = cell % spec.strategies.size();
    RunResult& out = runs[cell];
    out.fold = f;
    out.strategy = s;
    StrategyConfig cfg = spec.strategies[s].config;
    cfg.rng_seed = derive_seed({spec.seed, 4, f, cfg.rng_seed});
    try {
      Pipeline pipeline(DataManager(dataset, folds[f], initial[f]), model, cfg, oracle, derive_seed({spec.seed, 5, f}));
      require(pipeline.data_manager().labelled() == initial[f], ErrorCode::InvalidArgument,
              "strategies in a fold must share the initial labelled set");
      out.log = pipeline.full_run(spec.m, spec.budget);
      out.ipauc = ipauc(metric_curve(out.log, metric));
    } catch (const PartialRunError& e) {
      out.log = e.partial_log();
      out.error = e.what();
    } catch (const Error& e) {
      out.error = e.what();
    }
    out.log.config = config_echo;
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, n_cells));
  if (jobs == 1) {
    for (std::size_t c = 0; c < n_cells; ++c) run_cell(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t c = next++; c < n_cells; c = next++) run_cell(c);
      });
    }
    for (auto& t : workers) t.join();
  }

  ExperimentResult result;
  result.summary.metric = metric;
  for (const auto& s : spec.strategies) {
    StrategySummary summary;
    summary.name = s.name;
    summary.fold_ipauc.resize(spec.folds);
    result.summary.strategies.push_back(std::move(summary));
  }
  for (const auto& r : runs) result.summary.strategies[r.strategy].fold_ipauc[r.fold] = r.ipauc;
  for (auto& s : result.summary.strategies) summarise(s);
  result.runs = std::move(runs);
  return result;
}

// ---------------------------------------------------------------------------
// Output

inline json run_to_json(const RunResult& run, const std::string& strategy_name) {
  json j;
  j["strategy"] = strategy_name;
  j["fold"] = run.fold;
  j["iterations"] = json::array();
  for (const auto& it : run.log.iterations) {
    json metrics = json::object();
    for (const auto& [k, v] : it.metrics.values) metrics[k] = v;
    j["iterations"].push_back(
        {{"k", it.k}, {"query_indices", it.query_indices}, {"labelled_count", it.labelled_count}, {"metrics", metrics}});
  }
  if (!run.error.empty()) j["error"] = run.error;
  return j;
}

inline std::string format_fixed6(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string summary_csv(const IpaucSummary& summary) {
  std::string out = "strategy,mean_ipauc,std_ipauc\n";
  for (const auto& s : summary.strategies) out += s.name + "," + format_fixed6(s.mean) + "," + format_fixed6(s.std) + "\n";
  return out;
}

/// Writes summary.csv, runs.jsonl and spec.json into `out_dir`.
inline void write_results(const ExperimentSpec& spec, const ExperimentResult& result,
                          const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create '" + out_dir.string() + "': " + ec.message());
  auto write = [&](const std::string& file, const std::string& content) {
    const auto path = out_dir / file;
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::Io, "cannot write '" + path.string() + "'");
    out << content;
    if (!out) fail(ErrorCode::Io, "write failed for '" + path.string() + "'");
  };
  write("summary.csv", summary_csv(result.summary));

  std::string lines;
  for (const auto& run : result.runs) lines += run_to_json(run, spec.strategies[run.strategy].name).dump() + "\n";
  write("runs.jsonl", lines);

  json echo = spec_to_json(spec);
  echo["ipauc_metric"] = result.summary.metric;
  echo["ipauc_normalization"] = "iteration_span";
  write("spec.json", echo.dump(2) + "\n");
}

}  // namespace poolal
