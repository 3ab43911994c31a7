#pragma once

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "poolal/benchmark.hpp"

namespace poolal {

namespace detail {

inline std::vector<double> parse_number_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    double v = 0.0;
    if (!parse_finite(trim(cell), v)) fail(ErrorCode::InvalidArgument, what + ": '" + cell + "' is not a finite number");
    out.push_back(v);
  }
  require(!out.empty(), ErrorCode::InvalidArgument, what + " is empty");
  return out;
}

// "0.2,0.8;0.5,0.5" -> one row per point.
inline Matrix parse_rows(const std::string& text, const std::string& what) {
  std::vector<std::vector<double>> rows;
  std::stringstream ss(text);
  std::string row;
  while (std::getline(ss, row, ';')) rows.push_back(parse_number_list(row, what));
  require(!rows.empty(), ErrorCode::InvalidArgument, what + " is empty");
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r].size() == rows[0].size(), ErrorCode::InvalidArgument, what + ": ragged rows");
    for (std::size_t c = 0; c < rows[r].size(); ++c) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return out;
}

inline Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

struct ScoreArgs {
  std::string measure;
  std::string probs;
  std::string mean;
  std::string variance;
  double lambda = 1.0;
  std::optional<double> best;
};

inline int score_command(const ScoreArgs& a, std::ostream& out) {
  if (a.measure.empty()) {
    for (const auto& info : kMeasures) out << info.id << "\t" << info.task << "\t" << info.summary << "\n";
    return 0;
  }
  const auto measure = parse_measure(a.measure);
  require(measure.has_value(), ErrorCode::InvalidArgument, "unknown measure '" + a.measure + "'");
  require(*measure != Measure::RelativeDistance && *measure != Measure::ThompsonSampling, ErrorCode::InvalidArgument,
          a.measure + " cannot be scored from a posterior summary");
  Posterior post;
  if (!a.probs.empty()) {
    ClassPosterior cls;
    cls.probs = parse_rows(a.probs, "--probs");
    validate(cls);
    post = cls;
  } else {
    require(!a.mean.empty() && !a.variance.empty(), ErrorCode::InvalidArgument,
            "give --probs, or --mean and --variance");
    RegressionPosterior reg;
    reg.mean = to_vector(parse_number_list(a.mean, "--mean"));
    reg.variance = to_vector(parse_number_list(a.variance, "--variance"));
    validate(reg);
    post = reg;
  }
  SubsetViews views;
  if (a.best) views.labelled_y = Vector::Constant(1, *a.best);
  const ScoreVector s = compute_scores(*measure, MeasureParams{a.lambda}, &post, views, 0);
  for (Eigen::Index i = 0; i < s.size(); ++i) out << format_fixed6(s[i]) << "\n";
  return 0;
}

}  // namespace detail

/// Command-line entry point. Exit codes: 0 success, 1 spec or usage error,
/// 2 runtime failure (including failed experiment cells).
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Pool-based active learning benchmark"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run an experiment spec and write results");
  std::string spec_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  run->add_option("--spec", spec_path, "Experiment spec (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--seed", seed, "Override the master seed");
  run->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  auto* datasets = app.add_subcommand("datasets", "Dataset generators");
  datasets->require_subcommand(1);
  auto* list = datasets->add_subcommand("list", "List built-in generators");

  auto* score = app.add_subcommand("score", "List measures, or score a posterior");
  detail::ScoreArgs sargs;
  score->add_option("--measure", sargs.measure, "Measure id");
  score->add_option("--probs", sargs.probs, "Class probabilities, rows split by ';'");
  score->add_option("--mean", sargs.mean, "Predictive means, comma separated");
  score->add_option("--variance", sargs.variance, "Predictive variances, comma separated");
  score->add_option("--lambda", sargs.lambda, "UCB trade-off");
  score->add_option("--best", sargs.best, "Best observed label for expected improvement");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (list->parsed()) {
      out << "checkerboard\tclassification\tgrid 2 or 4, uniform on the unit square\n"
          << "gaussian_clouds\tclassification\tn_clouds isotropic clouds, overlap_sigma\n"
          << "synth_reg1\tregression\tsin(6x) plus Gaussian noise\n"
          << "synth_reg2\tregression\tpiecewise-constant steps plus Gaussian noise\n"
          << "csv\teither\tpath, target_column, task\n";
      return 0;
    }
    if (score->parsed()) {
      try {
        return detail::score_command(sargs, out);
      } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;  // malformed scoring input is a usage error
      }
    }

    ExperimentSpec spec = load_experiment_spec(spec_path);
    if (seed) spec.seed = *seed;
    const ExperimentResult result = run_experiment(spec, RunOptions{jobs});
    write_results(spec, result, out_dir);
    std::size_t failed = 0;
    for (const auto& r : result.runs) {
      if (!r.error.empty()) {
        ++failed;
        err << "cell failed: strategy=" << spec.strategies[r.strategy].name << " fold=" << r.fold << ": " << r.error
            << "\n";
      }
    }
    out << summary_csv(result.summary);
    return failed == 0 ? 0 : 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::SpecError ? 1 : 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace poolal
