#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "poolal/data_manager.hpp"
#include "poolal/model/model_manager.hpp"
#include "poolal/strategy.hpp"

namespace poolal {

/// Label source for queried points.
class Oracle {
 public:
  virtual ~Oracle() = default;
  [[nodiscard]] virtual std::vector<Annotation> annotate(const IndexList& indices) const = 0;
};

/// Answers with the hidden ground truth stored in the dataset.
class BenchmarkOracle final : public Oracle {
 public:
  explicit BenchmarkOracle(std::shared_ptr<const Dataset> dataset) : dataset_(std::move(dataset)) {}

  [[nodiscard]] std::vector<Annotation> annotate(const IndexList& indices) const override {
    std::vector<Annotation> out;
    out.reserve(indices.size());
    for (auto i : indices) {
      require(i < dataset_->n_samples(), ErrorCode::UnknownIndex, "oracle asked for unknown index " + std::to_string(i));
      out.push_back({i, dataset_->targets()[static_cast<Eigen::Index>(i)]});
    }
    return out;
  }

 private:
  std::shared_ptr<const Dataset> dataset_;
};

inline std::vector<Annotation> oracle_annotate(const Oracle& oracle, const IndexList& indices) {
  return oracle.annotate(indices);
}

struct IterationRecord {
  std::size_t k = 0;
  IndexList query_indices;  // empty for the k = 0 baseline
  std::size_t labelled_count = 0;
  TestMetrics metrics;
};

struct RunLog {
  std::vector<IterationRecord> iterations;
  std::string config;  // serialized run configuration, filled by the harness
};

/// Raised when a run stops on an error; carries everything logged before it.
class PartialRunError : public Error {
 public:
  PartialRunError(const Error& cause, RunLog partial)
      : Error(cause.code(), std::string("run aborted after ") + std::to_string(partial.iterations.size()) +
                                " records: " + cause.detail()),
        log_(std::move(partial)) {}

  [[nodiscard]] const RunLog& partial_log() const noexcept { return log_; }

 private:
  RunLog log_;
};

/// One active-learning run: query, annotate, update, refit, record.
///
/// The model fitted on the current labelled set is cached between steps, so
/// each labelled state is fitted exactly once: the post-query fit of step k is
/// the model the strategy scores with at step k + 1.
class Pipeline {
 public:
  Pipeline(DataManager data, std::shared_ptr<const ModelManager> model, StrategyConfig strategy,
           std::shared_ptr<const Oracle> oracle, std::uint64_t model_seed = 0)
      : data_(std::move(data)),
        model_(std::move(model)),
        strategy_(strategy),
        oracle_(std::move(oracle)),
        model_seed_(model_seed) {
    require(model_ != nullptr && oracle_ != nullptr, ErrorCode::InvalidArgument, "pipeline needs a model and an oracle");
    require(!data_.splits().test.empty(), ErrorCode::EmptyEvalSet, "pipeline needs a non-empty test split");
  }

  [[nodiscard]] const DataManager& data_manager() const noexcept { return data_; }
  [[nodiscard]] std::size_t iteration() const noexcept { return iteration_; }
  [[nodiscard]] const StrategyConfig& strategy() const noexcept { return strategy_; }

  /// Fits on the initial labelled set and records the k = 0 baseline.
  IterationRecord baseline() {
    ensure_fitted();
    return IterationRecord{0, {}, data_.labelled().size(), metrics_};
  }

  /// One full cycle. State is untouched if anything throws.
  IterationRecord step(std::size_t m) {
    require(!data_.unlabelled().empty(), ErrorCode::PoolExhausted, "no unlabelled points left");
    ensure_fitted();
    const std::size_t k = iteration_ + 1;
    const QuerySet query = run_strategy(strategy_, data_, *model_, m, k, fitted_);
    const auto annotations = oracle_annotate(*oracle_, query.indices);

    DataManager next = data_;
    next.apply_annotations(annotations);
    auto refit = fit_on(next, k);
    TestMetrics metrics = test_metrics(next, *refit);

    data_ = std::move(next);
    fitted_ = std::move(refit);
    metrics_ = metrics;
    iteration_ = k;
    return IterationRecord{k, query.indices, data_.labelled().size(), std::move(metrics)};
  }

  /// Steps until the pool is empty or `budget` steps have completed.
  RunLog full_run(std::size_t m, std::optional<std::size_t> budget = std::nullopt) {
    RunLog log;
    try {
      log.iterations.push_back(baseline());
      for (std::size_t done = 0; !data_.unlabelled().empty() && (!budget || done < *budget); ++done) {
        log.iterations.push_back(step(m));
      }
    } catch (const Error& e) {
      throw PartialRunError(e, std::move(log));
    }
    return log;
  }

 private:
  [[nodiscard]] std::shared_ptr<const Predictor> fit_on(const DataManager& dm, std::size_t k) const {
    const SubsetViews v = dm.subset_views();
    return model_->fit(v.labelled_x, v.labelled_y, derive_seed({model_seed_, static_cast<std::uint64_t>(k)}));
  }

  [[nodiscard]] TestMetrics test_metrics(const DataManager& dm, const Predictor& model) const {
    const Dataset& ds = dm.dataset();
    return evaluate(model, ds.rows(dm.splits().test), ds.targets_at(dm.splits().test), ds.task());
  }

  void ensure_fitted() {
    if (fitted_) return;
    auto fitted = fit_on(data_, iteration_);
    metrics_ = test_metrics(data_, *fitted);
    fitted_ = std::move(fitted);
  }

  DataManager data_;
  std::shared_ptr<const ModelManager> model_;
  StrategyConfig strategy_;
  std::shared_ptr<const Oracle> oracle_;
  std::uint64_t model_seed_;
  std::size_t iteration_ = 0;
  std::shared_ptr<const Predictor> fitted_;
  TestMetrics metrics_;
};

}  // namespace poolal
