#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "poolal/model/gp_classifier.hpp"
#include "poolal/model/gp_regressor.hpp"
#include "poolal/model/linear.hpp"
#include "poolal/model/posterior.hpp"
#include "poolal/random.hpp"

namespace poolal {

/// A fitted model. Immutable and safe to share across threads.
class Predictor {
 public:
  virtual ~Predictor() = default;
  [[nodiscard]] virtual Posterior predict(const Matrix& query) const = 0;
};

/// Trains predictors for one task kind. Managers hold configuration only; each
/// call to fit builds a fresh model from scratch.
class ModelManager {
 public:
  virtual ~ModelManager() = default;
  [[nodiscard]] virtual TaskKind task() const = 0;
  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual std::shared_ptr<const Predictor> fit(const Matrix& x, const Vector& y,
                                                             std::uint64_t seed) const = 0;
};

namespace detail {

template <typename Model, typename PosteriorT>
class WrappedPredictor final : public Predictor {
 public:
  explicit WrappedPredictor(Model model) : model_(std::move(model)) {}
  [[nodiscard]] Posterior predict(const Matrix& query) const override { return PosteriorT(model_.predict(query)); }
  [[nodiscard]] const Model& model() const noexcept { return model_; }

 private:
  Model model_;
};

}  // namespace detail

class GpRegressorManager final : public ModelManager {
 public:
  explicit GpRegressorManager(GpHyperparams hp = {}, HyperoptOptions options = {})
      : hp_(hp), options_(std::move(options)) {
    hp_.validate();
  }

  [[nodiscard]] TaskKind task() const override { return TaskKind::regression(); }
  [[nodiscard]] std::string name() const override { return "gpr"; }
  [[nodiscard]] std::shared_ptr<const Predictor> fit(const Matrix& x, const Vector& y,
                                                     std::uint64_t seed) const override {
    return std::make_shared<detail::WrappedPredictor<GpRegressor, RegressionPosterior>>(
        GpRegressor::fit(x, y, hp_, options_, seed));
  }

 private:
  GpHyperparams hp_;
  HyperoptOptions options_;
};

class GpClassifierManager final : public ModelManager {
 public:
  GpClassifierManager(std::size_t n_classes, GpHyperparams hp = {}, HyperoptOptions options = {},
                      NewtonOptions newton = {})
      : n_classes_(n_classes), hp_(hp), options_(std::move(options)), newton_(newton) {
    hp_.validate();
  }

  [[nodiscard]] TaskKind task() const override { return TaskKind::classification(n_classes_); }
  [[nodiscard]] std::string name() const override { return "gpc"; }
  [[nodiscard]] std::shared_ptr<const Predictor> fit(const Matrix& x, const Vector& y,
                                                     std::uint64_t seed) const override {
    return std::make_shared<detail::WrappedPredictor<GpClassifier, ClassPosterior>>(
        GpClassifier::fit(x, y, n_classes_, hp_, options_, newton_, seed));
  }

 private:
  std::size_t n_classes_;
  GpHyperparams hp_;
  HyperoptOptions options_;
  NewtonOptions newton_;
};

class RidgeManager final : public ModelManager {
 public:
  explicit RidgeManager(double penalty = 1e-3) : penalty_(penalty) {}

  [[nodiscard]] TaskKind task() const override { return TaskKind::regression(); }
  [[nodiscard]] std::string name() const override { return "ridge"; }
  [[nodiscard]] std::shared_ptr<const Predictor> fit(const Matrix& x, const Vector& y, std::uint64_t) const override {
    class RidgePredictor final : public Predictor {
     public:
      explicit RidgePredictor(RidgeRegressor m) : m_(std::move(m)) {}
      [[nodiscard]] Posterior predict(const Matrix& q) const override {
        RegressionPosterior post;
        post.mean = m_.predict(q);
        post.variance = Vector::Zero(q.rows());
        return post;
      }

     private:
      RidgeRegressor m_;
    };
    return std::make_shared<RidgePredictor>(RidgeRegressor::fit(x, y, penalty_));
  }

 private:
  double penalty_;
};

class LogisticManager final : public ModelManager {
 public:
  explicit LogisticManager(std::size_t n_classes, LogisticOptions options = {})
      : n_classes_(n_classes), options_(options) {}

  [[nodiscard]] TaskKind task() const override { return TaskKind::classification(n_classes_); }
  [[nodiscard]] std::string name() const override { return "logistic"; }
  [[nodiscard]] std::shared_ptr<const Predictor> fit(const Matrix& x, const Vector& y, std::uint64_t) const override {
    return std::make_shared<detail::WrappedPredictor<LogisticClassifier, ClassPosterior>>(
        LogisticClassifier::fit(x, y, n_classes_, options_));
  }

 private:
  std::size_t n_classes_;
  LogisticOptions options_;
};

struct EnsembleOptions {
  std::size_t n_estimators = 5;
  /// Forces every member onto the same bootstrap resample; diversity vanishes.
  bool shared_bootstrap = false;
};

/// Bootstrap ensemble over any base manager. Member i trains on a same-size
/// resample drawn with replacement using a member-specific seed.
class EnsembleManager final : public ModelManager {
 public:
  EnsembleManager(std::shared_ptr<const ModelManager> base, EnsembleOptions options)
      : base_(std::move(base)), options_(options) {
    require(base_ != nullptr, ErrorCode::InvalidArgument, "ensemble needs a base model");
    require(options_.n_estimators >= 2, ErrorCode::InvalidArgument, "ensemble needs n_estimators >= 2");
  }

  class Fitted final : public Predictor {
   public:
    Fitted(TaskKind task, std::vector<std::shared_ptr<const Predictor>> members)
        : task_(task), members_(std::move(members)) {}

    [[nodiscard]] Posterior predict(const Matrix& query) const override {
      if (task_.is_classification()) {
        std::vector<Matrix> probs;
        for (const auto& m : members_) probs.push_back(std::get<ClassPosterior>(m->predict(query)).probs);
        return class_posterior_from_members(std::move(probs));
      }
      Matrix preds(static_cast<Eigen::Index>(members_.size()), query.rows());
      for (std::size_t i = 0; i < members_.size(); ++i) {
        preds.row(static_cast<Eigen::Index>(i)) = std::get<RegressionPosterior>(members_[i]->predict(query)).mean.transpose();
      }
      return regression_posterior_from_members(std::move(preds));
    }

    [[nodiscard]] std::size_t size() const noexcept { return members_.size(); }

   private:
    TaskKind task_;
    std::vector<std::shared_ptr<const Predictor>> members_;
  };

  [[nodiscard]] TaskKind task() const override { return base_->task(); }
  [[nodiscard]] std::string name() const override { return "ensemble(" + base_->name() + ")"; }

  [[nodiscard]] std::shared_ptr<const Predictor> fit(const Matrix& x, const Vector& y,
                                                     std::uint64_t seed) const override {
    require(x.rows() >= 1, ErrorCode::InvalidArgument, "ensemble needs labelled points");
    const auto n = static_cast<std::uint64_t>(x.rows());
    std::vector<std::shared_ptr<const Predictor>> members;
    for (std::size_t i = 0; i < options_.n_estimators; ++i) {
      const std::uint64_t member_seed = derive_seed({seed, options_.shared_bootstrap ? 0 : i + 1});
      Rng rng(member_seed);
      Matrix bx(x.rows(), x.cols());
      Vector by(y.size());
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const auto pick = static_cast<Eigen::Index>(uniform_index(rng, n));
        bx.row(r) = x.row(pick);
        by[r] = y[pick];
      }
      try {
        members.push_back(base_->fit(bx, by, member_seed));
      } catch (const Error& e) {
        fail(e.code(), "ensemble member " + std::to_string(i) + ": " + e.detail());
      }
    }
    return std::make_shared<Fitted>(task(), std::move(members));
  }

 private:
  std::shared_ptr<const ModelManager> base_;
  EnsembleOptions options_;
};

/// Test-set metrics: balanced accuracy for classification, mse otherwise.
inline TestMetrics evaluate(const Predictor& model, const Matrix& x, const Vector& y, TaskKind task) {
  require(x.rows() > 0 && x.rows() == y.size(), ErrorCode::EmptyEvalSet, "evaluation set is empty");
  const Posterior post = model.predict(x);
  TestMetrics metrics;
  if (task.is_classification()) {
    metrics.values["balanced_accuracy"] = balanced_accuracy(y, predicted_classes(std::get<ClassPosterior>(post)));
  } else {
    metrics.values["mse"] = mean_squared_error(y, std::get<RegressionPosterior>(post).mean);
  }
  return metrics;
}

}  // namespace poolal
