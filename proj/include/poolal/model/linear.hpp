#pragma once

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "poolal/model/posterior.hpp"

namespace poolal {

/// Ridge regression with an unpenalised intercept, solved in closed form.
class RidgeRegressor {
 public:
  static RidgeRegressor fit(const Matrix& x, const Vector& y, double penalty = 1e-3) {
    require(x.rows() >= 1 && x.rows() == y.size(), ErrorCode::InvalidArgument, "ridge needs labelled points");
    require(x.allFinite() && y.allFinite(), ErrorCode::NonFiniteInput, "non-finite ridge input");
    const auto d = x.cols();
    Matrix design(x.rows(), d + 1);
    design << x, Vector::Ones(x.rows());
    Matrix gram = design.transpose() * design;
    gram.diagonal().head(d).array() += penalty;
    gram(d, d) += 1e-12;
    RidgeRegressor model;
    model.weights_ = gram.ldlt().solve(design.transpose() * y);
    return model;
  }

  [[nodiscard]] Vector predict(const Matrix& query) const {
    const auto d = weights_.size() - 1;
    return (query * weights_.head(d)).array() + weights_[d];
  }

 private:
  Vector weights_;
};

struct LogisticOptions {
  int iterations = 300;
  double learning_rate = 0.5;
  double penalty = 1e-3;
};

/// Multinomial logistic regression trained by full-batch gradient descent from
/// zero weights, so training is deterministic.
class LogisticClassifier {
 public:
  static LogisticClassifier fit(const Matrix& x, const Vector& y, std::size_t n_classes, const LogisticOptions& options = {}) {
    require(x.rows() >= 1 && x.rows() == y.size(), ErrorCode::InvalidArgument, "logistic needs labelled points");
    require(x.allFinite() && y.allFinite(), ErrorCode::NonFiniteInput, "non-finite logistic input");
    const auto n = x.rows();
    const auto k = static_cast<Eigen::Index>(n_classes);
    Matrix design(n, x.cols() + 1);
    design << x, Vector::Ones(n);
    Matrix onehot = Matrix::Zero(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
      const long c = std::lround(y[i]);
      require(c >= 0 && c < k, ErrorCode::LabelOutOfRange, "label out of range");
      onehot(i, c) = 1.0;
    }
    LogisticClassifier model;
    model.weights_ = Matrix::Zero(design.cols(), k);
    for (int it = 0; it < options.iterations; ++it) {
      const Matrix probs = softmax(design * model.weights_);
      Matrix grad = design.transpose() * (probs - onehot) / static_cast<double>(n);
      grad.topRows(x.cols()) += options.penalty * model.weights_.topRows(x.cols());
      model.weights_ -= options.learning_rate * grad;
    }
    return model;
  }

  [[nodiscard]] ClassPosterior predict(const Matrix& query) const {
    Matrix design(query.rows(), query.cols() + 1);
    design << query, Vector::Ones(query.rows());
    return ClassPosterior{softmax(design * weights_), {}};
  }

 private:
  static Matrix softmax(Matrix logits) {
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      logits.row(i).array() -= logits.row(i).maxCoeff();
      logits.row(i) = logits.row(i).array().exp().matrix();
      logits.row(i) /= logits.row(i).sum();
    }
    return logits;
  }

  Matrix weights_;
};

}  // namespace poolal
