#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "poolal/dataset.hpp"

namespace poolal {

/// Predictive moments for a batch of query points. `members`, when present, is
/// members x points and holds each ensemble member's point prediction.
struct RegressionPosterior {
  Vector mean;
  Vector variance;
  Matrix members;

  [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(mean.size()); }
  [[nodiscard]] bool has_members() const noexcept { return members.rows() > 0; }
};

/// Class probabilities (points x K). `members` holds one points x K matrix per
/// ensemble member and is empty for single models.
struct ClassPosterior {
  Matrix probs;
  std::vector<Matrix> members;

  [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(probs.rows()); }
  [[nodiscard]] std::size_t n_classes() const noexcept { return static_cast<std::size_t>(probs.cols()); }
  [[nodiscard]] bool has_members() const noexcept { return !members.empty(); }
};

using Posterior = std::variant<RegressionPosterior, ClassPosterior>;

/// Builds a regression posterior from a members x points prediction matrix:
/// row-wise mean and population variance across members.
inline RegressionPosterior regression_posterior_from_members(Matrix members) {
  RegressionPosterior post;
  post.mean = members.colwise().mean().transpose();
  post.variance = (members.rowwise() - post.mean.transpose()).array().square().colwise().mean().transpose();
  post.members = std::move(members);
  return post;
}

inline ClassPosterior class_posterior_from_members(std::vector<Matrix> members) {
  ClassPosterior post;
  post.probs = Matrix::Zero(members.front().rows(), members.front().cols());
  for (const auto& m : members) post.probs += m;
  post.probs /= static_cast<double>(members.size());
  post.members = std::move(members);
  return post;
}

inline void validate(const RegressionPosterior& post) {
  require(post.variance.size() == post.mean.size(), ErrorCode::InvalidArgument, "posterior mean/variance lengths differ");
  require(post.mean.allFinite() && post.variance.allFinite(), ErrorCode::NonFiniteInput, "non-finite posterior");
  require((post.variance.array() >= 0.0).all(), ErrorCode::InvalidArgument, "negative posterior variance");
}

inline void validate(const ClassPosterior& post) {
  require(post.probs.allFinite(), ErrorCode::NonFiniteInput, "non-finite class probabilities");
  for (Eigen::Index i = 0; i < post.probs.rows(); ++i) {
    require((post.probs.row(i).array() >= 0.0).all() && (post.probs.row(i).array() <= 1.0).all(),
            ErrorCode::InvalidArgument, "probability outside [0, 1] in row " + std::to_string(i));
    require(std::abs(post.probs.row(i).sum() - 1.0) <= 1e-9, ErrorCode::InvalidArgument,
            "probability row " + std::to_string(i) + " does not sum to 1");
  }
}

/// Row-normalises non-negative scores onto the simplex.
inline void normalise_rows(Matrix& probs) {
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const double s = probs.row(i).sum();
    if (s > 0.0) {
      probs.row(i) /= s;
    } else {
      probs.row(i).setConstant(1.0 / static_cast<double>(probs.cols()));
    }
  }
}

struct TestMetrics {
  std::map<std::string, double> values;

  [[nodiscard]] double at(const std::string& key) const { return values.at(key); }
};

/// Index of the largest entry, lowest index on ties.
inline Eigen::Index argmax_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < row.size(); ++j) {
    if (row[j] > row[best]) best = j;
  }
  return best;
}

/// Mean per-class recall over the classes present in `truth`.
inline double balanced_accuracy(const Vector& truth, const Vector& predicted) {
  require(truth.size() > 0, ErrorCode::EmptyEvalSet, "balanced accuracy on empty set");
  std::map<long, std::pair<std::size_t, std::size_t>> per_class;  // class -> (hits, total)
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    auto& [hits, total] = per_class[std::lround(truth[i])];
    ++total;
    if (std::lround(predicted[i]) == std::lround(truth[i])) ++hits;
  }
  double sum = 0.0;
  for (const auto& [cls, counts] : per_class) sum += static_cast<double>(counts.first) / static_cast<double>(counts.second);
  return sum / static_cast<double>(per_class.size());
}

inline double mean_squared_error(const Vector& truth, const Vector& predicted) {
  require(truth.size() > 0, ErrorCode::EmptyEvalSet, "mse on empty set");
  return (truth - predicted).squaredNorm() / static_cast<double>(truth.size());
}

inline Vector predicted_classes(const ClassPosterior& post) {
  Vector out(post.probs.rows());
  for (Eigen::Index i = 0; i < post.probs.rows(); ++i) out[i] = static_cast<double>(argmax_row(post.probs.row(i)));
  return out;
}

}  // namespace poolal
