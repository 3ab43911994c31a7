#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "poolal/model/hyperopt.hpp"
#include "poolal/model/kernel.hpp"
#include "poolal/model/posterior.hpp"

namespace poolal {

namespace detail {

/// Cholesky of `a` with diagonal jitter escalating from 1e-10 to 1e-4 times
/// the mean diagonal. Returns nullopt if every attempt fails.
inline std::optional<Eigen::LLT<Matrix>> jittered_cholesky(const Matrix& a) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() == Eigen::Success) return llt;
  const double scale = std::max(a.diagonal().mean(), 1e-300);
  for (double jitter = 1e-10; jitter <= 1e-4 * (1 + 1e-9); jitter *= 10.0) {
    Matrix shifted = a;
    shifted.diagonal().array() += jitter * scale;
    llt.compute(shifted);
    if (llt.info() == Eigen::Success) return llt;
  }
  return std::nullopt;
}

inline void require_finite(const Matrix& x, const char* what) {
  require(x.allFinite(), ErrorCode::NonFiniteInput, std::string("non-finite ") + what);
}

}  // namespace detail

/// Log marginal likelihood of a zero-mean GP regressor and its gradient with
/// respect to (log lengthscale, log signal_variance, log noise_variance).
/// Returns nullopt when K + noise I cannot be factorised.
inline std::optional<double> gp_log_marginal_likelihood(const Matrix& sq_dist, const Vector& y, const GpHyperparams& hp,
                                                        Vector* gradient = nullptr) {
  const auto n = y.size();
  const Matrix k = rbf_from_distances(sq_dist, hp);
  Matrix ky = k;
  ky.diagonal().array() += hp.noise_variance;
  const auto llt = detail::jittered_cholesky(ky);
  if (!llt) return std::nullopt;
  const Vector alpha = llt->solve(y);
  const Matrix l = llt->matrixL();
  const double lml = -0.5 * y.dot(alpha) - l.diagonal().array().log().sum() -
                     0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  if (gradient != nullptr) {
    const Matrix w = alpha * alpha.transpose() - llt->solve(Matrix::Identity(n, n));
    const Matrix dk_dlog_len = k.cwiseProduct(sq_dist) / (hp.lengthscale * hp.lengthscale);
    gradient->resize(3);
    (*gradient)[0] = 0.5 * w.cwiseProduct(dk_dlog_len).sum();
    (*gradient)[1] = 0.5 * w.cwiseProduct(k).sum();
    (*gradient)[2] = 0.5 * hp.noise_variance * w.trace();
  }
  return lml;
}

/// Exact GP regression with an RBF kernel and zero prior mean. Reported
/// variance is that of the latent function; observation noise is excluded.
class GpRegressor {
 public:
  static GpRegressor fit(const Matrix& x, const Vector& y, GpHyperparams hp, const HyperoptOptions& options = {},
                         std::uint64_t seed = 0) {
    require(x.rows() >= 1 && x.rows() == y.size(), ErrorCode::InvalidArgument, "GP regressor needs >= 1 labelled point");
    detail::require_finite(x, "GP training inputs");
    detail::require_finite(y, "GP training targets");
    hp.validate();
    const Matrix sq = squared_distances(x, x);

    if (options.optimize) {
      const Eigen::Vector3d init(std::log(hp.lengthscale), std::log(hp.signal_variance), std::log(hp.noise_variance));
      const Eigen::Vector3d lower(std::log(options.bound_low), std::log(options.bound_low),
                                  std::log(options.noise_bound_low));
      const Eigen::Vector3d upper = Eigen::Vector3d::Constant(std::log(options.bound_high));
      LogEvidence evidence = [&](const Eigen::VectorXd& t, Eigen::VectorXd& g) {
        return gp_log_marginal_likelihood(sq, y, from_log(t), &g);
      };
      if (const auto best = maximise_evidence(evidence, init, lower, upper, options, seed)) hp = from_log(*best);
    }

    Matrix ky = rbf_from_distances(sq, hp);
    ky.diagonal().array() += hp.noise_variance;
    auto llt = detail::jittered_cholesky(ky);
    if (!llt) fail(ErrorCode::CholeskyFailure, "kernel matrix not positive definite after jitter escalation");
    GpRegressor model;
    model.x_ = x;
    model.hp_ = hp;
    model.alpha_ = llt->solve(y);
    model.l_ = llt->matrixL();
    model.lml_ = -0.5 * y.dot(model.alpha_) - model.l_.diagonal().array().log().sum() -
                 0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi);
    return model;
  }

  [[nodiscard]] RegressionPosterior predict(const Matrix& query) const {
    detail::require_finite(query, "GP query inputs");
    require(query.cols() == x_.cols(), ErrorCode::InvalidArgument, "query feature dimension mismatch");
    const Matrix k_star = rbf_kernel(query, x_, hp_);  // queries x train
    RegressionPosterior post;
    post.mean = k_star * alpha_;
    const Matrix v = l_.triangularView<Eigen::Lower>().solve(k_star.transpose());
    post.variance = (hp_.signal_variance - v.colwise().squaredNorm().array()).cwiseMax(0.0).matrix().transpose();
    return post;
  }

  [[nodiscard]] const GpHyperparams& hyperparams() const noexcept { return hp_; }
  [[nodiscard]] double log_marginal_likelihood() const noexcept { return lml_; }

 private:
  static GpHyperparams from_log(const Eigen::VectorXd& t) { return {std::exp(t[0]), std::exp(t[1]), std::exp(t[2])}; }

  Matrix x_;
  GpHyperparams hp_;
  Vector alpha_;
  Matrix l_;
  double lml_ = 0.0;
};

}  // namespace poolal
