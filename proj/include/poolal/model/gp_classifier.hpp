#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <set>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "poolal/model/gp_regressor.hpp"
#include "poolal/model/hyperopt.hpp"
#include "poolal/model/kernel.hpp"
#include "poolal/model/posterior.hpp"

namespace poolal {

struct NewtonOptions {
  double tolerance = 1e-6;  // infinity norm of the mode update
  int max_iterations = 100;
};

namespace detail {

inline double log_sigmoid(double z) { return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }
inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace detail

/// Laplace approximation state at the posterior mode of a binary GP
/// classifier with logistic likelihood. Targets are +1 / -1.
struct LaplaceMode {
  Vector f;          // latent mode
  Vector a;          // K^-1 f
  Vector grad_loglik;  // d log p(y|f) / df at the mode
  Vector w;          // -d2 log p(y|f) / df2
  Matrix l;          // chol(I + W^1/2 K W^1/2)
  double log_evidence = 0.0;
  int iterations = 0;
};

/// Newton iteration for the mode with step halving whenever the objective
/// -a'f/2 + log p(y|f) fails to increase. `f0` warm-starts the iteration.
inline LaplaceMode laplace_mode(const Matrix& k, const Vector& y, const NewtonOptions& options,
                                const Vector* f0 = nullptr) {
  const auto n = y.size();
  LaplaceMode m;
  m.f = (f0 != nullptr && f0->size() == n) ? *f0 : Vector::Zero(n);
  Eigen::LLT<Matrix> llt_k;

  auto objective = [&](const Vector& a, const Vector& f) {
    double s = -0.5 * a.dot(f);
    for (Eigen::Index i = 0; i < n; ++i) s += detail::log_sigmoid(y[i] * f[i]);
    return s;
  };
  auto derivatives = [&](const Vector& f, Vector& grad, Vector& w) {
    grad.resize(n);
    w.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double pi = detail::sigmoid(f[i]);
      grad[i] = 0.5 * (y[i] + 1.0) - pi;
      w[i] = pi * (1.0 - pi);
    }
  };

  // a consistent with the starting f: solve K a = f only when warm-starting.
  if (f0 != nullptr && f0->size() == n && f0->squaredNorm() > 0.0) {
    Matrix kj = k;
    kj.diagonal().array() += 1e-8 * std::max(k.diagonal().mean(), 1e-300);
    m.a = kj.ldlt().solve(m.f);
    m.f = k * m.a;
  } else {
    m.a = Vector::Zero(n);
  }
  double psi = objective(m.a, m.f);

  for (m.iterations = 0; m.iterations < options.max_iterations; ++m.iterations) {
    derivatives(m.f, m.grad_loglik, m.w);
    const Vector sw = m.w.cwiseSqrt();
    Matrix b = sw.asDiagonal() * k * sw.asDiagonal();
    b.diagonal().array() += 1.0;
    Eigen::LLT<Matrix> llt(b);
    if (llt.info() != Eigen::Success) fail(ErrorCode::NewtonDivergence, "I + W^1/2 K W^1/2 not positive definite");
    const Vector bvec = m.w.cwiseProduct(m.f) + m.grad_loglik;
    const Vector rhs = sw.cwiseProduct(k * bvec);
    const Vector a_newton = bvec - sw.cwiseProduct(llt.solve(rhs));

    Vector a_next = a_newton;
    Vector f_next = k * a_next;
    double psi_next = objective(a_next, f_next);
    for (int halving = 0; halving < 30 && !(psi_next >= psi); ++halving) {
      a_next = 0.5 * (a_next + m.a);
      f_next = k * a_next;
      psi_next = objective(a_next, f_next);
    }
    if (!f_next.allFinite() || !std::isfinite(psi_next)) fail(ErrorCode::NewtonDivergence, "non-finite Laplace mode");
    const double change = (f_next - m.f).lpNorm<Eigen::Infinity>();
    m.a = a_next;
    m.f = f_next;
    psi = psi_next;
    if (change < options.tolerance) {
      ++m.iterations;
      break;
    }
  }

  derivatives(m.f, m.grad_loglik, m.w);
  const Vector sw = m.w.cwiseSqrt();
  Matrix b = sw.asDiagonal() * k * sw.asDiagonal();
  b.diagonal().array() += 1.0;
  Eigen::LLT<Matrix> llt(b);
  if (llt.info() != Eigen::Success) fail(ErrorCode::NewtonDivergence, "I + W^1/2 K W^1/2 not positive definite");
  m.l = llt.matrixL();
  m.log_evidence = psi - m.l.diagonal().array().log().sum();
  return m;
}

/// Gradient of the Laplace approximate log evidence with respect to
/// (log lengthscale, log signal_variance), including the implicit dependence
/// of the mode on the hyperparameters.
inline Vector laplace_evidence_gradient(const Matrix& k, const Matrix& sq_dist, const GpHyperparams& hp,
                                        const LaplaceMode& m) {
  const auto n = k.rows();
  const Vector sw = m.w.cwiseSqrt();
  const auto l = m.l.triangularView<Eigen::Lower>();
  // R = W^1/2 B^-1 W^1/2
  Matrix r = l.solve(Matrix(sw.asDiagonal()));
  r = l.transpose().solve(r);
  r = sw.asDiagonal() * r;
  const Matrix c = l.solve(sw.asDiagonal() * k);
  Vector third(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double pi = detail::sigmoid(m.f[i]);
    third[i] = -pi * (1.0 - pi) * (1.0 - 2.0 * pi);
  }
  const Vector s2 = 0.5 * (k.diagonal() - c.colwise().squaredNorm().transpose()).cwiseProduct(third);

  const Matrix dk[2] = {k.cwiseProduct(sq_dist) / (hp.lengthscale * hp.lengthscale), k};
  Vector grad(2);
  for (int j = 0; j < 2; ++j) {
    const double s1 = 0.5 * m.a.dot(dk[j] * m.a) - 0.5 * r.cwiseProduct(dk[j]).sum();
    const Vector b = dk[j] * m.grad_loglik;
    const Vector s3 = b - k * (r * b);
    grad[j] = s1 + s2.dot(s3);
  }
  return grad;
}

/// Binary Laplace GP classifier. Latent predictions are squashed with the
/// probit-style approximation sigmoid(kappa * mean), kappa = (1 + pi var / 8)^-1/2.
class BinaryGpClassifier {
 public:
  /// `positive` marks the targets of class +1.
  static BinaryGpClassifier fit(const Matrix& x, const std::vector<bool>& positive, GpHyperparams hp,
                                const HyperoptOptions& options = {}, const NewtonOptions& newton = {},
                                std::uint64_t seed = 0) {
    const auto n = x.rows();
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = positive[static_cast<std::size_t>(i)] ? 1.0 : -1.0;
    hp.validate();
    const Matrix sq = squared_distances(x, x);

    if (options.optimize) {
      std::optional<Vector> warm;
      LogEvidence evidence = [&](const Eigen::VectorXd& t, Eigen::VectorXd& g) -> std::optional<double> {
        GpHyperparams trial = hp;
        trial.lengthscale = std::exp(t[0]);
        trial.signal_variance = std::exp(t[1]);
        const Matrix k = rbf_from_distances(sq, trial);
        try {
          const auto m = laplace_mode(k, y, newton, warm ? &*warm : nullptr);
          g = laplace_evidence_gradient(k, sq, trial, m);
          warm = m.f;
          return m.log_evidence;
        } catch (const Error&) {
          return std::nullopt;
        }
      };
      const Eigen::Vector2d init(std::log(hp.lengthscale), std::log(hp.signal_variance));
      const Eigen::Vector2d lower = Eigen::Vector2d::Constant(std::log(options.bound_low));
      const Eigen::Vector2d upper = Eigen::Vector2d::Constant(std::log(options.bound_high));
      if (const auto best = maximise_evidence(evidence, init, lower, upper, options, seed)) {
        hp.lengthscale = std::exp((*best)[0]);
        hp.signal_variance = std::exp((*best)[1]);
      }
    }

    BinaryGpClassifier model;
    model.x_ = x;
    model.hp_ = hp;
    const Matrix k = rbf_from_distances(sq, hp);
    const auto m = laplace_mode(k, y, newton);
    model.grad_loglik_ = m.grad_loglik;
    model.sqrt_w_ = m.w.cwiseSqrt();
    model.l_ = m.l;
    model.log_evidence_ = m.log_evidence;
    return model;
  }

  /// Probability of the positive class at each query point.
  [[nodiscard]] Vector predict_positive(const Matrix& query) const {
    const Matrix k_star = rbf_kernel(query, x_, hp_);
    const Vector mean = k_star * grad_loglik_;
    const Matrix v = l_.triangularView<Eigen::Lower>().solve(sqrt_w_.asDiagonal() * k_star.transpose());
    const Vector var = (hp_.signal_variance - v.colwise().squaredNorm().array()).cwiseMax(0.0).matrix().transpose();
    Vector p(query.rows());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double kappa = 1.0 / std::sqrt(1.0 + std::numbers::pi * var[i] / 8.0);
      p[i] = detail::sigmoid(kappa * mean[i]);
    }
    return p;
  }

  [[nodiscard]] const GpHyperparams& hyperparams() const noexcept { return hp_; }
  [[nodiscard]] double log_evidence() const noexcept { return log_evidence_; }

 private:
  Matrix x_;
  GpHyperparams hp_;
  Vector grad_loglik_;
  Vector sqrt_w_;
  Matrix l_;
  double log_evidence_ = 0.0;
};

/// K-class GP classifier: a single binary model when K = 2, one-vs-rest with
/// row renormalisation otherwise.
class GpClassifier {
 public:
  static GpClassifier fit(const Matrix& x, const Vector& y, std::size_t n_classes, const GpHyperparams& hp,
                          const HyperoptOptions& options = {}, const NewtonOptions& newton = {},
                          std::uint64_t seed = 0) {
    require(x.rows() >= 1 && x.rows() == y.size(), ErrorCode::InvalidArgument, "GP classifier needs labelled points");
    require(n_classes >= 2, ErrorCode::InvalidArgument, "GP classifier needs K >= 2");
    detail::require_finite(x, "GP classifier inputs");
    detail::require_finite(y, "GP classifier labels");
    std::set<long> observed;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      require(y[i] >= 0 && y[i] < static_cast<double>(n_classes), ErrorCode::LabelOutOfRange, "label out of range");
      observed.insert(std::lround(y[i]));
    }
    require(observed.size() >= 2, ErrorCode::SingleClass, "GP classifier needs at least two observed classes");

    GpClassifier model;
    model.n_classes_ = n_classes;
    const std::size_t binaries = n_classes == 2 ? 1 : n_classes;
    for (std::size_t c = 0; c < binaries; ++c) {
      const long target = n_classes == 2 ? 1 : static_cast<long>(c);
      std::vector<bool> positive(static_cast<std::size_t>(y.size()));
      for (Eigen::Index i = 0; i < y.size(); ++i) positive[static_cast<std::size_t>(i)] = std::lround(y[i]) == target;
      model.binaries_.push_back(
          BinaryGpClassifier::fit(x, positive, hp, options, newton, derive_seed({seed, static_cast<std::uint64_t>(c)})));
    }
    return model;
  }

  [[nodiscard]] ClassPosterior predict(const Matrix& query) const {
    detail::require_finite(query, "GP classifier query");
    ClassPosterior post;
    const auto k = static_cast<Eigen::Index>(n_classes_);
    post.probs.resize(query.rows(), k);
    if (n_classes_ == 2) {
      const Vector p = binaries_.front().predict_positive(query);
      post.probs.col(1) = p;
      post.probs.col(0) = (1.0 - p.array()).matrix();
    } else {
      for (Eigen::Index c = 0; c < k; ++c) post.probs.col(c) = binaries_[static_cast<std::size_t>(c)].predict_positive(query);
      normalise_rows(post.probs);
    }
    return post;
  }

  [[nodiscard]] const std::vector<BinaryGpClassifier>& binaries() const noexcept { return binaries_; }

 private:
  std::size_t n_classes_ = 2;
  std::vector<BinaryGpClassifier> binaries_;
};

}  // namespace poolal
