#pragma once

#include <cmath>

#include <Eigen/Core>

#include "poolal/dataset.hpp"

namespace poolal {

struct GpHyperparams {
  double lengthscale = 1.0;
  double signal_variance = 1.0;
  double noise_variance = 1e-2;  // ignored by the classifier

  void validate() const {
    require(lengthscale > 0.0 && signal_variance > 0.0 && noise_variance > 0.0 && std::isfinite(lengthscale) &&
                std::isfinite(signal_variance) && std::isfinite(noise_variance),
            ErrorCode::InvalidArgument, "GP hyperparameters must be finite and strictly positive");
  }
};

/// Pairwise squared Euclidean distances between the rows of a and b.
inline Matrix squared_distances(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), ErrorCode::InvalidArgument, "feature dimensions differ");
  Matrix d = (-2.0 * a * b.transpose()).colwise() + a.rowwise().squaredNorm();
  d.rowwise() += b.rowwise().squaredNorm().transpose();
  return d.cwiseMax(0.0);
}

inline Matrix rbf_from_distances(const Matrix& sq_dist, const GpHyperparams& hp) {
  return hp.signal_variance * (sq_dist.array() * (-0.5 / (hp.lengthscale * hp.lengthscale))).exp().matrix();
}

/// k(a, b) = signal_variance * exp(-|a - b|^2 / (2 lengthscale^2)).
inline Matrix rbf_kernel(const Matrix& a, const Matrix& b, const GpHyperparams& hp) {
  return rbf_from_distances(squared_distances(a, b), hp);
}

}  // namespace poolal
