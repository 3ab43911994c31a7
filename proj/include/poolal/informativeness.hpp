#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

#include <Eigen/Core>

#include "poolal/model/kernel.hpp"
#include "poolal/model/posterior.hpp"
#include "poolal/random.hpp"

namespace poolal {

/// Per-point informativeness, aligned with the unlabelled order it was computed on.
using ScoreVector = Vector;

enum class DistanceMetric { Euclidean };
enum class Embedding { Identity };

struct DistanceConfig {
  DistanceMetric metric = DistanceMetric::Euclidean;
  Embedding embedding = Embedding::Identity;
};

namespace detail {

inline double row_entropy(const Eigen::Ref<const Eigen::RowVectorXd>& p) {
  double h = 0.0;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    if (p[j] > 0.0) h -= p[j] * std::log(p[j]);
  }
  return h;
}

/// Largest and second-largest probabilities; the first maximum by class index
/// counts as the top class.
inline std::pair<double, double> top_two(const Eigen::Ref<const Eigen::RowVectorXd>& p) {
  const Eigen::Index best = argmax_row(p);
  double second = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    if (j != best) second = std::max(second, p[j]);
  }
  return {p[best], second};
}

inline void require_two_classes(const ClassPosterior& post) {
  require(post.n_classes() >= 2, ErrorCode::InvalidArgument, "measure needs posteriors over at least two classes");
}

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Uncertainty measures on class posteriors

/// Shannon entropy of each row, natural log, 0 log 0 = 0.
inline ScoreVector entropy(const ClassPosterior& post) {
  ScoreVector s(post.probs.rows());
  for (Eigen::Index i = 0; i < s.size(); ++i) s[i] = detail::row_entropy(post.probs.row(i));
  return s;
}

/// 1 - max_y p(y|x).
inline ScoreVector least_confidence(const ClassPosterior& post) {
  return (1.0 - post.probs.rowwise().maxCoeff().array()).matrix();
}

/// 1 - (p(y0) - p(y1)) for the two most probable classes.
inline ScoreVector margin_confidence(const ClassPosterior& post) {
  detail::require_two_classes(post);
  ScoreVector s(post.probs.rows());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const auto [p0, p1] = detail::top_two(post.probs.row(i));
    s[i] = 1.0 - (p0 - p1);
  }
  return s;
}

/// p(y1) / p(y0) for the two most probable classes.
inline ScoreVector ratio_confidence(const ClassPosterior& post) {
  detail::require_two_classes(post);
  ScoreVector s(post.probs.rows());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const auto [p0, p1] = detail::top_two(post.probs.row(i));
    s[i] = p1 / p0;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Regression measures

/// Predictive variance.
inline ScoreVector least_confidence(const RegressionPosterior& post) { return post.variance; }

/// Predictive mean; larger targets are of greater interest.
inline ScoreVector greedy_score(const RegressionPosterior& post) { return post.mean; }

/// mean + lambda * sqrt(variance).
inline ScoreVector ucb(const RegressionPosterior& post, double lambda) {
  require(lambda >= 0.0, ErrorCode::InvalidArgument, "ucb lambda must be non-negative");
  return (post.mean.array() + lambda * post.variance.array().sqrt()).matrix();
}

/// Closed-form expected improvement over `best_observed` for a Gaussian
/// predictive: (mu - b) Phi(z) + sigma phi(z), z = (mu - b) / sigma.
inline ScoreVector expected_improvement(const RegressionPosterior& post, double best_observed) {
  ScoreVector s(post.mean.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double sigma = std::sqrt(std::max(post.variance[i], 0.0));
    const double gain = post.mean[i] - best_observed;
    if (sigma <= 0.0) {
      s[i] = std::max(gain, 0.0);
      continue;
    }
    const double z = gain / sigma;
    s[i] = std::max(gain * detail::normal_cdf(z) + sigma * detail::normal_pdf(z), 0.0);
  }
  return s;
}

/// Mutual information between the prediction and the ensemble member:
/// H(mean member prediction) - mean member entropy.
inline ScoreVector bald(const ClassPosterior& post) {
  require(post.has_members(), ErrorCode::MissingMembers, "classification BALD needs per-member probabilities");
  ScoreVector s = entropy(post);
  for (const auto& member : post.members) {
    for (Eigen::Index i = 0; i < s.size(); ++i) s[i] -= detail::row_entropy(member.row(i)) / static_cast<double>(post.members.size());
  }
  return s;
}

/// Entropy of the Gaussian predictive, 0.5 log(2 pi e var); a monotone
/// transform of the variance. Zero variance is floored to keep scores finite.
inline ScoreVector bald(const RegressionPosterior& post) {
  constexpr double floor = std::numeric_limits<double>::min();
  return (0.5 * (2.0 * std::numbers::pi * std::numbers::e * post.variance.array().max(floor)).log()).matrix();
}

/// Scores with the predictions of one ensemble member drawn uniformly.
inline ScoreVector thompson_sampling(const RegressionPosterior& post, std::uint64_t seed) {
  require(post.has_members(), ErrorCode::MissingMembers, "Thompson sampling needs per-member predictions");
  Rng rng(seed);
  const auto member = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(post.members.rows())));
  return post.members.row(member).transpose();
}

// ---------------------------------------------------------------------------
// Diversity measures

/// Distance from each unlabelled point to its nearest labelled point.
inline ScoreVector relative_distance(const Matrix& unlabelled_x, const Matrix& labelled_x, const DistanceConfig& = {}) {
  require(labelled_x.rows() > 0, ErrorCode::EmptyLabelledSet, "relative distance needs labelled points");
  ScoreVector s(unlabelled_x.rows());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < labelled_x.rows(); ++j) best = std::min(best, (unlabelled_x.row(i) - labelled_x.row(j)).squaredNorm());
    s[i] = std::sqrt(best);
  }
  return s;
}

struct KMeansResult {
  Matrix centroids;
  std::vector<std::size_t> assignment;
  double objective = 0.0;  // sum of squared distances to assigned centroid
  int iterations = 0;
};

inline double kmeans_objective(const Matrix& x, const Matrix& centroids, const std::vector<std::size_t>& assignment) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    total += (x.row(i) - centroids.row(static_cast<Eigen::Index>(assignment[static_cast<std::size_t>(i)]))).squaredNorm();
  }
  return total;
}

/// Lloyd's algorithm from a seeded k-means++ initialisation. Assignment ties
/// go to the lower cluster index; empty clusters keep their centroid.
inline KMeansResult kmeans(const Matrix& x, std::size_t k, std::uint64_t seed, int max_iterations = 100) {
  const auto n = static_cast<std::size_t>(x.rows());
  require(k >= 1 && k <= n, ErrorCode::InvalidArgument, "k-means needs 1 <= k <= number of points");
  Rng rng(seed);
  KMeansResult res;
  res.centroids.resize(static_cast<Eigen::Index>(k), x.cols());
  std::vector<bool> chosen(n, false);
  std::size_t first = static_cast<std::size_t>(uniform_index(rng, n));
  chosen[first] = true;
  res.centroids.row(0) = x.row(static_cast<Eigen::Index>(first));
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = (x.row(static_cast<Eigen::Index>(i)) - res.centroids.row(0)).squaredNorm();
  for (std::size_t c = 1; c < k; ++c) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = n;
    if (total > 0.0) {
      double target = uniform01(rng) * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        pick = i;
        target -= d2[i];
        if (target < 0.0) break;
      }
    } else {
      std::vector<std::size_t> remaining;
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) remaining.push_back(i);
      }
      pick = remaining[static_cast<std::size_t>(uniform_index(rng, remaining.size()))];
    }
    chosen[pick] = true;
    res.centroids.row(static_cast<Eigen::Index>(c)) = x.row(static_cast<Eigen::Index>(pick));
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (x.row(static_cast<Eigen::Index>(i)) - res.centroids.row(static_cast<Eigen::Index>(c))).squaredNorm());
    }
  }

  res.assignment.assign(n, 0);
  for (res.iterations = 0; res.iterations < max_iterations; ++res.iterations) {
    const Matrix dist = squared_distances(x, res.centroids);
    bool changed = res.iterations == 0;
    for (std::size_t i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      for (Eigen::Index c = 1; c < dist.cols(); ++c) {
        if (dist(static_cast<Eigen::Index>(i), c) < dist(static_cast<Eigen::Index>(i), best)) best = c;
      }
      if (res.assignment[i] != static_cast<std::size_t>(best)) changed = true;
      res.assignment[i] = static_cast<std::size_t>(best);
    }
    if (!changed) break;
    Matrix sums = Matrix::Zero(res.centroids.rows(), x.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(static_cast<Eigen::Index>(res.assignment[i])) += x.row(static_cast<Eigen::Index>(i));
      ++counts[res.assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) res.centroids.row(static_cast<Eigen::Index>(c)) = sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(counts[c]);
    }
  }
  res.objective = kmeans_objective(x, res.centroids, res.assignment);
  return res;
}

/// Clusters the pool into n_representatives groups and returns, per non-empty
/// cluster, the position of the member nearest its centroid. Any deficit from
/// empty clusters is filled with the next-nearest members of the largest
/// clusters. Positions index rows of `unlabelled_x`.
inline IndexList representative_sampling(const Matrix& unlabelled_x, std::size_t n_representatives, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(unlabelled_x.rows());
  require(n_representatives >= 1 && n_representatives <= n, ErrorCode::InvalidArgument,
          "n_representatives must lie in [1, pool size]");
  const KMeansResult km = kmeans(unlabelled_x, n_representatives, seed);

  // Members of each cluster ordered by distance to its centroid, then index.
  std::vector<IndexList> members(n_representatives);
  for (std::size_t i = 0; i < n; ++i) members[km.assignment[i]].push_back(i);
  for (std::size_t c = 0; c < n_representatives; ++c) {
    const auto centroid = km.centroids.row(static_cast<Eigen::Index>(c));
    std::vector<std::pair<double, std::size_t>> keyed;
    for (auto i : members[c]) keyed.emplace_back((unlabelled_x.row(static_cast<Eigen::Index>(i)) - centroid).squaredNorm(), i);
    std::sort(keyed.begin(), keyed.end());
    for (std::size_t r = 0; r < keyed.size(); ++r) members[c][r] = keyed[r].second;
  }

  IndexList out;
  for (const auto& m : members) {
    if (!m.empty()) out.push_back(m.front());
  }
  if (out.size() < n_representatives) {
    std::vector<std::size_t> by_size(n_representatives);
    std::iota(by_size.begin(), by_size.end(), std::size_t{0});
    std::stable_sort(by_size.begin(), by_size.end(),
                     [&](std::size_t a, std::size_t b) { return members[a].size() > members[b].size(); });
    for (auto c : by_size) {
      for (std::size_t r = 1; r < members[c].size() && out.size() < n_representatives; ++r) out.push_back(members[c][r]);
      if (out.size() == n_representatives) break;
    }
  }
  return out;
}

}  // namespace poolal
