#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "poolal/model/lbfgs.hpp"
#include "poolal/random.hpp"

namespace poolal {

/// Multi-restart marginal-likelihood ascent settings, shared by both GPs.
struct HyperoptOptions {
  bool optimize = true;
  int restarts = 3;  // total starts: the initial point plus restarts-1 random draws
  int max_iterations = 200;
  double restart_low = 1e-2;
  double restart_high = 1e2;
  double bound_low = 1e-5;
  double bound_high = 1e5;
  double noise_bound_low = 1e-6;
};

/// Objective over log-parameters: returns the log marginal likelihood and its
/// gradient, or nullopt where the kernel cannot be factorised.
using LogEvidence = std::function<std::optional<double>(const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// Maximises `evidence` from the given start and from log-uniform random
/// starts. Returns the best log-parameters, or nullopt if every start failed.
inline std::optional<Eigen::VectorXd> maximise_evidence(const LogEvidence& evidence, const Eigen::VectorXd& log_init,
                                                        const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                                        const HyperoptOptions& options, std::uint64_t seed) {
  Rng rng(seed);
  const double lo = std::log(options.restart_low);
  const double hi = std::log(options.restart_high);
  std::vector<Eigen::VectorXd> starts{log_init};
  for (int r = 1; r < options.restarts; ++r) {
    Eigen::VectorXd s(log_init.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) s[i] = lo + (hi - lo) * uniform01(rng);
    starts.push_back(s);
  }
  auto negated = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) -> std::optional<double> {
    const auto v = evidence(x, g);
    if (!v) return std::nullopt;
    g = -g;
    return -*v;
  };
  LbfgsOptions lbfgs;
  lbfgs.max_iterations = options.max_iterations;
  std::optional<LbfgsResult> best;
  for (const auto& s : starts) {
    auto res = minimize_box(negated, s, lower, upper, lbfgs);
    if (res && (!best || res->value < best->value)) best = std::move(res);
  }
  if (!best) return std::nullopt;
  return best->x;
}

}  // namespace poolal
