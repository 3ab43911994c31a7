#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace poolal {

struct LbfgsOptions {
  int max_iterations = 200;
  int memory = 8;
  double gradient_tolerance = 1e-6;
  double relative_tolerance = 1e-10;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Box-constrained limited-memory BFGS minimiser. Trial points are projected
/// onto the box; the Armijo condition is checked against the projected step.
/// The objective returns nullopt where it cannot be evaluated, which the line
/// search treats as a rejected trial. Returns nullopt if x0 itself fails.
template <typename Objective>
std::optional<LbfgsResult> minimize_box(Objective&& objective, Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                                        const Eigen::VectorXd& upper, const LbfgsOptions& options = {}) {
  using Eigen::VectorXd;
  const Eigen::Index n = x0.size();
  x0 = x0.cwiseMax(lower).cwiseMin(upper);
  VectorXd g(n);
  const auto f0 = objective(x0, g);
  if (!f0 || !std::isfinite(*f0) || !g.allFinite()) return std::nullopt;

  auto projected_gradient = [&](const VectorXd& x, const VectorXd& grad) {
    VectorXd pg = grad;
    for (Eigen::Index i = 0; i < n; ++i) {
      if ((x[i] <= lower[i] && grad[i] > 0.0) || (x[i] >= upper[i] && grad[i] < 0.0)) pg[i] = 0.0;
    }
    return pg;
  };

  LbfgsResult res{x0, *f0, 0, false};
  std::deque<std::pair<VectorXd, VectorXd>> history;  // (s, y)
  VectorXd g_new(n);

  for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
    const VectorXd pg = projected_gradient(res.x, g);
    if (pg.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) {
      res.converged = true;
      break;
    }

    // Two-loop recursion on the projected gradient.
    VectorXd q = pg;
    std::vector<double> alpha(history.size());
    for (std::size_t i = history.size(); i-- > 0;) {
      const auto& [s, y] = history[i];
      alpha[i] = s.dot(q) / y.dot(s);
      q -= alpha[i] * y;
    }
    if (!history.empty()) {
      const auto& [s, y] = history.back();
      q *= s.dot(y) / y.squaredNorm();
    }
    for (std::size_t i = 0; i < history.size(); ++i) {
      const auto& [s, y] = history[i];
      const double beta = y.dot(q) / y.dot(s);
      q += s * (alpha[i] - beta);
    }
    VectorXd d = -q;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (pg[i] == 0.0) d[i] = 0.0;
    }
    if (d.dot(pg) >= 0.0) {
      history.clear();
      d = -pg;
    }

    double step = history.empty() ? std::min(1.0, 1.0 / pg.lpNorm<Eigen::Infinity>()) : 1.0;
    bool accepted = false;
    VectorXd x_new;
    double f_new = 0.0;
    for (int trial = 0; trial < 40; ++trial, step *= 0.5) {
      x_new = (res.x + step * d).cwiseMax(lower).cwiseMin(upper);
      const auto f = objective(x_new, g_new);
      if (f && std::isfinite(*f) && g_new.allFinite() && *f <= res.value + 1e-4 * g.dot(x_new - res.x)) {
        f_new = *f;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;

    const VectorXd s = x_new - res.x;
    const VectorXd y = g_new - g;
    const double previous = res.value;
    res.x = x_new;
    res.value = f_new;
    g = g_new;
    if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
      history.emplace_back(s, y);
      if (static_cast<int>(history.size()) > options.memory) history.pop_front();
    }
    if (std::abs(previous - f_new) <= options.relative_tolerance * std::max(1.0, std::abs(f_new))) {
      res.converged = true;
      ++res.iterations;
      break;
    }
  }
  return res;
}

}  // namespace poolal
