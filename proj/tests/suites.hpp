#pragma once

// Randomised oracle and property suites. Each returns an AssertionResult whose
// message summarises the worst deviation, so the same code backs both the
// unit tests and the acceptance report.

#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "poolal/benchmark.hpp"
#include "poolal/pipeline.hpp"
#include "poolal/strategy.hpp"
#include "test_support.hpp"

namespace poolal::suites {

using ::testing::AssertionFailure;
using ::testing::AssertionResult;
using ::testing::AssertionSuccess;
using poolal::testing::random_matrix;
using poolal::testing::random_simplex_rows;

inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

class Stopwatch {
 public:
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// ---------------------------------------------------------------------------
// GP regression against the dense-inverse oracle.

inline AssertionResult gpr_dense_oracle(int problems, double tol) {
  double worst = 0.0;
  for (int p = 0; p < problems; ++p) {
    Rng rng(derive_seed({101, static_cast<std::uint64_t>(p)}));
    const auto n = static_cast<Eigen::Index>(1 + uniform_index(rng, 20));
    const auto d = static_cast<Eigen::Index>(1 + uniform_index(rng, 5));
    const Matrix x = random_matrix(rng, n, d, -1, 1);
    const Vector y = random_matrix(rng, n, 1, -2, 2);
    const Matrix q = random_matrix(rng, 10, d, -1.5, 1.5);
    const GpHyperparams hp{0.2 + 1.5 * uniform01(rng), 0.3 + 2.0 * uniform01(rng), 0.01 + 0.3 * uniform01(rng)};
    HyperoptOptions fixed;
    fixed.optimize = false;
    const auto post = GpRegressor::fit(x, y, hp, fixed).predict(q);
    const auto ref = oracle::dense_gp(x, y, q, hp.lengthscale, hp.signal_variance, hp.noise_variance);
    const double err = std::max((post.mean - ref.mean).cwiseAbs().maxCoeff(),
                                (post.variance - ref.variance.cwiseMax(0.0)).cwiseAbs().maxCoeff());
    worst = std::max(worst, err);
    if (!(err <= tol)) return AssertionFailure() << "problem " << p << " (n=" << n << ", d=" << d << ") error " << err;
  }
  return AssertionSuccess() << problems << " problems, max abs error " << sci(worst);
}

// ---------------------------------------------------------------------------
// Marginal-likelihood gradients against central differences.

inline double relative_error(const Vector& a, const Vector& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-8);
}

inline AssertionResult gpr_gradient_check(int points, double tol) {
  double worst = 0.0;
  for (int p = 0; p < points; ++p) {
    Rng rng(derive_seed({202, static_cast<std::uint64_t>(p)}));
    const Matrix x = random_matrix(rng, 15, 2, -1, 1);
    const Vector y = random_matrix(rng, 15, 1, -1, 1);
    const Matrix sq = squared_distances(x, x);
    const Vector t = (Vector(3) << std::log(0.1) + 3.0 * uniform01(rng), std::log(0.2) + 3.0 * uniform01(rng),
                      std::log(0.005) + 3.0 * uniform01(rng))
                         .finished();
    auto hp_of = [](const Vector& v) { return GpHyperparams{std::exp(v[0]), std::exp(v[1]), std::exp(v[2])}; };
    Vector g;
    (void)gp_log_marginal_likelihood(sq, y, hp_of(t), &g);
    const Vector fd = oracle::central_difference([&](const Vector& v) { return *gp_log_marginal_likelihood(sq, y, hp_of(v)); }, t);
    const double err = relative_error(g, fd);
    worst = std::max(worst, err);
    if (!(err < tol)) return AssertionFailure() << "GPR point " << p << " relative error " << err;
  }
  return AssertionSuccess() << points << " GPR points, max relative error " << sci(worst);
}

inline AssertionResult gpc_gradient_check(int points, double tol) {
  double worst = 0.0;
  const NewtonOptions tight{1e-12, 500};
  for (int p = 0; p < points; ++p) {
    Rng rng(derive_seed({303, static_cast<std::uint64_t>(p)}));
    const auto ds = generate_checkerboard(20, 2, derive_seed({304, static_cast<std::uint64_t>(p)}));
    Vector y(ds.targets().size());
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = ds.targets()[i] > 0.5 ? 1.0 : -1.0;
    const Matrix sq = squared_distances(ds.features(), ds.features());
    const Vector t = (Vector(2) << std::log(0.1) + 2.5 * uniform01(rng), std::log(0.3) + 3.0 * uniform01(rng)).finished();
    auto hp_of = [](const Vector& v) { return GpHyperparams{std::exp(v[0]), std::exp(v[1]), 1e-2}; };
    const Matrix k = rbf_from_distances(sq, hp_of(t));
    const Vector g = laplace_evidence_gradient(k, sq, hp_of(t), laplace_mode(k, y, tight));
    const Vector fd = oracle::central_difference(
        [&](const Vector& v) { return laplace_mode(rbf_from_distances(sq, hp_of(v)), y, tight).log_evidence; }, t);
    const double err = relative_error(g, fd);
    worst = std::max(worst, err);
    if (!(err < tol)) return AssertionFailure() << "GPC point " << p << " relative error " << err;
  }
  return AssertionSuccess() << points << " GPC points, max relative error " << sci(worst);
}

// ---------------------------------------------------------------------------
// Informativeness measures against direct-formula oracles.

struct MeasureReport {
  std::map<std::string, int> instances;
  std::map<std::string, double> worst;
};

inline AssertionResult check_close(MeasureReport& report, const std::string& name, const ScoreVector& got,
                                   const std::vector<double>& want, double tol) {
  ++report.instances[name];
  if (static_cast<std::size_t>(got.size()) != want.size()) return AssertionFailure() << name << ": length mismatch";
  for (std::size_t i = 0; i < want.size(); ++i) {
    const double err = std::abs(got[static_cast<Eigen::Index>(i)] - want[i]);
    report.worst[name] = std::max(report.worst[name], err);
    if (!(err <= tol)) return AssertionFailure() << name << ": point " << i << " got " << got[static_cast<Eigen::Index>(i)] << " want " << want[i];
  }
  return AssertionSuccess();
}

#define POOLAL_SUITE_CHECK(expr)        \
  do {                                  \
    auto poolal_result_ = (expr);       \
    if (!poolal_result_) return poolal_result_; \
  } while (false)

inline AssertionResult informativeness_oracles(int instances) {
  MeasureReport rep;
  for (int inst = 0; inst < instances; ++inst) {
    Rng rng(derive_seed({404, static_cast<std::uint64_t>(inst)}));
    const auto n = static_cast<Eigen::Index>(5 + uniform_index(rng, 20));
    const auto k = static_cast<Eigen::Index>(2 + uniform_index(rng, 5));

    // Classification measures on random simplex rows, one exact zero per instance.
    ClassPosterior cls;
    cls.probs = random_simplex_rows(rng, n, k);
    cls.probs.row(0).setZero();
    cls.probs(0, static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(k)))) = 1.0;
    std::vector<double> ent, lc, margin, ratio;
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto p = oracle::row(cls.probs, r);
      const auto [top, second] = oracle::top_two(p);
      ent.push_back(oracle::entropy(p));
      lc.push_back(1.0 - top);
      margin.push_back(1.0 - (top - second));
      ratio.push_back(second / top);
    }
    POOLAL_SUITE_CHECK(check_close(rep, "entropy", entropy(cls), ent, 1e-12));
    POOLAL_SUITE_CHECK(check_close(rep, "least_confidence(cls)", least_confidence(cls), lc, 1e-12));
    POOLAL_SUITE_CHECK(check_close(rep, "margin", margin_confidence(cls), margin, 1e-12));
    POOLAL_SUITE_CHECK(check_close(rep, "ratio", ratio_confidence(cls), ratio, 1e-12));

    // Ensemble classification BALD.
    const auto members = static_cast<std::size_t>(2 + uniform_index(rng, 5));
    std::vector<Matrix> member_probs;
    for (std::size_t m = 0; m < members; ++m) member_probs.push_back(random_simplex_rows(rng, n, k));
    const ClassPosterior ens = class_posterior_from_members(member_probs);
    std::vector<double> mi;
    for (Eigen::Index r = 0; r < n; ++r) {
      std::vector<double> avg(static_cast<std::size_t>(k), 0.0);
      double mean_h = 0.0;
      for (const auto& mp : member_probs) {
        const auto p = oracle::row(mp, r);
        for (std::size_t c = 0; c < p.size(); ++c) avg[c] += p[c] / static_cast<double>(members);
        mean_h += oracle::entropy(p) / static_cast<double>(members);
      }
      mi.push_back(oracle::entropy(avg) - mean_h);
    }
    const ScoreVector bald_cls = bald(ens);
    POOLAL_SUITE_CHECK(check_close(rep, "bald(cls)", bald_cls, mi, 1e-12));
    if (bald_cls.minCoeff() < -1e-9) return AssertionFailure() << "negative mutual information";

    // Regression measures from a member-prediction matrix.
    const Matrix preds = random_matrix(rng, static_cast<Eigen::Index>(members), n, -3, 3);
    const RegressionPosterior reg = regression_posterior_from_members(preds);
    std::vector<double> mean, var, ucb_ref, bald_ref;
    const double lambda = 3.0 * uniform01(rng);
    for (Eigen::Index p = 0; p < n; ++p) {
      std::vector<double> col;
      for (Eigen::Index m = 0; m < preds.rows(); ++m) col.push_back(preds(m, p));
      mean.push_back(oracle::mean(col));
      var.push_back(oracle::population_variance(col));
      ucb_ref.push_back(mean.back() + lambda * std::sqrt(var.back()));
      bald_ref.push_back(0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * var.back()));
    }
    POOLAL_SUITE_CHECK(check_close(rep, "least_confidence(reg)", least_confidence(reg), var, 1e-12));
    POOLAL_SUITE_CHECK(check_close(rep, "greedy", greedy_score(reg), mean, 1e-12));
    POOLAL_SUITE_CHECK(check_close(rep, "ucb", ucb(reg, lambda), ucb_ref, 1e-12));
    POOLAL_SUITE_CHECK(check_close(rep, "bald(reg)", bald(reg), bald_ref, 1e-12));

    // Thompson: the scores are exactly one member's row.
    const ScoreVector ts = thompson_sampling(reg, derive_seed({405, static_cast<std::uint64_t>(inst)}));
    bool matched = false;
    for (Eigen::Index m = 0; m < preds.rows(); ++m) matched = matched || ts == preds.row(m).transpose();
    ++rep.instances["thompson"];
    if (!matched) return AssertionFailure() << "thompson scores are not a member row";

    // Expected improvement against Monte Carlo.
    RegressionPosterior one;
    one.mean = Vector::Constant(1, -1.0 + 2.0 * uniform01(rng));
    const double sigma = 0.2 + 1.3 * uniform01(rng);
    one.variance = Vector::Constant(1, sigma * sigma);
    const double best = -1.0 + 2.0 * uniform01(rng);
    const double mc = oracle::monte_carlo_ei(one.mean[0], sigma, best, 1000000, derive_seed({406, static_cast<std::uint64_t>(inst)}));
    POOLAL_SUITE_CHECK(check_close(rep, "expected_improvement", expected_improvement(one, best), {mc}, 1e-2));

    // Relative distance against the pairwise scan.
    const Matrix u = random_matrix(rng, 40, 3, -1, 1);
    const Matrix l = random_matrix(rng, 10, 3, -1, 1);
    POOLAL_SUITE_CHECK(check_close(rep, "relative_distance", relative_distance(u, l), oracle::min_distances(u, l), 1e-12));

    // k-means descent against a random assignment.
    const Matrix pts = random_matrix(rng, 60, 2, 0, 1);
    const std::size_t clusters = 2 + static_cast<std::size_t>(uniform_index(rng, 6));
    const KMeansResult km = kmeans(pts, clusters, derive_seed({407, static_cast<std::uint64_t>(inst)}));
    std::vector<std::size_t> random_assign(60);
    Matrix sums = Matrix::Zero(static_cast<Eigen::Index>(clusters), 2);
    std::vector<double> counts(clusters, 0.0);
    for (std::size_t i = 0; i < 60; ++i) {
      random_assign[i] = static_cast<std::size_t>(uniform_index(rng, clusters));
      sums.row(static_cast<Eigen::Index>(random_assign[i])) += pts.row(static_cast<Eigen::Index>(i));
      counts[random_assign[i]] += 1.0;
    }
    for (std::size_t c = 0; c < clusters; ++c) {
      if (counts[c] > 0) sums.row(static_cast<Eigen::Index>(c)) /= counts[c];
    }
    ++rep.instances["kmeans"];
    if (km.objective > oracle::kmeans_objective(pts, sums, random_assign) + 1e-12) {
      return AssertionFailure() << "k-means objective above random assignment on instance " << inst;
    }
    const IndexList reps = representative_sampling(pts, clusters, derive_seed({408, static_cast<std::uint64_t>(inst)}));
    ++rep.instances["representative"];
    if (reps.size() != clusters || std::set<std::size_t>(reps.begin(), reps.end()).size() != clusters) {
      return AssertionFailure() << "representative sampling returned " << reps.size() << " positions, expected " << clusters;
    }
  }

  // Thompson member draws are uniform: 10^4 seeds over four members.
  const Matrix four = (Matrix(4, 1) << 0, 1, 2, 3).finished();
  const RegressionPosterior tp = regression_posterior_from_members(four);
  std::vector<int> hits(4, 0);
  for (std::uint64_t s = 0; s < 10000; ++s) ++hits[static_cast<std::size_t>(thompson_sampling(tp, s)[0])];
  for (int h : hits) {
    if (std::abs(h - 2500) > 150) return AssertionFailure() << "thompson draw counts not uniform: " << h;
  }

  std::ostringstream msg;
  for (const auto& [name, count] : rep.instances) {
    if (count < instances) return AssertionFailure() << name << " checked on only " << count << " instances";
    if (msg.tellp() > 0) msg << "; ";
    msg << name << "=" << count;
    if (rep.worst.count(name) != 0) msg << " (max err " << sci(rep.worst.at(name)) << ")";
  }
  return AssertionSuccess() << msg.str();
}

// ---------------------------------------------------------------------------
// BALD and least confidence choose the same point on Gaussian predictives.

inline AssertionResult bald_variance_argmax(int posteriors) {
  for (int p = 0; p < posteriors; ++p) {
    Rng rng(derive_seed({505, static_cast<std::uint64_t>(p)}));
    const auto n = static_cast<Eigen::Index>(2 + uniform_index(rng, 50));
    RegressionPosterior post;
    post.mean = random_matrix(rng, n, 1, -5, 5);
    post.variance = random_matrix(rng, n, 1, 1e-6, 10.0);
    if (p % 4 == 0) post.variance = post.variance.array().square().matrix();  // wider dynamic range
    Eigen::Index a = 0, b = 0;
    bald(post).maxCoeff(&a);
    least_confidence(post).maxCoeff(&b);
    if (a != b) return AssertionFailure() << "posterior " << p << ": argmax bald " << a << " vs variance " << b;
    const IndexList pool = poolal::testing::all_indices(static_cast<std::size_t>(n));
    if (select_top_m(bald(post), pool, 1).indices != select_top_m(least_confidence(post), pool, 1).indices) {
      return AssertionFailure() << "posterior " << p << ": top-1 selections differ";
    }
  }
  return AssertionSuccess() << posteriors << " posteriors, identical argmax";
}

// ---------------------------------------------------------------------------
// Pipeline bookkeeping.

inline bool same_log(const RunLog& a, const RunLog& b) {
  if (a.iterations.size() != b.iterations.size()) return false;
  for (std::size_t i = 0; i < a.iterations.size(); ++i) {
    const auto& x = a.iterations[i];
    const auto& y = b.iterations[i];
    if (x.k != y.k || x.query_indices != y.query_indices || x.labelled_count != y.labelled_count ||
        x.metrics.values != y.metrics.values) {
      return false;
    }
  }
  return true;
}

struct PipelineCase {
  std::shared_ptr<const Dataset> dataset;
  SplitIndices split;
  IndexList initial;
  std::shared_ptr<const ModelManager> model;
  StrategyConfig strategy;
  std::size_t m = 1;
  std::optional<std::size_t> budget;
  std::uint64_t model_seed = 0;
};

inline PipelineCase random_pipeline_case(std::uint64_t seed) {
  Rng rng(seed);
  PipelineCase c;
  const bool classification = uniform01(rng) < 0.5;
  const std::size_t n = 12 + static_cast<std::size_t>(uniform_index(rng, 25));
  HyperoptOptions fixed;
  fixed.optimize = false;
  TaskConfig start;
  start.rng_seed = derive_seed({seed, 1});
  start.start_mode = uniform01(rng) < 0.5 ? StartMode::ColdStart : StartMode::WarmStart;
  start.warm_fraction = 0.1 + 0.3 * uniform01(rng);
  if (classification) {
    const std::size_t k = 2 + static_cast<std::size_t>(uniform_index(rng, 2));
    c.dataset = std::make_shared<const Dataset>(generate_gaussian_clouds(n, k, 1.5, derive_seed({seed, 2})));
    c.split = split(*c.dataset, 0.6, 0.1, 0.3, derive_seed({seed, 3}), true);
    // Logistic tolerates single-class warm starts; the GP classifier gets a
    // cold start so every class is labelled from the outset.
    if (uniform01(rng) < 0.5) {
      start.start_mode = StartMode::ColdStart;
      c.model = std::make_shared<GpClassifierManager>(k, GpHyperparams{}, fixed);
    } else if (uniform01(rng) < 0.5) {
      c.model = std::make_shared<LogisticManager>(k, LogisticOptions{40, 0.5, 1e-3});
    } else {
      c.model = std::make_shared<EnsembleManager>(std::make_shared<LogisticManager>(k, LogisticOptions{30, 0.5, 1e-3}),
                                                  EnsembleOptions{3, false});
    }
    const Measure measures[] = {Measure::Entropy, Measure::LeastConfidence, Measure::MarginConfidence,
                                Measure::RatioConfidence, Measure::RelativeDistance};
    const auto pick = uniform_index(rng, 8);
    if (pick < 5) {
      c.strategy = StrategyConfig::top_m(measures[pick]);
    } else if (pick == 5) {
      c.strategy = StrategyConfig::random();
    } else if (pick == 6) {
      c.strategy = StrategyConfig::representative();
    } else {
      c.strategy = StrategyConfig::epsilon_greedy(uniform01(rng), Measure::Entropy);
    }
  } else {
    c.dataset = std::make_shared<const Dataset>(generate_synth_regression(
        uniform01(rng) < 0.5 ? SynthRegVariant::SynthReg1 : SynthRegVariant::SynthReg2, n, 0.1, derive_seed({seed, 2})));
    c.split = split(*c.dataset, 0.7, 0.0, 0.3, derive_seed({seed, 3}), false);
    const bool ensemble = uniform01(rng) < 0.5;
    if (ensemble) {
      c.model = std::make_shared<EnsembleManager>(std::make_shared<RidgeManager>(), EnsembleOptions{3, false});
    } else {
      c.model = std::make_shared<GpRegressorManager>(GpHyperparams{0.3, 1.0, 1e-2}, fixed);
    }
    std::vector<Measure> measures{Measure::LeastConfidence, Measure::Greedy, Measure::Ucb, Measure::ExpectedImprovement,
                                  Measure::Bald, Measure::RelativeDistance};
    if (ensemble) measures.push_back(Measure::ThompsonSampling);
    const auto pick = uniform_index(rng, measures.size() + 3);
    if (pick < measures.size()) {
      c.strategy = StrategyConfig::top_m(measures[pick], MeasureParams{2.0 * uniform01(rng)});
    } else if (pick == measures.size()) {
      c.strategy = StrategyConfig::random();
    } else if (pick == measures.size() + 1) {
      c.strategy = StrategyConfig::representative();
    } else {
      c.strategy = StrategyConfig::epsilon_greedy(uniform01(rng), Measure::Greedy);
    }
  }
  c.strategy.rng_seed = derive_seed({seed, 4});
  c.initial = initial_labels(*c.dataset, c.split.train, start);
  c.m = 1 + static_cast<std::size_t>(uniform_index(rng, 4));
  if (uniform01(rng) < 0.7) c.budget = static_cast<std::size_t>(uniform_index(rng, 12));
  c.model_seed = derive_seed({seed, 5});
  return c;
}

inline Pipeline make_pipeline(const PipelineCase& c) {
  return Pipeline(DataManager(c.dataset, c.split, c.initial), c.model, c.strategy,
                  std::make_shared<BenchmarkOracle>(c.dataset), c.model_seed);
}

inline AssertionResult check_partition(const DataManager& dm) {
  IndexList all = dm.labelled();
  all.insert(all.end(), dm.unlabelled().begin(), dm.unlabelled().end());
  std::sort(all.begin(), all.end());
  IndexList train = dm.splits().train;
  std::sort(train.begin(), train.end());
  if (all != train) return AssertionFailure() << "labelled + unlabelled differs from train";
  if (std::set<std::size_t>(all.begin(), all.end()).size() != all.size()) return AssertionFailure() << "overlap";
  return AssertionSuccess();
}

inline AssertionResult pipeline_properties(int runs) {
  std::size_t steps = 0;
  for (int r = 0; r < runs; ++r) {
    const auto c = random_pipeline_case(derive_seed({606, static_cast<std::uint64_t>(r)}));
    const std::set<std::size_t> held_out = [&] {
      std::set<std::size_t> s(c.split.test.begin(), c.split.test.end());
      s.insert(c.split.validation.begin(), c.split.validation.end());
      return s;
    }();

    // Manual stepping, checking invariants after every step.
    Pipeline p = make_pipeline(c);
    RunLog manual;
    manual.iterations.push_back(p.baseline());
    const std::size_t pool0 = p.data_manager().unlabelled().size();
    std::size_t consumed = 0;
    for (std::size_t done = 0; !p.data_manager().unlabelled().empty() && (!c.budget || done < *c.budget); ++done) {
      const std::size_t before = p.data_manager().unlabelled().size();
      const auto rec = p.step(c.m);
      ++steps;
      POOLAL_SUITE_CHECK(check_partition(p.data_manager()));
      if (rec.query_indices.size() != std::min(c.m, before)) {
        return AssertionFailure() << "run " << r << ": |Q_k| = " << rec.query_indices.size() << ", expected "
                                  << std::min(c.m, before);
      }
      if (std::set<std::size_t>(rec.query_indices.begin(), rec.query_indices.end()).size() != rec.query_indices.size()) {
        return AssertionFailure() << "run " << r << ": duplicate query index";
      }
      for (auto i : rec.query_indices) {
        if (held_out.count(i) != 0) return AssertionFailure() << "run " << r << ": held-out index " << i << " queried";
      }
      consumed += rec.query_indices.size();
      if (rec.k != manual.iterations.size()) return AssertionFailure() << "run " << r << ": non-consecutive k";
      if (rec.labelled_count <= manual.iterations.back().labelled_count) {
        return AssertionFailure() << "run " << r << ": labelled count not increasing";
      }
      manual.iterations.push_back(rec);
    }
    if (consumed != pool0 - p.data_manager().unlabelled().size()) {
      return AssertionFailure() << "run " << r << ": queried points differ from pool consumption";
    }
    const std::size_t max_steps = (pool0 + c.m - 1) / c.m;
    const std::size_t expected = c.budget ? std::min(*c.budget, max_steps) : max_steps;
    if (manual.iterations.size() != expected + 1) {
      return AssertionFailure() << "run " << r << ": " << manual.iterations.size() - 1 << " steps, expected " << expected;
    }

    // full_run from a fresh state reproduces the log exactly.
    Pipeline fresh = make_pipeline(c);
    const RunLog full = fresh.full_run(c.m, c.budget);
    if (!same_log(manual, full)) return AssertionFailure() << "run " << r << ": full_run differs from manual stepping";
  }
  return AssertionSuccess() << runs << " runs, " << steps << " checked steps";
}

// ---------------------------------------------------------------------------
// Epsilon-greedy composition.

inline AssertionResult epsilon_greedy_composition(int pairs) {
  for (int p = 0; p < pairs; ++p) {
    Rng rng(derive_seed({707, static_cast<std::uint64_t>(p)}));
    const std::size_t m = 1 + static_cast<std::size_t>(uniform_index(rng, 40));
    const std::size_t eps100 = static_cast<std::size_t>(uniform_index(rng, 101));
    const double eps = static_cast<double>(eps100) / 100.0;
    const std::size_t pool_size = m + static_cast<std::size_t>(uniform_index(rng, 40));
    IndexList pool;
    for (std::size_t i = 0, next = 0; i < pool_size; ++i) pool.push_back(next += 1 + uniform_index(rng, 3));
    shuffle(pool, rng);
    const ScoreVector scores = random_matrix(rng, static_cast<Eigen::Index>(pool_size), 1, -1, 1);
    const std::uint64_t seed = derive_seed({708, static_cast<std::uint64_t>(p)});

    const auto q = select_epsilon_greedy(scores, pool, m, eps, seed);
    const std::size_t g = (100 - eps100) * m / 100;  // exact integer floor
    if (greedy_count(eps, m) != g) return AssertionFailure() << "greedy count " << greedy_count(eps, m) << " != " << g;
    if (q.indices.size() != std::min(m, pool_size)) return AssertionFailure() << "total " << q.indices.size();
    if (std::set<std::size_t>(q.indices.begin(), q.indices.end()).size() != q.indices.size()) {
      return AssertionFailure() << "duplicates in pair " << p;
    }
    const IndexList greedy(q.indices.begin(), q.indices.begin() + static_cast<long>(g));
    if (g > 0 && greedy != select_top_m(scores, pool, g).indices) return AssertionFailure() << "greedy part is not top-g";
    for (auto i : q.indices) {
      if (std::find(pool.begin(), pool.end(), i) == pool.end()) return AssertionFailure() << "index outside pool";
    }
    if (select_epsilon_greedy(scores, pool, m, 0.0, seed).indices != select_top_m(scores, pool, m).indices) {
      return AssertionFailure() << "eps=0 differs from top-m in pair " << p;
    }
    if (select_epsilon_greedy(scores, pool, m, 1.0, seed).indices != select_random(pool, m, seed).indices) {
      return AssertionFailure() << "eps=1 differs from random in pair " << p;
    }
  }
  return AssertionSuccess() << pairs << " (eps, m) pairs";
}

// ---------------------------------------------------------------------------
// IPAUC cases and the JSONL round trip.

inline AssertionResult ipauc_cases(double tol) {
  for (int t = 0; t < 20; ++t) {
    Rng rng(derive_seed({808, static_cast<std::uint64_t>(t)}));
    const double c = uniform01(rng);
    std::vector<CurvePoint> curve;
    double k = std::floor(10 * uniform01(rng));
    for (int i = 0; i < 2 + t; ++i) {
      curve.push_back({k, c});
      k += 0.5 + 3.0 * uniform01(rng);
    }
    if (std::abs(ipauc(curve) - c) > tol) return AssertionFailure() << "constant curve " << c << " -> " << ipauc(curve);
  }
  for (int n : {1, 7, 100, 250}) {
    std::vector<CurvePoint> tri;
    for (int i = 0; i <= n; ++i) tri.push_back({static_cast<double>(i), static_cast<double>(i) / n});
    if (std::abs(ipauc(tri) - 0.5) > tol) return AssertionFailure() << "triangle N=" << n << " -> " << ipauc(tri);
  }
  const double hand = ipauc({{0, 0.2}, {1, 0.8}, {2, 0.8}});
  if (std::abs(hand - 0.65) > tol) return AssertionFailure() << "hand trapezoid -> " << hand;
  if (std::abs(hand - oracle::trapezoid_mean({{0, 0.2}, {1, 0.8}, {2, 0.8}})) > tol) return AssertionFailure() << "oracle";
  // Inserting a point on an existing segment leaves the area unchanged.
  const double split_seg = ipauc({{0, 0.2}, {0.25, 0.35}, {1, 0.8}, {2, 0.8}});
  if (std::abs(split_seg - 0.65) > tol) return AssertionFailure() << "on-segment insertion -> " << split_seg;
  try {
    (void)ipauc({{0, 1.0}});
    return AssertionFailure() << "single point accepted";
  } catch (const Error&) {
  }
  return AssertionSuccess() << "constant, triangle, hand trapezoid and insertion cases within " << sci(tol);
}

/// Recomputes every IPAUC from the serialised runs.jsonl and compares the
/// per-strategy mean and std with the harness summary.
inline AssertionResult jsonl_round_trip(const ExperimentSpec& spec, const std::filesystem::path& dir, double tol) {
  const ExperimentResult result = run_experiment(spec);
  write_results(spec, result, dir);
  std::ifstream in(dir / "runs.jsonl");
  std::map<std::string, std::vector<double>> per_strategy;
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    ++lines;
    const auto j = nlohmann::json::parse(line);
    std::vector<std::pair<double, double>> pts;
    for (const auto& it : j.at("iterations")) {
      pts.emplace_back(it.at("k").get<double>(), it.at("metrics").at(result.summary.metric).get<double>());
    }
    per_strategy[j.at("strategy").get<std::string>()].push_back(oracle::trapezoid_mean(pts));
  }
  if (lines != spec.folds * spec.strategies.size()) return AssertionFailure() << lines << " JSONL lines";
  double worst = 0.0;
  for (const auto& s : result.summary.strategies) {
    const auto& v = per_strategy.at(s.name);
    const double mean = oracle::mean(v);
    const double sd = std::sqrt(oracle::population_variance(v));
    worst = std::max({worst, std::abs(mean - s.mean), std::abs(sd - s.std)});
  }
  if (!(worst <= tol)) return AssertionFailure() << "round-trip deviation " << worst;

  // summary.csv carries the same numbers at six decimals.
  std::ifstream csv(dir / "summary.csv");
  std::getline(csv, line);
  if (line != "strategy,mean_ipauc,std_ipauc") return AssertionFailure() << "bad summary header: " << line;
  std::size_t rows = 0;
  while (std::getline(csv, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    const auto& v = per_strategy.at(line.substr(0, c1));
    const double mean = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
    if (std::abs(mean - oracle::mean(v)) > 5e-7) return AssertionFailure() << "csv mean off for " << line;
    ++rows;
  }
  if (rows != spec.strategies.size()) return AssertionFailure() << rows << " summary rows";
  return AssertionSuccess() << lines << " runs recomputed, max deviation " << sci(worst);
}

#undef POOLAL_SUITE_CHECK

}  // namespace poolal::suites
