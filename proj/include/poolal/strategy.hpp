#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "poolal/data_manager.hpp"
#include "poolal/informativeness.hpp"
#include "poolal/model/model_manager.hpp"

namespace poolal {

enum class Measure {
  Entropy,
  LeastConfidence,
  MarginConfidence,
  RatioConfidence,
  Greedy,
  Ucb,
  ExpectedImprovement,
  Bald,
  ThompsonSampling,
  RelativeDistance,
};

struct MeasureInfo {
  Measure measure;
  std::string_view id;
  std::string_view task;  // "classification", "regression" or "both"
  std::string_view summary;
};

inline constexpr MeasureInfo kMeasures[] = {
    {Measure::Entropy, "entropy", "classification", "-sum p log p of the predicted class distribution"},
    {Measure::LeastConfidence, "least_confidence", "both",
     "1 - max p for classification; predictive variance for regression"},
    {Measure::MarginConfidence, "margin", "classification", "1 - (p(top) - p(second))"},
    {Measure::RatioConfidence, "ratio", "classification", "p(second) / p(top)"},
    {Measure::Greedy, "greedy", "regression", "predictive mean"},
    {Measure::Ucb, "ucb", "regression", "mean + lambda * sqrt(variance)"},
    {Measure::ExpectedImprovement, "expected_improvement", "regression",
     "E[max(Y - best revealed label, 0)] under a Gaussian predictive"},
    {Measure::Bald, "bald", "both",
     "ensemble mutual information for classification; Gaussian predictive entropy for regression"},
    {Measure::ThompsonSampling, "thompson", "regression", "predictions of one uniformly drawn ensemble member"},
    {Measure::RelativeDistance, "relative_distance", "both", "distance to the nearest labelled point"},
};

inline std::string_view measure_id(Measure m) {
  for (const auto& info : kMeasures) {
    if (info.measure == m) return info.id;
  }
  return "unknown";
}

inline std::optional<Measure> parse_measure(std::string_view id) {
  for (const auto& info : kMeasures) {
    if (info.id == id) return info.measure;
  }
  return std::nullopt;
}

struct MeasureParams {
  double lambda = 1.0;  // ucb trade-off
};

struct StrategyConfig {
  enum class Kind { Random, TopM, EpsilonGreedy, Representative };

  Kind kind = Kind::Random;
  Measure measure = Measure::Greedy;
  MeasureParams params;
  double eps = 0.0;
  std::uint64_t rng_seed = 0;

  static StrategyConfig random(std::uint64_t seed = 0) { return {Kind::Random, Measure::Greedy, {}, 0.0, seed}; }
  static StrategyConfig top_m(Measure m, MeasureParams p = {}, std::uint64_t seed = 0) {
    return {Kind::TopM, m, p, 0.0, seed};
  }
  static StrategyConfig epsilon_greedy(double eps, Measure m = Measure::Greedy, std::uint64_t seed = 0) {
    return {Kind::EpsilonGreedy, m, {}, eps, seed};
  }
  static StrategyConfig representative(std::uint64_t seed = 0) {
    return {Kind::Representative, Measure::Greedy, {}, 0.0, seed};
  }

  [[nodiscard]] bool needs_model() const {
    if (kind == Kind::Random || kind == Kind::Representative) return false;
    return measure != Measure::RelativeDistance;
  }

  [[nodiscard]] std::string label() const {
    switch (kind) {
      case Kind::Random: return "random";
      case Kind::Representative: return "representative";
      case Kind::TopM: return std::string(measure_id(measure));
      case Kind::EpsilonGreedy: return "epsilon_greedy(" + std::string(measure_id(measure)) + ")";
    }
    return "unknown";
  }
};

/// Q_k: dataset indices chosen at iteration k, all drawn from the pool.
struct QuerySet {
  IndexList indices;
  std::size_t iteration = 0;
};

namespace detail {

inline void require_pool(const IndexList& unlabelled, std::size_t m) {
  require(!unlabelled.empty(), ErrorCode::EmptyPool, "unlabelled pool is empty");
  require(m >= 1, ErrorCode::InvalidArgument, "query size m must be >= 1");
}

/// Pool positions sorted by descending score, ties by lower dataset index.
inline std::vector<std::size_t> rank_positions(const ScoreVector& scores, const IndexList& unlabelled) {
  require(static_cast<std::size_t>(scores.size()) == unlabelled.size(), ErrorCode::InvalidArgument,
          "score vector length differs from pool size");
  require(scores.allFinite(), ErrorCode::NonFiniteInput, "non-finite informativeness score");
  std::vector<std::size_t> order(unlabelled.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double sa = scores[static_cast<Eigen::Index>(a)];
    const double sb = scores[static_cast<Eigen::Index>(b)];
    if (sa != sb) return sa > sb;
    return unlabelled[a] < unlabelled[b];
  });
  return order;
}

}  // namespace detail

/// The m highest-scoring pool indices (whole pool if m exceeds it).
inline QuerySet select_top_m(const ScoreVector& scores, const IndexList& unlabelled, std::size_t m,
                             std::size_t iteration = 0) {
  detail::require_pool(unlabelled, m);
  const auto order = detail::rank_positions(scores, unlabelled);
  QuerySet q{{}, iteration};
  for (std::size_t r = 0; r < std::min(m, order.size()); ++r) q.indices.push_back(unlabelled[order[r]]);
  return q;
}

/// m uniform draws without replacement (partial Fisher-Yates).
inline QuerySet select_random(const IndexList& unlabelled, std::size_t m, std::uint64_t seed, std::size_t iteration = 0) {
  detail::require_pool(unlabelled, m);
  IndexList pool = unlabelled;
  Rng rng(seed);
  const std::size_t take = std::min(m, pool.size());
  for (std::size_t i = 0; i < take; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_index(rng, pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  return QuerySet{std::move(pool), iteration};
}

/// Number of greedy picks out of m: floor((1 - eps) m). The slack keeps
/// products such as (1 - 0.9) * 10 from rounding down to the wrong integer.
inline std::size_t greedy_count(double eps, std::size_t m) {
  const double exact = (1.0 - eps) * static_cast<double>(m);
  return std::min(m, static_cast<std::size_t>(std::floor(exact + 1e-9)));
}

/// floor((1 - eps) m') top-score picks followed by random picks from the
/// remaining pool, where m' = min(m, pool size).
inline QuerySet select_epsilon_greedy(const ScoreVector& scores, const IndexList& unlabelled, std::size_t m, double eps,
                                      std::uint64_t seed, std::size_t iteration = 0) {
  require(eps >= 0.0 && eps <= 1.0, ErrorCode::InvalidArgument, "eps must lie in [0, 1]");
  detail::require_pool(unlabelled, m);
  const std::size_t total = std::min(m, unlabelled.size());
  const std::size_t greedy = greedy_count(eps, total);
  QuerySet q{{}, iteration};
  if (greedy > 0) q = select_top_m(scores, unlabelled, greedy, iteration);
  if (greedy == total) return q;
  const std::set<std::size_t> taken(q.indices.begin(), q.indices.end());
  IndexList remaining;
  for (auto i : unlabelled) {
    if (taken.count(i) == 0) remaining.push_back(i);
  }
  const auto rnd = select_random(remaining, total - greedy, seed, iteration);
  q.indices.insert(q.indices.end(), rnd.indices.begin(), rnd.indices.end());
  return q;
}

/// Evaluates `measure` on the pool. `posterior` may be null for measures that
/// need no model (relative distance).
inline ScoreVector compute_scores(Measure measure, const MeasureParams& params, const Posterior* posterior,
                                  const SubsetViews& views, std::uint64_t seed) {
  if (measure == Measure::RelativeDistance) return relative_distance(views.unlabelled_x, views.labelled_x);
  require(posterior != nullptr, ErrorCode::InvalidArgument, "measure needs a model posterior");
  const auto* cls = std::get_if<ClassPosterior>(posterior);
  const auto* reg = std::get_if<RegressionPosterior>(posterior);
  auto need_class = [&]() -> const ClassPosterior& {
    require(cls != nullptr, ErrorCode::InvalidArgument, std::string(measure_id(measure)) + " needs a class posterior");
    return *cls;
  };
  auto need_reg = [&]() -> const RegressionPosterior& {
    require(reg != nullptr, ErrorCode::InvalidArgument,
            std::string(measure_id(measure)) + " needs a regression posterior");
    return *reg;
  };
  switch (measure) {
    case Measure::Entropy: return entropy(need_class());
    case Measure::MarginConfidence: return margin_confidence(need_class());
    case Measure::RatioConfidence: return ratio_confidence(need_class());
    case Measure::LeastConfidence: return cls != nullptr ? least_confidence(*cls) : least_confidence(need_reg());
    case Measure::Bald: return cls != nullptr ? bald(*cls) : bald(need_reg());
    case Measure::Greedy: return greedy_score(need_reg());
    case Measure::Ucb: return ucb(need_reg(), params.lambda);
    case Measure::ExpectedImprovement: {
      require(views.labelled_y.size() > 0, ErrorCode::EmptyLabelledSet, "expected improvement needs labels");
      return expected_improvement(need_reg(), views.labelled_y.maxCoeff());
    }
    case Measure::ThompsonSampling: return thompson_sampling(need_reg(), seed);
    case Measure::RelativeDistance: break;
  }
  fail(ErrorCode::InvalidArgument, "unhandled measure");
}

/// Proposes Q_k for the current pool. `fitted` is the model trained on the
/// current labelled set; when null and the strategy needs one, it is trained
/// here with `model_seed`. Random and representative strategies never train.
inline QuerySet run_strategy(const StrategyConfig& cfg, const DataManager& mgr, const ModelManager& model, std::size_t m,
                             std::size_t iteration = 0, std::shared_ptr<const Predictor> fitted = nullptr,
                             std::uint64_t model_seed = 0) {
  require(!mgr.unlabelled().empty(), ErrorCode::PoolExhausted, "no unlabelled points left");
  require(m >= 1, ErrorCode::InvalidArgument, "query size m must be >= 1");
  const std::uint64_t seed = derive_seed({cfg.rng_seed, static_cast<std::uint64_t>(iteration)});
  const IndexList& pool = mgr.unlabelled();

  if (cfg.kind == StrategyConfig::Kind::Random) return select_random(pool, m, seed, iteration);

  const SubsetViews views = mgr.subset_views();
  if (cfg.kind == StrategyConfig::Kind::Representative) {
    const auto positions = representative_sampling(views.unlabelled_x, std::min(m, pool.size()), seed);
    QuerySet q{{}, iteration};
    for (auto p : positions) q.indices.push_back(pool[p]);
    return q;
  }

  std::optional<Posterior> posterior;
  if (cfg.needs_model()) {
    if (!fitted) fitted = model.fit(views.labelled_x, views.labelled_y, model_seed);
    posterior = fitted->predict(views.unlabelled_x);
  }
  const ScoreVector scores =
      compute_scores(cfg.measure, cfg.params, posterior ? &*posterior : nullptr, views, derive_seed({seed, 1}));
  if (cfg.kind == StrategyConfig::Kind::EpsilonGreedy) {
    return select_epsilon_greedy(scores, pool, m, cfg.eps, derive_seed({seed, 2}), iteration);
  }
  return select_top_m(scores, pool, m, iteration);
}

}  // namespace poolal
