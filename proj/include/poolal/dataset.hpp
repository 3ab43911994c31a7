#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "poolal/error.hpp"
#include "poolal/random.hpp"

namespace poolal {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IndexList = std::vector<std::size_t>;

struct TaskKind {
  enum class Kind { Classification, Regression };

  Kind kind = Kind::Regression;
  std::size_t n_classes = 0;  // zero for regression

  static TaskKind classification(std::size_t k) { return {Kind::Classification, k}; }
  static TaskKind regression() { return {Kind::Regression, 0}; }

  [[nodiscard]] bool is_classification() const noexcept { return kind == Kind::Classification; }
  friend bool operator==(const TaskKind&, const TaskKind&) = default;
};

/// Immutable table of feature rows and targets. Class labels are stored as
/// integral doubles in {0..K-1} so both task kinds share one target vector.
class Dataset {
 public:
  Dataset(std::string name, Matrix features, Vector targets, TaskKind task)
      : name_(std::move(name)), features_(std::move(features)), targets_(std::move(targets)), task_(task) {
    require(features_.rows() == targets_.size(), ErrorCode::InvalidArgument,
            "dataset '" + name_ + "': feature rows and target length differ");
    require(features_.allFinite(), ErrorCode::NonFiniteInput, "dataset '" + name_ + "': non-finite feature");
    require(targets_.allFinite(), ErrorCode::NonFiniteInput, "dataset '" + name_ + "': non-finite target");
    if (task_.is_classification()) {
      require(task_.n_classes >= 2, ErrorCode::InvalidArgument, "classification needs at least two classes");
      for (Eigen::Index i = 0; i < targets_.size(); ++i) {
        const double y = targets_[i];
        require(y >= 0.0 && y < static_cast<double>(task_.n_classes) && y == std::floor(y),
                ErrorCode::LabelOutOfRange, "dataset '" + name_ + "': class label out of range at row " +
                                                std::to_string(i));
      }
    }
  }

  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  [[nodiscard]] const Matrix& features() const noexcept { return features_; }
  [[nodiscard]] const Vector& targets() const noexcept { return targets_; }
  [[nodiscard]] TaskKind task() const noexcept { return task_; }
  [[nodiscard]] std::size_t n_samples() const noexcept { return static_cast<std::size_t>(features_.rows()); }
  [[nodiscard]] std::size_t n_features() const noexcept { return static_cast<std::size_t>(features_.cols()); }

  [[nodiscard]] Matrix rows(const IndexList& idx) const {
    Matrix out(static_cast<Eigen::Index>(idx.size()), features_.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = features_.row(checked(idx[r]));
    return out;
  }

  [[nodiscard]] Vector targets_at(const IndexList& idx) const {
    Vector out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) out[static_cast<Eigen::Index>(r)] = targets_[checked(idx[r])];
    return out;
  }

  [[nodiscard]] int class_of(std::size_t i) const { return static_cast<int>(targets_[checked(i)]); }

 private:
  [[nodiscard]] Eigen::Index checked(std::size_t i) const {
    require(i < n_samples(), ErrorCode::UnknownIndex, "index " + std::to_string(i) + " outside dataset");
    return static_cast<Eigen::Index>(i);
  }

  std::string name_;
  Matrix features_;
  Vector targets_;
  TaskKind task_;
};

struct SplitIndices {
  IndexList train;
  IndexList validation;
  IndexList test;
};

enum class StartMode { ColdStart, WarmStart };

struct TaskConfig {
  StartMode start_mode = StartMode::WarmStart;
  double warm_fraction = 0.10;
  std::uint64_t rng_seed = 0;
};

// ---------------------------------------------------------------------------
// Synthetic generators

inline Dataset generate_checkerboard(std::size_t n_samples, int grid, std::uint64_t seed) {
  require(grid == 2 || grid == 4, ErrorCode::InvalidArgument, "checkerboard grid must be 2 or 4");
  const auto cells = static_cast<std::size_t>(grid * grid);
  require(n_samples >= cells, ErrorCode::InvalidArgument,
          "checkerboard needs at least grid^2 = " + std::to_string(cells) + " samples");
  Rng rng(seed);
  Matrix x(static_cast<Eigen::Index>(n_samples), 2);
  Vector y(static_cast<Eigen::Index>(n_samples));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    x(i, 0) = uniform01(rng);
    x(i, 1) = uniform01(rng);
    const auto cx = static_cast<long>(std::floor(x(i, 0) * grid));
    const auto cy = static_cast<long>(std::floor(x(i, 1) * grid));
    y[i] = static_cast<double>((cx + cy) % 2);
  }
  return Dataset("Checkerboard" + std::to_string(grid) + "x" + std::to_string(grid), std::move(x), std::move(y),
                 TaskKind::classification(2));
}

/// Vertices of a regular simplex with the given edge length: scaled basis
/// vectors e_c * edge / sqrt(2) in R^n_clouds.
inline Matrix simplex_means(std::size_t n_clouds, double edge) {
  const auto k = static_cast<Eigen::Index>(n_clouds);
  return Matrix::Identity(k, k) * (edge / std::sqrt(2.0));
}

inline constexpr double kCloudSimplexEdge = 4.0;

/// Isotropic Gaussian clouds, class c drawn around simplex vertex c. Points are
/// assigned round-robin so class sizes differ by at most one.
inline Dataset generate_gaussian_clouds(std::size_t n_samples, std::size_t n_clouds, double overlap_sigma,
                                        std::uint64_t seed) {
  require(n_clouds >= 2, ErrorCode::InvalidArgument, "gaussian clouds need n_clouds >= 2");
  require(overlap_sigma > 0.0 && std::isfinite(overlap_sigma), ErrorCode::InvalidArgument,
          "overlap_sigma must be positive");
  const Matrix means = simplex_means(n_clouds, kCloudSimplexEdge);
  Rng rng(seed);
  const auto dim = static_cast<Eigen::Index>(n_clouds);
  Matrix x(static_cast<Eigen::Index>(n_samples), dim);
  Vector y(static_cast<Eigen::Index>(n_samples));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto c = static_cast<Eigen::Index>(static_cast<std::size_t>(i) % n_clouds);
    for (Eigen::Index d = 0; d < dim; ++d) x(i, d) = means(c, d) + overlap_sigma * standard_normal(rng);
    y[i] = static_cast<double>(c);
  }
  return Dataset("GaussianClouds", std::move(x), std::move(y), TaskKind::classification(n_clouds));
}

enum class SynthRegVariant { SynthReg1, SynthReg2 };

/// Noise-free target of the synthetic regression problems on [0, 1].
inline double synth_regression_target(SynthRegVariant variant, double x) {
  if (variant == SynthRegVariant::SynthReg1) return std::sin(6.0 * x);
  static constexpr double levels[4] = {0.0, 2.0, 1.0, 3.0};
  const auto cell = std::clamp(static_cast<int>(std::floor(4.0 * x)), 0, 3);
  return levels[cell];
}

inline Dataset generate_synth_regression(SynthRegVariant variant, std::size_t n_samples, double noise_sd,
                                         std::uint64_t seed) {
  require(n_samples >= 10, ErrorCode::InvalidArgument, "synthetic regression needs at least 10 samples");
  require(noise_sd >= 0.0 && std::isfinite(noise_sd), ErrorCode::InvalidArgument, "noise_sd must be >= 0");
  Rng rng(seed);
  Matrix x(static_cast<Eigen::Index>(n_samples), 1);
  Vector y(static_cast<Eigen::Index>(n_samples));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    x(i, 0) = uniform01(rng);
    const double eps = standard_normal(rng);
    y[i] = synth_regression_target(variant, x(i, 0)) + noise_sd * eps;
  }
  return Dataset(variant == SynthRegVariant::SynthReg1 ? "SynthReg1" : "SynthReg2", std::move(x), std::move(y),
                 TaskKind::regression());
}

// ---------------------------------------------------------------------------
// CSV ingestion

struct CsvSchema {
  std::string target_column;
  TaskKind::Kind task = TaskKind::Kind::Regression;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline bool parse_finite(std::string_view cell, double& out) {
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

}  // namespace detail

/// Parses headered CSV text. Row numbers in diagnostics are 1-based data rows
/// (the header is row 0); columns are 1-based.
inline Dataset parse_csv(std::string_view text, const CsvSchema& schema, std::string name = "csv") {
  std::vector<std::string_view> lines;
  {
    std::size_t start = 0;
    while (start < text.size()) {
      auto pos = text.find('\n', start);
      if (pos == std::string_view::npos) pos = text.size();
      auto line = detail::trim(text.substr(start, pos - start));
      if (!line.empty() || lines.empty()) lines.push_back(line);
      start = pos + 1;
    }
  }
  if (lines.empty() || lines.front().empty()) fail(ErrorCode::EmptyFile, "'" + name + "' has no header");
  const auto header = detail::split_commas(lines.front());
  const auto target_it = std::find(header.begin(), header.end(), std::string_view(schema.target_column));
  if (target_it == header.end()) fail(ErrorCode::MissingColumn, "column '" + schema.target_column + "' not in header");
  const auto target_col = static_cast<std::size_t>(target_it - header.begin());
  const std::size_t n_rows = lines.size() - 1;
  if (n_rows == 0) fail(ErrorCode::EmptyFile, "'" + name + "' has a header but no data rows");

  Matrix x(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(header.size() - 1));
  Vector raw(static_cast<Eigen::Index>(n_rows));
  for (std::size_t r = 0; r < n_rows; ++r) {
    const auto cells = detail::split_commas(lines[r + 1]);
    if (cells.size() != header.size()) {
      fail(ErrorCode::NonNumericCell, "row " + std::to_string(r + 1) + " has " + std::to_string(cells.size()) +
                                          " cells, header has " + std::to_string(header.size()));
    }
    Eigen::Index feature = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      if (!detail::parse_finite(cells[c], v)) {
        fail(ErrorCode::NonNumericCell, "row " + std::to_string(r + 1) + ", column " + std::to_string(c + 1) + " ('" +
                                            std::string(header[c]) + "'): '" + std::string(cells[c]) + "'");
      }
      if (c == target_col) {
        raw[static_cast<Eigen::Index>(r)] = v;
      } else {
        x(static_cast<Eigen::Index>(r), feature++) = v;
      }
    }
  }

  if (schema.task == TaskKind::Kind::Regression) return Dataset(std::move(name), std::move(x), std::move(raw), TaskKind::regression());

  // Distinct raw labels map to 0..K-1 in ascending order.
  const std::set<double> distinct(raw.data(), raw.data() + raw.size());
  std::map<double, double> to_index;
  for (double v : distinct) to_index.emplace(v, static_cast<double>(to_index.size()));
  Vector y(raw.size());
  for (Eigen::Index i = 0; i < raw.size(); ++i) y[i] = to_index.at(raw[i]);
  return Dataset(std::move(name), std::move(x), std::move(y), TaskKind::classification(distinct.size()));
}

inline Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (detail::trim(text).empty()) fail(ErrorCode::EmptyFile, "'" + path + "' is empty");
  return parse_csv(text, schema, path);
}

// ---------------------------------------------------------------------------
// Splitting

namespace detail {

/// Largest-remainder apportionment of n items over fractions; only subsets
/// with positive fraction receive the leftover. Ties go to the earlier subset.
inline std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& fractions) {
  std::vector<std::size_t> counts(fractions.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < fractions.size(); ++s) {
    const double exact = fractions[s] * static_cast<double>(n);
    counts[s] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    assigned += counts[s];
    if (fractions[s] > 0.0) remainders.emplace_back(exact - static_cast<double>(counts[s]), s);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < n && !remainders.empty(); ++i, ++assigned) {
    ++counts[remainders[i % remainders.size()].second];
  }
  return counts;
}

inline std::vector<IndexList> indices_by_class(const Dataset& ds) {
  std::vector<IndexList> by_class(ds.task().n_classes);
  for (std::size_t i = 0; i < ds.n_samples(); ++i) by_class[static_cast<std::size_t>(ds.class_of(i))].push_back(i);
  return by_class;
}

}  // namespace detail

/// Single train/validation/test split. Stratification apportions each class
/// separately, which keeps per-class counts within one of the exact share.
inline SplitIndices split(const Dataset& ds, double train, double validation, double test, std::uint64_t seed,
                          bool stratified) {
  require(train > 0.0 && validation >= 0.0 && test > 0.0, ErrorCode::InvalidArgument,
          "split fractions must satisfy train > 0, validation >= 0, test > 0");
  require(std::abs(train + validation + test - 1.0) <= 1e-9, ErrorCode::InvalidArgument,
          "split fractions must sum to 1");
  const std::vector<double> fractions{train, validation, test};
  const auto non_empty = static_cast<std::size_t>(std::count_if(fractions.begin(), fractions.end(),
                                                                [](double f) { return f > 0.0; }));

  std::vector<IndexList> groups;
  if (stratified) {
    require(ds.task().is_classification(), ErrorCode::InvalidArgument, "stratified split needs a classification task");
    groups = detail::indices_by_class(ds);
    for (std::size_t c = 0; c < groups.size(); ++c) {
      require(groups[c].size() >= non_empty, ErrorCode::InvalidArgument,
              "class " + std::to_string(c) + " has fewer samples than non-empty subsets");
    }
  } else {
    groups.emplace_back(ds.n_samples());
    std::iota(groups.front().begin(), groups.front().end(), std::size_t{0});
  }

  Rng rng(seed);
  SplitIndices out;
  IndexList* targets[3] = {&out.train, &out.validation, &out.test};
  for (auto& group : groups) {
    shuffle(group, rng);
    const auto counts = detail::apportion(group.size(), fractions);
    std::size_t pos = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      targets[s]->insert(targets[s]->end(), group.begin() + static_cast<long>(pos),
                         group.begin() + static_cast<long>(pos + counts[s]));
      pos += counts[s];
    }
  }
  for (auto* t : targets) std::sort(t->begin(), t->end());
  require(!out.train.empty() && !out.test.empty(), ErrorCode::InvalidArgument,
          "split leaves train or test empty; dataset too small");
  return out;
}

/// K-fold partition: fold f is the test set, the rest is train, validation is
/// empty. Stratified folds deal each shuffled class round-robin, continuing the
/// deal offset across classes so fold sizes stay balanced.
inline std::vector<SplitIndices> kfold(const Dataset& ds, std::size_t folds, std::uint64_t seed, bool stratified) {
  require(folds >= 2, ErrorCode::InvalidArgument, "k-fold needs at least 2 folds");
  require(ds.n_samples() >= folds, ErrorCode::InvalidArgument, "more folds than samples");
  std::vector<IndexList> groups;
  if (stratified) {
    require(ds.task().is_classification(), ErrorCode::InvalidArgument, "stratified k-fold needs a classification task");
    groups = detail::indices_by_class(ds);
  } else {
    groups.emplace_back(ds.n_samples());
    std::iota(groups.front().begin(), groups.front().end(), std::size_t{0});
  }
  Rng rng(seed);
  std::vector<IndexList> fold_members(folds);
  std::size_t deal = 0;
  for (auto& group : groups) {
    shuffle(group, rng);
    for (auto i : group) fold_members[deal++ % folds].push_back(i);
  }
  std::vector<SplitIndices> out(folds);
  for (std::size_t f = 0; f < folds; ++f) {
    out[f].test = fold_members[f];
    for (std::size_t g = 0; g < folds; ++g) {
      if (g != f) out[f].train.insert(out[f].train.end(), fold_members[g].begin(), fold_members[g].end());
    }
    std::sort(out[f].test.begin(), out[f].test.end());
    std::sort(out[f].train.begin(), out[f].train.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Initial labelling

inline std::size_t warm_start_count(double warm_fraction, std::size_t n_train) {
  // The small epsilon absorbs representation error such as 0.1 * 320.
  const auto count = static_cast<std::size_t>(std::ceil(warm_fraction * static_cast<double>(n_train) - 1e-9));
  return std::clamp<std::size_t>(count, 1, n_train);
}

/// Cold regression seed: the farthest pair of train points, ties going to the
/// lexicographically smallest (i, j) position pair.
inline IndexList farthest_pair(const Dataset& ds, const IndexList& train) {
  require(train.size() >= 2, ErrorCode::InvalidArgument, "cold regression start needs at least two train points");
  const Matrix& x = ds.features();
  double best = -1.0;
  std::size_t bi = 0, bj = 1;
  for (std::size_t i = 0; i < train.size(); ++i) {
    for (std::size_t j = i + 1; j < train.size(); ++j) {
      const double d = (x.row(static_cast<Eigen::Index>(train[i])) - x.row(static_cast<Eigen::Index>(train[j]))).squaredNorm();
      if (d > best) {
        best = d;
        bi = i;
        bj = j;
      }
    }
  }
  IndexList out{train[bi], train[bj]};
  std::sort(out.begin(), out.end());
  return out;
}

inline IndexList initial_labels(const Dataset& ds, const IndexList& train, const TaskConfig& config) {
  require(!train.empty(), ErrorCode::InvalidArgument, "initial labelling needs a non-empty train set");
  if (config.start_mode == StartMode::WarmStart) {
    require(config.warm_fraction > 0.0 && config.warm_fraction <= 1.0, ErrorCode::InvalidArgument,
            "warm_fraction must lie in (0, 1]");
    IndexList pool = train;
    Rng rng(config.rng_seed);
    shuffle(pool, rng);
    pool.resize(warm_start_count(config.warm_fraction, train.size()));
    std::sort(pool.begin(), pool.end());
    return pool;
  }
  if (!ds.task().is_classification()) return farthest_pair(ds, train);

  std::vector<std::size_t> first(ds.task().n_classes, ds.n_samples());
  for (auto i : train) {
    auto& slot = first[static_cast<std::size_t>(ds.class_of(i))];
    slot = std::min(slot, i);
  }
  IndexList out;
  for (std::size_t c = 0; c < first.size(); ++c) {
    require(first[c] < ds.n_samples(), ErrorCode::InvalidArgument,
            "cold start: class " + std::to_string(c) + " absent from train set");
    out.push_back(first[c]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace poolal
