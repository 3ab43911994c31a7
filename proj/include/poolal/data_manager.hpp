#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "poolal/dataset.hpp"

namespace poolal {

struct Annotation {
  std::size_t index = 0;
  double label = 0.0;
};

/// Read-only snapshot of the current partition. Labelled targets come from the
/// revealed-label store, never from the dataset directly.
struct SubsetViews {
  IndexList labelled_indices;
  Matrix labelled_x;
  Vector labelled_y;
  IndexList unlabelled_indices;
  Matrix unlabelled_x;
  Matrix validation_x;
  Vector validation_y;
  Matrix test_x;
  Vector test_y;
};

/// Bookkeeping for the labelled set and the unlabelled pool of one run.
class DataManager {
 public:
  DataManager(std::shared_ptr<const Dataset> dataset, SplitIndices splits, const IndexList& initial_labelled)
      : dataset_(std::move(dataset)), splits_(std::move(splits)) {
    require(dataset_ != nullptr, ErrorCode::InvalidArgument, "data manager needs a dataset");
    require(!initial_labelled.empty(), ErrorCode::InvalidArgument, "initial labelled set is empty");
    const std::set<std::size_t> train(splits_.train.begin(), splits_.train.end());
    std::set<std::size_t> seen;
    for (auto i : initial_labelled) {
      require(train.count(i) == 1, ErrorCode::UnknownIndex,
              "initial labelled index " + std::to_string(i) + " is not in the train split");
      require(seen.insert(i).second, ErrorCode::AlreadyLabelled, "duplicate initial index " + std::to_string(i));
    }
    labelled_ = initial_labelled;
    for (auto i : labelled_) revealed_.emplace(i, dataset_->targets()[static_cast<Eigen::Index>(i)]);
    for (auto i : splits_.train) {
      if (seen.count(i) == 0) unlabelled_.push_back(i);
    }
  }

  [[nodiscard]] const Dataset& dataset() const noexcept { return *dataset_; }
  [[nodiscard]] const SplitIndices& splits() const noexcept { return splits_; }
  /// Acquisition order: initial set first, then each annotated batch.
  [[nodiscard]] const IndexList& labelled() const noexcept { return labelled_; }
  [[nodiscard]] const IndexList& unlabelled() const noexcept { return unlabelled_; }
  [[nodiscard]] const std::map<std::size_t, double>& revealed_labels() const noexcept { return revealed_; }

  /// Moves annotated indices from the pool to the labelled set. The batch is
  /// validated in full before any state changes.
  void apply_annotations(const std::vector<Annotation>& annotations) {
    const std::set<std::size_t> pool(unlabelled_.begin(), unlabelled_.end());
    std::set<std::size_t> batch;
    const TaskKind task = dataset_->task();
    for (const auto& a : annotations) {
      if (revealed_.count(a.index) == 1 || batch.count(a.index) == 1) {
        fail(ErrorCode::AlreadyLabelled, "index " + std::to_string(a.index) + " is already labelled");
      }
      require(pool.count(a.index) == 1, ErrorCode::UnknownIndex,
              "index " + std::to_string(a.index) + " is not in the unlabelled pool");
      require(std::isfinite(a.label), ErrorCode::LabelOutOfRange, "non-finite label");
      if (task.is_classification()) {
        require(a.label >= 0.0 && a.label < static_cast<double>(task.n_classes) && a.label == std::floor(a.label),
                ErrorCode::LabelOutOfRange, "label " + std::to_string(a.label) + " outside class range");
      }
      batch.insert(a.index);
    }
    for (const auto& a : annotations) {
      labelled_.push_back(a.index);
      revealed_.emplace(a.index, a.label);
    }
    std::erase_if(unlabelled_, [&](std::size_t i) { return batch.count(i) == 1; });
  }

  [[nodiscard]] SubsetViews subset_views() const {
    SubsetViews v;
    v.labelled_indices = labelled_;
    v.labelled_x = dataset_->rows(labelled_);
    v.labelled_y.resize(static_cast<Eigen::Index>(labelled_.size()));
    for (std::size_t r = 0; r < labelled_.size(); ++r) v.labelled_y[static_cast<Eigen::Index>(r)] = revealed_.at(labelled_[r]);
    v.unlabelled_indices = unlabelled_;
    v.unlabelled_x = dataset_->rows(unlabelled_);
    v.validation_x = dataset_->rows(splits_.validation);
    v.validation_y = dataset_->targets_at(splits_.validation);
    v.test_x = dataset_->rows(splits_.test);
    v.test_y = dataset_->targets_at(splits_.test);
    return v;
  }

 private:
  std::shared_ptr<const Dataset> dataset_;
  SplitIndices splits_;
  IndexList labelled_;
  IndexList unlabelled_;
  std::map<std::size_t, double> revealed_;
};

}  // namespace poolal
