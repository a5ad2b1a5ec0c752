#pragma once

#include <cstdint>
#include <vector>

#include "causal_testbed/linalg.hpp"

namespace ctb {

/// Gradient-boosted regression trees with squared loss on histogram bins.
struct BoostingOptions {
  int max_depth = 3;
  double shrinkage = 0.05;
  int max_rounds = 2000;
  int min_leaf = 5;
  int max_bins = 64;
  int cv_folds = 5;
  int patience = 100;  // CV rounds without improvement before stopping
  std::uint64_t seed = 0;
};

/// Per-column cut points; a value v goes left of cut c when v <= c.
struct BinMap {
  std::vector<std::vector<double>> cuts;

  static BinMap build(const Matrix& x, int max_bins);
  std::vector<std::uint8_t> bin(const Matrix& x) const;  // column-major
};

struct TreeNode {
  int feature = -1;  // -1 for a leaf
  int bin = 0;       // left when bin index <= this
  double cut = 0.0;  // raw-value threshold equivalent to `bin`
  int left = -1;
  int right = -1;
  double value = 0.0;
};

class BoostedTrees {
 public:
  BoostedTrees() = default;

  /// Fits exactly `rounds` trees on all rows.
  static BoostedTrees fit(const Matrix& x, const Vector& y, int rounds, const BoostingOptions& opts);

  Vector predict(const Matrix& x) const;
  int rounds() const { return static_cast<int>(trees_.size()); }
  double base() const { return base_; }

 private:
  double base_ = 0.0;
  std::vector<std::vector<TreeNode>> trees_;

  friend struct BoostingTrainer;
};

struct CvBoosting {
  BoostedTrees model;
  int rounds = 0;                // chosen number of rounds
  int rounds_evaluated = 0;      // rounds run before early stopping
  std::vector<double> cv_loss;   // mean held-out MSE after each round
};

/// Picks the number of rounds by k-fold cross-validation (folds advance in
/// lock step, stopping after `patience` rounds without improvement), then
/// refits on all rows.
CvBoosting fit_boosting_cv(const Matrix& x, const Vector& y, const BoostingOptions& opts);

}  // namespace ctb
