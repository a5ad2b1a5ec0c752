#include "causal_testbed/boosting.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "causal_testbed/error.hpp"
#include "causal_testbed/rng.hpp"

namespace ctb {

BinMap BinMap::build(const Matrix& x, int max_bins) {
  if (max_bins < 2 || max_bins > 256) throw Error("boosting: max_bins must be in 2..256");
  BinMap map;
  map.cuts.resize(static_cast<std::size_t>(x.cols()));
  for (Index j = 0; j < x.cols(); ++j) {
    std::vector<double> v(x.col(j).data(), x.col(j).data() + x.rows());
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    auto& cuts = map.cuts[static_cast<std::size_t>(j)];
    if (static_cast<int>(v.size()) <= max_bins) {
      for (std::size_t k = 0; k + 1 < v.size(); ++k) cuts.push_back(0.5 * (v[k] + v[k + 1]));
    } else {
      std::vector<double> all(x.col(j).data(), x.col(j).data() + x.rows());
      std::sort(all.begin(), all.end());
      for (int b = 1; b < max_bins; ++b) {
        std::size_t pos = static_cast<std::size_t>(static_cast<double>(b) * static_cast<double>(all.size()) / max_bins);
        double c = all[std::min(pos, all.size() - 1)];
        if (c < all.back() && (cuts.empty() || c > cuts.back())) cuts.push_back(c);
      }
    }
  }
  return map;
}

std::vector<std::uint8_t> BinMap::bin(const Matrix& x) const {
  if (static_cast<std::size_t>(x.cols()) != cuts.size()) throw Error("boosting: column count mismatch");
  std::vector<std::uint8_t> out(static_cast<std::size_t>(x.rows() * x.cols()));
  for (Index j = 0; j < x.cols(); ++j) {
    const auto& c = cuts[static_cast<std::size_t>(j)];
    for (Index i = 0; i < x.rows(); ++i) {
      auto pos = std::lower_bound(c.begin(), c.end(), x(i, j)) - c.begin();
      out[static_cast<std::size_t>(j * x.rows() + i)] = static_cast<std::uint8_t>(pos);
    }
  }
  return out;
}

struct BoostingTrainer {
  const BinMap& map;
  const std::vector<std::uint8_t>& bins;  // column-major, n rows
  Index n;
  const BoostingOptions& opts;

  // Grows one tree on the residuals of the rows in `rows`.
  std::vector<TreeNode> grow(const std::vector<Index>& rows, const Vector& residual) const {
    std::vector<TreeNode> tree;
    struct Pending {
      int node;
      std::vector<Index> rows;
      int depth;
    };
    std::vector<Pending> stack;
    tree.push_back(TreeNode{});
    stack.push_back({0, rows, 0});
    const Index p = static_cast<Index>(map.cuts.size());
    std::vector<double> gsum(256);
    std::vector<int> cnt(256);
    while (!stack.empty()) {
      Pending cur = std::move(stack.back());
      stack.pop_back();
      double total = 0.0;
      for (Index i : cur.rows) total += residual(i);
      const double m = static_cast<double>(cur.rows.size());
      tree[static_cast<std::size_t>(cur.node)].value = opts.shrinkage * total / m;
      if (cur.depth >= opts.max_depth || static_cast<int>(cur.rows.size()) < 2 * opts.min_leaf) continue;

      double best_gain = 1e-12;
      int best_f = -1;
      int best_b = 0;
      const double parent = total * total / m;
      for (Index f = 0; f < p; ++f) {
        const int nb = static_cast<int>(map.cuts[static_cast<std::size_t>(f)].size()) + 1;
        if (nb < 2) continue;
        std::fill(gsum.begin(), gsum.begin() + nb, 0.0);
        std::fill(cnt.begin(), cnt.begin() + nb, 0);
        const std::uint8_t* col = bins.data() + f * n;
        for (Index i : cur.rows) {
          gsum[col[i]] += residual(i);
          ++cnt[col[i]];
        }
        double gl = 0.0;
        int cl = 0;
        for (int b = 0; b + 1 < nb; ++b) {
          gl += gsum[static_cast<std::size_t>(b)];
          cl += cnt[static_cast<std::size_t>(b)];
          const int cr = static_cast<int>(cur.rows.size()) - cl;
          if (cl < opts.min_leaf) continue;
          if (cr < opts.min_leaf) break;
          const double gr = total - gl;
          double gain = gl * gl / cl + gr * gr / cr - parent;
          if (gain > best_gain) {
            best_gain = gain;
            best_f = static_cast<int>(f);
            best_b = b;
          }
        }
      }
      if (best_f < 0) continue;
      std::vector<Index> left;
      std::vector<Index> right;
      const std::uint8_t* col = bins.data() + static_cast<Index>(best_f) * n;
      for (Index i : cur.rows) (col[i] <= best_b ? left : right).push_back(i);
      int li = static_cast<int>(tree.size());
      tree.push_back(TreeNode{});
      int ri = static_cast<int>(tree.size());
      tree.push_back(TreeNode{});
      TreeNode& node = tree[static_cast<std::size_t>(cur.node)];
      node.feature = best_f;
      node.bin = best_b;
      node.cut = map.cuts[static_cast<std::size_t>(best_f)][static_cast<std::size_t>(best_b)];
      node.left = li;
      node.right = ri;
      stack.push_back({ri, std::move(right), cur.depth + 1});
      stack.push_back({li, std::move(left), cur.depth + 1});
    }
    return tree;
  }

  // Adds the tree's contribution to `pred` for each row in `rows`.
  void apply(const std::vector<TreeNode>& tree, const std::vector<Index>& rows, Vector& pred) const {
    for (Index i : rows) {
      int k = 0;
      while (tree[static_cast<std::size_t>(k)].feature >= 0) {
        const auto& node = tree[static_cast<std::size_t>(k)];
        k = bins[static_cast<std::size_t>(node.feature * n + i)] <= node.bin ? node.left : node.right;
      }
      pred(i) += tree[static_cast<std::size_t>(k)].value;
    }
  }
};

namespace {

void check_inputs(const Matrix& x, const Vector& y, const BoostingOptions& opts) {
  if (x.rows() != y.size()) throw Error("boosting: design rows and response length differ");
  if (x.rows() < 2 * opts.min_leaf) throw Error("boosting: too few rows");
  if (!x.allFinite() || !y.allFinite()) throw Error("boosting: non-finite input");
}

}  // namespace

BoostedTrees BoostedTrees::fit(const Matrix& x, const Vector& y, int rounds, const BoostingOptions& opts) {
  check_inputs(x, y, opts);
  BinMap map = BinMap::build(x, opts.max_bins);
  auto bins = map.bin(x);
  BoostingTrainer trainer{map, bins, x.rows(), opts};
  std::vector<Index> rows(static_cast<std::size_t>(x.rows()));
  std::iota(rows.begin(), rows.end(), Index{0});
  BoostedTrees model;
  model.base_ = y.mean();
  Vector pred = Vector::Constant(y.size(), model.base_);
  for (int r = 0; r < rounds; ++r) {
    Vector residual = y - pred;
    model.trees_.push_back(trainer.grow(rows, residual));
    trainer.apply(model.trees_.back(), rows, pred);
  }
  return model;
}

Vector BoostedTrees::predict(const Matrix& x) const {
  Vector out = Vector::Constant(x.rows(), base_);
  for (const auto& tree : trees_) {
    for (Index i = 0; i < x.rows(); ++i) {
      int k = 0;
      while (tree[static_cast<std::size_t>(k)].feature >= 0) {
        const auto& node = tree[static_cast<std::size_t>(k)];
        k = x(i, node.feature) <= node.cut ? node.left : node.right;
      }
      out(i) += tree[static_cast<std::size_t>(k)].value;
    }
  }
  return out;
}

CvBoosting fit_boosting_cv(const Matrix& x, const Vector& y, const BoostingOptions& opts) {
  check_inputs(x, y, opts);
  if (opts.cv_folds < 2) throw Error("boosting: cv_folds must be at least 2");
  const Index n = x.rows();
  BinMap map = BinMap::build(x, opts.max_bins);
  auto bins = map.bin(x);
  BoostingTrainer trainer{map, bins, n, opts};

  Rng rng(opts.seed);
  auto perm = rng.sample_without_replacement(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
  const int k = opts.cv_folds;
  struct Fold {
    std::vector<Index> train;
    std::vector<Index> test;
    Vector pred;
  };
  std::vector<Fold> folds(static_cast<std::size_t>(k));
  for (std::size_t pos = 0; pos < perm.size(); ++pos) {
    int f = static_cast<int>(pos % static_cast<std::size_t>(k));
    for (int g = 0; g < k; ++g)
      (g == f ? folds[static_cast<std::size_t>(g)].test : folds[static_cast<std::size_t>(g)].train)
          .push_back(static_cast<Index>(perm[pos]));
  }
  for (auto& fold : folds) {
    std::sort(fold.train.begin(), fold.train.end());
    std::sort(fold.test.begin(), fold.test.end());
    double base = 0.0;
    for (Index i : fold.train) base += y(i);
    base /= static_cast<double>(fold.train.size());
    fold.pred = Vector::Constant(n, base);
  }

  CvBoosting out;
  double best = std::numeric_limits<double>::infinity();
  int best_round = 0;
  for (int r = 1; r <= opts.max_rounds; ++r) {
    double loss = 0.0;
    for (auto& fold : folds) {
      Vector residual = y - fold.pred;
      auto tree = trainer.grow(fold.train, residual);
      trainer.apply(tree, fold.train, fold.pred);
      trainer.apply(tree, fold.test, fold.pred);
      for (Index i : fold.test) loss += (y(i) - fold.pred(i)) * (y(i) - fold.pred(i));
    }
    loss /= static_cast<double>(n);
    out.cv_loss.push_back(loss);
    out.rounds_evaluated = r;
    if (loss < best) {
      best = loss;
      best_round = r;
    } else if (r - best_round >= opts.patience) {
      break;
    }
  }
  out.rounds = best_round;
  out.model = BoostedTrees::fit(x, y, best_round, opts);
  return out;
}

}  // namespace ctb
