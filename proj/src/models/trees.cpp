#include <algorithm>
#include <cmath>
#include <numeric>

#include "learners.hpp"
#include "qiraa/util.hpp"

namespace qiraa {

int Tree::leaf_index(std::span<const double> x) const {
  int node = 0;
  while (nodes[node].feature >= 0) {
    const auto& n = nodes[node];
    node = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return node;
}

}  // namespace qiraa

namespace qiraa::detail {

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& X, std::span<const double> targets, int n_classes, const TreeParams& params,
              std::mt19937_64* rng)
      : X_(X), targets_(targets), n_classes_(n_classes), params_(params), rng_(rng) {
    features_.resize(X.cols());
    std::iota(features_.begin(), features_.end(), 0);
  }

  Tree build(std::span<const std::size_t> rows) {
    std::vector<std::size_t> r(rows.begin(), rows.end());
    grow(r, 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double score = 0.0;
  };

  std::vector<double> leaf_value(const std::vector<std::size_t>& rows) const {
    if (n_classes_ > 0) {
      std::vector<double> v(n_classes_, 0.0);
      for (auto r : rows) v[static_cast<int>(targets_[r])] += 1.0;
      for (auto& x : v) x /= static_cast<double>(rows.size());
      return v;
    }
    double sum = 0.0;
    for (auto r : rows) sum += targets_[r];
    return {sum / static_cast<double>(rows.size())};
  }

  bool pure(const std::vector<std::size_t>& rows) const {
    for (auto r : rows) {
      if (targets_[r] != targets_[rows.front()]) return false;
    }
    return true;
  }

  // Larger is better: sum of c^2/n over children (Gini) or S^2/n (variance).
  double parent_score(const std::vector<std::size_t>& rows) const {
    const double n = static_cast<double>(rows.size());
    if (n_classes_ > 0) {
      std::vector<double> c(n_classes_, 0.0);
      for (auto r : rows) c[static_cast<int>(targets_[r])] += 1.0;
      double s = 0.0;
      for (double x : c) s += x * x;
      return s / n;
    }
    double sum = 0.0;
    for (auto r : rows) sum += targets_[r];
    return sum * sum / n;
  }

  std::vector<std::size_t> candidate_features() {
    const std::size_t d = features_.size();
    if (params_.max_features == 0 || params_.max_features >= d || rng_ == nullptr) return features_;
    std::vector<std::size_t> pool = features_;
    for (std::size_t i = 0; i < params_.max_features; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, d - 1);
      std::swap(pool[i], pool[pick(*rng_)]);
    }
    pool.resize(params_.max_features);
    return pool;
  }

  Split best_split(const std::vector<std::size_t>& rows) {
    Split best;
    best.score = parent_score(rows) + 1e-12;
    const std::size_t n = rows.size();
    std::vector<std::pair<double, double>> col(n);
    std::vector<double> left_counts;
    std::vector<double> total_counts;
    if (n_classes_ > 0) {
      total_counts.assign(n_classes_, 0.0);
      for (auto r : rows) total_counts[static_cast<int>(targets_[r])] += 1.0;
    }
    double total_sum = 0.0;
    for (auto r : rows) total_sum += targets_[r];

    for (std::size_t f : candidate_features()) {
      for (std::size_t i = 0; i < n; ++i) col[i] = {X_(rows[i], f), targets_[rows[i]]};
      std::sort(col.begin(), col.end());
      if (col.front().first == col.back().first) continue;
      if (n_classes_ > 0) left_counts.assign(n_classes_, 0.0);
      double left_sum = 0.0;
      double left_sq = 0.0;  // sum of squared class counts on the left
      double right_sq = 0.0;
      for (double c : total_counts) right_sq += c * c;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const double t = col[i].second;
        if (n_classes_ > 0) {
          const int c = static_cast<int>(t);
          const double lc = left_counts[c];
          const double rc = total_counts[c] - lc;
          left_sq += 2.0 * lc + 1.0;
          right_sq -= 2.0 * rc - 1.0;
          left_counts[c] = lc + 1.0;
        } else {
          left_sum += t;
        }
        if (col[i].first == col[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = static_cast<double>(n - i - 1);
        double score;
        if (n_classes_ > 0) {
          score = left_sq / nl + right_sq / nr;
        } else {
          const double right_sum = total_sum - left_sum;
          score = left_sum * left_sum / nl + right_sum * right_sum / nr;
        }
        if (score > best.score) {
          best.score = score;
          best.feature = static_cast<int>(f);
          double thr = 0.5 * (col[i].first + col[i + 1].first);
          if (!(thr < col[i + 1].first)) thr = col[i].first;
          best.threshold = thr;
        }
      }
    }
    return best;
  }

  int grow(std::vector<std::size_t>& rows, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(TreeNode{});
    tree_.nodes[id].value = leaf_value(rows);
    const bool depth_left = params_.max_depth == 0 || depth < params_.max_depth;
    if (!depth_left || static_cast<int>(rows.size()) < params_.min_samples_split || pure(rows)) return id;
    const Split s = best_split(rows);
    if (s.feature < 0) return id;
    std::vector<std::size_t> left, right;
    for (auto r : rows) (X_(r, s.feature) <= s.threshold ? left : right).push_back(r);
    if (left.empty() || right.empty()) return id;
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    auto& node = tree_.nodes[id];
    node.feature = s.feature;
    node.threshold = s.threshold;
    node.left = l;
    node.right = r;
    node.value.clear();
    return id;
  }

  const Matrix& X_;
  std::span<const double> targets_;
  int n_classes_;
  TreeParams params_;
  std::mt19937_64* rng_;
  std::vector<std::size_t> features_;
  Tree tree_;
};

}  // namespace

Tree fit_tree(const Matrix& X, std::span<const std::size_t> rows, std::span<const double> targets, int n_classes,
              const TreeParams& params, std::mt19937_64* rng) {
  return TreeBuilder(X, targets, n_classes, params, rng).build(rows);
}

ForestState fit_forest(const Matrix& X, std::span<const double> targets, int n_classes, const Hyperparams& hp) {
  ForestState forest;
  const std::size_t n = X.rows();
  const std::size_t d = X.cols();
  TreeParams params;
  params.max_depth = hp.max_depth;
  params.min_samples_split = hp.min_samples_split;
  if (hp.max_features < 0) {
    params.max_features = n_classes > 0 ? std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(double(d))))
                                        : std::max<std::size_t>(1, d / 3);
  } else {
    params.max_features = static_cast<std::size_t>(hp.max_features);
  }
  for (int t = 0; t < hp.n_trees; ++t) {
    std::mt19937_64 rng(util::derive_seed(hp.seed, static_cast<std::uint64_t>(t)));
    std::vector<std::size_t> rows(n);
    if (hp.bootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (auto& r : rows) r = pick(rng);
      std::sort(rows.begin(), rows.end());
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    forest.trees.push_back(fit_tree(X, rows, targets, n_classes, params, &rng));
  }
  return forest;
}

namespace {

// Recomputes leaf values from the training rows that land in each leaf.
template <typename LeafFn>
void refit_leaves(Tree& tree, const Matrix& X, LeafFn&& fn) {
  std::vector<std::vector<std::size_t>> members(tree.nodes.size());
  for (std::size_t i = 0; i < X.rows(); ++i) members[tree.leaf_index(X.row(i))].push_back(i);
  for (std::size_t node = 0; node < tree.nodes.size(); ++node) {
    if (tree.nodes[node].feature < 0) tree.nodes[node].value = {fn(members[node])};
  }
}

}  // namespace

BoostState fit_boost_classifier(const Matrix& X, std::span<const int> y, int n_classes, const Hyperparams& hp) {
  const std::size_t n = X.rows();
  const auto K = static_cast<std::size_t>(n_classes);
  BoostState s;
  s.learning_rate = hp.learning_rate;
  s.init.assign(K, 0.0);
  std::vector<double> counts(K, 0.0);
  for (int c : y) counts[c] += 1.0;
  for (std::size_t k = 0; k < K; ++k) s.init[k] = std::log(std::max(counts[k], 1.0) / static_cast<double>(n));

  Matrix F(n, K);
  for (std::size_t i = 0; i < n; ++i) std::copy(s.init.begin(), s.init.end(), F.row(i).begin());
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  TreeParams params{hp.max_depth, hp.min_samples_split, 0};
  std::vector<double> residual(n);
  const double newton_scale = static_cast<double>(K - 1) / static_cast<double>(K);

  for (int round = 0; round < hp.n_trees; ++round) {
    Matrix P = F;
    for (std::size_t i = 0; i < n; ++i) softmax_inplace(P.row(i));
    std::vector<Tree> trees;
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t i = 0; i < n; ++i) residual[i] = (y[i] == static_cast<int>(k) ? 1.0 : 0.0) - P(i, k);
      Tree tree = fit_tree(X, all, residual, 0, params, nullptr);
      refit_leaves(tree, X, [&](const std::vector<std::size_t>& rows) {
        double num = 0.0, den = 0.0;
        for (auto r : rows) {
          num += residual[r];
          den += std::abs(residual[r]) * (1.0 - std::abs(residual[r]));
        }
        return den < 1e-12 ? 0.0 : newton_scale * num / den;
      });
      trees.push_back(std::move(tree));
    }
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t i = 0; i < n; ++i) F(i, k) += hp.learning_rate * trees[k].leaf_value(X.row(i))[0];
    }
    s.rounds.push_back(std::move(trees));
  }
  return s;
}

BoostState fit_boost_regressor(const Matrix& X, std::span<const double> y, const Hyperparams& hp) {
  const std::size_t n = X.rows();
  BoostState s;
  s.learning_rate = hp.learning_rate;
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  s.init = {mean};
  std::vector<double> F(n, mean);
  std::vector<double> residual(n);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  TreeParams params{hp.max_depth, hp.min_samples_split, 0};
  for (int round = 0; round < hp.n_trees; ++round) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - F[i];
    Tree tree = fit_tree(X, all, residual, 0, params, nullptr);
    for (std::size_t i = 0; i < n; ++i) F[i] += hp.learning_rate * tree.leaf_value(X.row(i))[0];
    s.rounds.push_back({std::move(tree)});
  }
  return s;
}

Matrix boost_raw(const BoostState& s, const Matrix& X) {
  const std::size_t K = s.init.size();
  Matrix F(X.rows(), K);
  for (std::size_t i = 0; i < X.rows(); ++i) {
    auto row = F.row(i);
    std::copy(s.init.begin(), s.init.end(), row.begin());
    for (const auto& round : s.rounds) {
      for (std::size_t k = 0; k < K; ++k) row[k] += s.learning_rate * round[k].leaf_value(X.row(i))[0];
    }
  }
  return F;
}

}  // namespace qiraa::detail
