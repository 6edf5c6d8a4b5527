#pragma once

// Internal fitting routines. Every routine works on standardized features.

#include <random>
#include <span>
#include <vector>

#include "qiraa/models.hpp"

namespace qiraa::detail {

struct TreeParams {
  int max_depth = 0;          // 0 = unlimited
  int min_samples_split = 2;
  std::size_t max_features = 0;  // 0 = every column, scanned in order
};

/// CART on the given rows. n_classes > 0 selects Gini splits over class
/// indices stored in `targets`; n_classes == 0 selects variance splits.
Tree fit_tree(const Matrix& X, std::span<const std::size_t> rows, std::span<const double> targets, int n_classes,
              const TreeParams& params, std::mt19937_64* rng);

NaiveBayesState fit_naive_bayes(const Matrix& X, std::span<const int> y, int n_classes);
Matrix naive_bayes_scores(const NaiveBayesState& s, const Matrix& X);

ForestState fit_forest(const Matrix& X, std::span<const double> targets, int n_classes, const Hyperparams& hp);

BoostState fit_boost_classifier(const Matrix& X, std::span<const int> y, int n_classes, const Hyperparams& hp);
BoostState fit_boost_regressor(const Matrix& X, std::span<const double> y, const Hyperparams& hp);
/// Raw additive scores, one column per output.
Matrix boost_raw(const BoostState& s, const Matrix& X);

LinearState fit_softmax(const Matrix& X, std::span<const int> y, int n_classes, const Hyperparams& hp,
                        TrainingDiagnostics& diag);
LinearState fit_linear_svm(const Matrix& X, std::span<const int> y, int n_classes, const Hyperparams& hp);
LinearState fit_ridge(const Matrix& X, std::span<const double> y, const Hyperparams& hp);
LinearState fit_linear_svr(const Matrix& X, std::span<const double> y, double epsilon, const Hyperparams& hp);
Matrix linear_raw(const LinearState& s, const Matrix& X);

KernelState fit_kernel_svm(const Matrix& X, std::span<const int> y, int n_classes, double gamma, const Hyperparams& hp);
KernelState fit_kernel_svr(const Matrix& X, std::span<const double> y, double epsilon, double gamma,
                           const Hyperparams& hp);
Matrix kernel_raw(const KernelState& s, const Matrix& X);

/// Index of the largest entry; the lowest index wins ties.
std::size_t argmax(std::span<const double> v);
void softmax_inplace(std::span<double> v);

}  // namespace qiraa::detail
