#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qiraa/cefr.hpp"
#include "qiraa/matrix.hpp"

namespace qiraa {

enum class ModelKind { knn, naive_bayes, decision_tree, random_forest, gbt, softmax, svm_linear, svm_rbf, ridge };
enum class Task { classify, regress };

std::string to_string(ModelKind k);
std::string to_string(Task t);
std::optional<ModelKind> parse_model_kind(std::string_view s);
std::optional<Task> parse_task(std::string_view s);

struct Hyperparams {
  int k = 5;                   // knn neighbours
  int max_depth = 0;           // 0 = unlimited
  int min_samples_split = 2;
  int n_trees = 100;           // forest size / boosting rounds
  int max_features = -1;       // -1 = kind default, 0 = all columns
  bool bootstrap = true;
  double learning_rate = 0.1;
  int epochs = 30;
  int batch_size = 32;         // softmax; 0 = full-batch gradient descent
  double lambda = 1e-3;        // L2 strength
  double gamma = 0.0;          // rbf width; 0 = 1 / n_features
  double epsilon = 0.1;        // insensitive-zone half width for SVR
  std::uint64_t seed = 0;

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

struct ModelSpec {
  ModelKind kind = ModelKind::softmax;
  Task task = Task::classify;
  Hyperparams hyper;

  /// Spec with the per-kind default hyperparameters.
  static ModelSpec defaults(ModelKind kind, Task task = Task::classify);
  /// Throws InvalidHyperparam on a bad value or an unsupported kind/task pair.
  void validate() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Binary CART tree stored as a flat node array; node 0 is the root.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> value;  // class fractions, or a single regression value

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
  std::vector<TreeNode> nodes;
  int leaf_index(std::span<const double> x) const;
  const std::vector<double>& leaf_value(std::span<const double> x) const { return nodes[leaf_index(x)].value; }
  friend bool operator==(const Tree&, const Tree&) = default;
};

struct KnnState {
  Matrix points;
  std::vector<double> targets;  // class index or regression target
  friend bool operator==(const KnnState&, const KnnState&) = default;
};

struct NaiveBayesState {
  std::vector<double> log_prior;
  Matrix means;
  Matrix variances;
  friend bool operator==(const NaiveBayesState&, const NaiveBayesState&) = default;
};

struct ForestState {
  std::vector<Tree> trees;
  friend bool operator==(const ForestState&, const ForestState&) = default;
};

struct BoostState {
  std::vector<double> init;
  std::vector<std::vector<Tree>> rounds;  // one tree per output per round
  double learning_rate = 0.1;
  friend bool operator==(const BoostState&, const BoostState&) = default;
};

/// One weight row per output; the last column is the bias.
struct LinearState {
  Matrix weights;
  friend bool operator==(const LinearState&, const LinearState&) = default;
};

/// f_c(x) = sum_j coef(c, j) * (exp(-gamma |s_j - x|^2) + 1).
struct KernelState {
  Matrix support;
  Matrix coef;
  double gamma = 1.0;
  friend bool operator==(const KernelState&, const KernelState&) = default;
};

using ModelState = std::variant<KnnState, NaiveBayesState, Tree, ForestState, BoostState, LinearState, KernelState>;

struct TrainingDiagnostics {
  std::vector<double> loss_history;  // softmax objective after each epoch
};

struct TrainedModel {
  ModelSpec spec;
  std::vector<std::string> feature_names;
  std::vector<double> mean;
  std::vector<double> scale;
  std::vector<int> classes;   // sorted distinct training labels (classify)
  double target_mean = 0.0;   // regression target standardization
  double target_scale = 1.0;
  std::optional<LabelScheme> label_scheme;
  ModelState state;
  TrainingDiagnostics diagnostics;  // not serialized
};

struct Prediction {
  std::vector<int> labels;    // classify
  Matrix scores;              // classify: one column per entry of classes
  std::vector<double> values; // regress
};

TrainedModel train(const ModelSpec& spec, const FeatureTable& X, std::span<const int> labels);
TrainedModel train(const ModelSpec& spec, const FeatureTable& X, std::span<const double> targets);

/// Column names must equal the training names, in order.
Prediction predict(const TrainedModel& m, const FeatureTable& X);

std::string serialize_model(const TrainedModel& m);
TrainedModel deserialize_model(std::string_view json_text);

/// Out-of-fold predictions: row i holds, for every spec, the label predicted
/// for instance i by the fold model whose test set contains i. k equal to the
/// instance count means leave-one-out.
std::vector<std::vector<int>> train_ensemble(const std::vector<ModelSpec>& specs, const FeatureTable& X,
                                             std::span<const int> labels, std::size_t k, std::uint64_t seed);

/// The five learners used for disagreement detection.
std::vector<ModelSpec> cleaning_ensemble(std::uint64_t seed);

namespace detail {

/// Mean cross-entropy plus (lambda/2)|W|^2 over non-bias weights. W is
/// classes x (features + 1). Fills grad when non-null.
double softmax_objective(const Matrix& W, const Matrix& X, std::span<const int> y, double lambda, Matrix* grad);

}  // namespace detail

}  // namespace qiraa
