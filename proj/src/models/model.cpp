#include <algorithm>
#include <cmath>
#include <numeric>

#include "learners.hpp"
#include "qiraa/corpus.hpp"
#include "qiraa/errors.hpp"
#include "qiraa/util.hpp"

namespace qiraa {

namespace {

constexpr std::pair<ModelKind, const char*> kKindNames[] = {
    {ModelKind::knn, "knn"},
    {ModelKind::naive_bayes, "naive_bayes"},
    {ModelKind::decision_tree, "decision_tree"},
    {ModelKind::random_forest, "random_forest"},
    {ModelKind::gbt, "gbt"},
    {ModelKind::softmax, "softmax"},
    {ModelKind::svm_linear, "svm_linear"},
    {ModelKind::svm_rbf, "svm_rbf"},
    {ModelKind::ridge, "ridge"},
};

}  // namespace

std::string to_string(ModelKind k) {
  for (auto [kind, name] : kKindNames) {
    if (kind == k) return name;
  }
  return "softmax";
}

std::string to_string(Task t) { return t == Task::classify ? "classify" : "regress"; }

std::optional<ModelKind> parse_model_kind(std::string_view s) {
  for (auto [kind, name] : kKindNames) {
    if (s == name) return kind;
  }
  return std::nullopt;
}

std::optional<Task> parse_task(std::string_view s) {
  if (s == "classify") return Task::classify;
  if (s == "regress") return Task::regress;
  return std::nullopt;
}

ModelSpec ModelSpec::defaults(ModelKind kind, Task task) {
  ModelSpec spec;
  spec.kind = kind;
  spec.task = task;
  auto& h = spec.hyper;
  switch (kind) {
    case ModelKind::knn: h.k = 5; break;
    case ModelKind::naive_bayes: break;
    case ModelKind::decision_tree: h.max_features = 0; break;
    case ModelKind::random_forest: h.n_trees = 100; break;
    case ModelKind::gbt:
      h.n_trees = 100;
      h.max_depth = 3;
      h.learning_rate = 0.1;
      break;
    case ModelKind::softmax:
      h.epochs = 50;
      h.learning_rate = 0.1;
      h.lambda = 1e-4;
      break;
    case ModelKind::svm_linear:
      h.epochs = 30;
      h.lambda = task == Task::classify ? 1e-3 : 1e-4;
      break;
    case ModelKind::svm_rbf:
      h.epochs = 10;
      h.lambda = 1e-3;
      break;
    case ModelKind::ridge: h.lambda = 1.0; break;
  }
  return spec;
}

void ModelSpec::validate() const {
  const auto& h = hyper;
  auto fail = [&](const std::string& why) { throw InvalidHyperparam(to_string(kind) + ": " + why); };
  if (task == Task::regress && (kind == ModelKind::naive_bayes || kind == ModelKind::softmax)) {
    fail("regression is not supported");
  }
  if (task == Task::classify && kind == ModelKind::ridge) fail("classification is not supported");
  if (h.k < 1) fail("k must be >= 1");
  if (h.max_depth < 0) fail("max_depth must be >= 0 (0 = unlimited)");
  if (h.min_samples_split < 2) fail("min_samples_split must be >= 2");
  if (h.n_trees < 1) fail("n_trees must be >= 1");
  if (h.max_features < -1) fail("max_features must be >= -1");
  if (!(h.learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (h.epochs < 1) fail("epochs must be >= 1");
  if (h.batch_size < 0) fail("batch_size must be >= 0");
  if (!(h.gamma >= 0.0)) fail("gamma must be > 0 (0 selects 1/n_features)");
  if (!(h.epsilon >= 0.0)) fail("epsilon must be >= 0");
  const bool svm = kind == ModelKind::svm_linear || kind == ModelKind::svm_rbf;
  if (svm ? !(h.lambda > 0.0) : !(h.lambda >= 0.0)) fail(svm ? "lambda must be > 0" : "lambda must be >= 0");
}

namespace {

struct Standardizer {
  std::vector<double> mean, scale;

  static Standardizer fit(const Matrix& X) {
    Standardizer s;
    const std::size_t n = X.rows(), d = X.cols();
    s.mean.assign(d, 0.0);
    s.scale.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) s.mean[j] += X(i, j);
    }
    for (auto& m : s.mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        const double t = X(i, j) - s.mean[j];
        s.scale[j] += t * t;
      }
    }
    for (auto& v : s.scale) {
      v = std::sqrt(v / static_cast<double>(n));
      if (v < 1e-12) v = 1.0;
    }
    return s;
  }
};

Matrix standardize(const Matrix& X, const std::vector<double>& mean, const std::vector<double>& scale) {
  Matrix out = X;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    auto row = out.row(i);
    for (std::size_t j = 0; j < X.cols(); ++j) row[j] = (row[j] - mean[j]) / scale[j];
  }
  return out;
}

void check_inputs(const FeatureTable& X, std::size_t n_targets) {
  if (X.rows() != n_targets) throw LengthMismatch(X.rows(), n_targets);
  if (X.rows() < 2) throw DegenerateData("need at least 2 training rows");
  if (X.names.size() != X.cols()) throw FeatureMismatch("feature names do not match column count");
  for (double v : X.values.data()) {
    if (!std::isfinite(v)) throw DegenerateData("non-finite feature value");
  }
}

double resolve_gamma(const Hyperparams& h, std::size_t d) {
  return h.gamma > 0.0 ? h.gamma : 1.0 / static_cast<double>(std::max<std::size_t>(d, 1));
}

// Neighbour indices sorted by (distance, index).
std::vector<std::size_t> nearest(const Matrix& points, std::span<const double> x, std::size_t k) {
  const std::size_t n = points.rows();
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    const auto p = points.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double t = p[j] - x[j];
      s += t * t;
    }
    dist[i] = {s, i};
  }
  k = std::min(k, n);
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = dist[i].second;
  return out;
}

}  // namespace

namespace detail {

NaiveBayesState fit_naive_bayes(const Matrix& X, std::span<const int> y, int n_classes) {
  const std::size_t n = X.rows(), d = X.cols();
  const auto K = static_cast<std::size_t>(n_classes);
  NaiveBayesState s;
  s.means = Matrix(K, d);
  s.variances = Matrix(K, d);
  std::vector<double> count(K, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    count[y[i]] += 1.0;
    for (std::size_t j = 0; j < d; ++j) s.means(y[i], j) += X(i, j);
  }
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 0; j < d; ++j) s.means(k, j) /= count[k];
  }
  double max_var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double t = X(i, j) - s.means(y[i], j);
      s.variances(y[i], j) += t * t;
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 0; j < d; ++j) {
      s.variances(k, j) /= count[k];
      max_var = std::max(max_var, s.variances(k, j));
    }
  }
  const double smoothing = 1e-9 * std::max(max_var, 1.0);
  for (auto& v : s.variances.data()) v += smoothing;
  s.log_prior.resize(K);
  for (std::size_t k = 0; k < K; ++k) s.log_prior[k] = std::log(count[k] / static_cast<double>(n));
  return s;
}

Matrix naive_bayes_scores(const NaiveBayesState& s, const Matrix& X) {
  const std::size_t K = s.log_prior.size();
  Matrix out(X.rows(), K);
  constexpr double kLog2Pi = 1.8378770664093453;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    auto row = out.row(i);
    for (std::size_t k = 0; k < K; ++k) {
      double ll = s.log_prior[k];
      for (std::size_t j = 0; j < X.cols(); ++j) {
        const double v = s.variances(k, j);
        const double t = X(i, j) - s.means(k, j);
        ll -= 0.5 * (kLog2Pi + std::log(v) + t * t / v);
      }
      row[k] = ll;
    }
    softmax_inplace(row);
  }
  return out;
}

}  // namespace detail

namespace {

TrainedModel fit(const ModelSpec& spec, const FeatureTable& X, std::vector<double> targets, bool classify) {
  spec.validate();
  TrainedModel m;
  m.spec = spec;
  m.feature_names = X.names;
  const auto st = Standardizer::fit(X.values);
  m.mean = st.mean;
  m.scale = st.scale;
  const Matrix Xs = standardize(X.values, m.mean, m.scale);
  const auto& h = spec.hyper;
  const std::size_t n = Xs.rows();

  if (classify) {
    m.classes.clear();
    for (double t : targets) m.classes.push_back(static_cast<int>(t));
    std::sort(m.classes.begin(), m.classes.end());
    m.classes.erase(std::unique(m.classes.begin(), m.classes.end()), m.classes.end());
    if (m.classes.size() < 2) throw DegenerateData("classification needs at least two classes");
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(std::lower_bound(m.classes.begin(), m.classes.end(), static_cast<int>(targets[i])) -
                              m.classes.begin());
    }
    const int K = static_cast<int>(m.classes.size());
    std::vector<double> yd(y.begin(), y.end());
    switch (spec.kind) {
      case ModelKind::knn: m.state = KnnState{Xs, yd}; break;
      case ModelKind::naive_bayes: m.state = detail::fit_naive_bayes(Xs, y, K); break;
      case ModelKind::decision_tree: {
        std::vector<std::size_t> rows(n);
        std::iota(rows.begin(), rows.end(), 0);
        detail::TreeParams p{h.max_depth, h.min_samples_split,
                             h.max_features <= 0 ? 0 : static_cast<std::size_t>(h.max_features)};
        std::mt19937_64 rng(h.seed);
        m.state = detail::fit_tree(Xs, rows, yd, K, p, &rng);
        break;
      }
      case ModelKind::random_forest: m.state = detail::fit_forest(Xs, yd, K, h); break;
      case ModelKind::gbt: m.state = detail::fit_boost_classifier(Xs, y, K, h); break;
      case ModelKind::softmax: m.state = detail::fit_softmax(Xs, y, K, h, m.diagnostics); break;
      case ModelKind::svm_linear: m.state = detail::fit_linear_svm(Xs, y, K, h); break;
      case ModelKind::svm_rbf: m.state = detail::fit_kernel_svm(Xs, y, K, resolve_gamma(h, Xs.cols()), h); break;
      case ModelKind::ridge: throw InvalidHyperparam("ridge: classification is not supported");
    }
    return m;
  }

  const double mean = std::accumulate(targets.begin(), targets.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double t : targets) var += (t - mean) * (t - mean);
  var /= static_cast<double>(n);
  if (var < 1e-24) throw DegenerateData("regression target has zero variance");
  switch (spec.kind) {
    case ModelKind::knn: m.state = KnnState{Xs, targets}; break;
    case ModelKind::decision_tree: {
      std::vector<std::size_t> rows(n);
      std::iota(rows.begin(), rows.end(), 0);
      detail::TreeParams p{h.max_depth, h.min_samples_split,
                           h.max_features <= 0 ? 0 : static_cast<std::size_t>(h.max_features)};
      std::mt19937_64 rng(h.seed);
      m.state = detail::fit_tree(Xs, rows, targets, 0, p, &rng);
      break;
    }
    case ModelKind::random_forest: m.state = detail::fit_forest(Xs, targets, 0, h); break;
    case ModelKind::gbt: m.state = detail::fit_boost_regressor(Xs, targets, h); break;
    case ModelKind::ridge: {
      m.target_mean = mean;
      std::vector<double> centred(n);
      for (std::size_t i = 0; i < n; ++i) centred[i] = targets[i] - mean;
      m.state = detail::fit_ridge(Xs, centred, h);
      break;
    }
    case ModelKind::svm_linear:
    case ModelKind::svm_rbf: {
      m.target_mean = mean;
      m.target_scale = std::sqrt(var);
      std::vector<double> scaled(n);
      for (std::size_t i = 0; i < n; ++i) scaled[i] = (targets[i] - mean) / m.target_scale;
      const double eps = h.epsilon / m.target_scale;
      if (spec.kind == ModelKind::svm_linear) {
        m.state = detail::fit_linear_svr(Xs, scaled, eps, h);
      } else {
        m.state = detail::fit_kernel_svr(Xs, scaled, eps, resolve_gamma(h, Xs.cols()), h);
      }
      break;
    }
    case ModelKind::naive_bayes:
    case ModelKind::softmax: throw InvalidHyperparam(to_string(spec.kind) + ": regression is not supported");
  }
  return m;
}

}  // namespace

TrainedModel train(const ModelSpec& spec, const FeatureTable& X, std::span<const int> labels) {
  if (spec.task != Task::classify) throw InvalidHyperparam("integer labels given to a regression spec");
  check_inputs(X, labels.size());
  return fit(spec, X, std::vector<double>(labels.begin(), labels.end()), true);
}

TrainedModel train(const ModelSpec& spec, const FeatureTable& X, std::span<const double> targets) {
  check_inputs(X, targets.size());
  if (spec.task == Task::classify) {
    std::vector<int> labels;
    for (double t : targets) {
      if (t != std::floor(t)) throw DegenerateData("classification labels must be integers");
      labels.push_back(static_cast<int>(t));
    }
    return fit(spec, X, std::vector<double>(targets.begin(), targets.end()), true);
  }
  for (double t : targets) {
    if (!std::isfinite(t)) throw DegenerateData("non-finite regression target");
  }
  return fit(spec, X, std::vector<double>(targets.begin(), targets.end()), false);
}

Prediction predict(const TrainedModel& m, const FeatureTable& X) {
  if (X.names != m.feature_names) {
    throw FeatureMismatch("input columns do not match the model's feature names (" +
                          std::to_string(X.names.size()) + " vs " + std::to_string(m.feature_names.size()) + ")");
  }
  const Matrix Xs = standardize(X.values, m.mean, m.scale);
  const std::size_t n = Xs.rows();
  Prediction out;

  if (m.spec.task == Task::classify) {
    const std::size_t K = m.classes.size();
    Matrix scores(n, K);
    if (const auto* s = std::get_if<KnnState>(&m.state)) {
      const auto k = static_cast<std::size_t>(m.spec.hyper.k);
      for (std::size_t i = 0; i < n; ++i) {
        const auto nb = nearest(s->points, Xs.row(i), k);
        for (auto j : nb) scores(i, static_cast<std::size_t>(s->targets[j])) += 1.0 / static_cast<double>(nb.size());
      }
    } else if (const auto* s = std::get_if<NaiveBayesState>(&m.state)) {
      scores = detail::naive_bayes_scores(*s, Xs);
    } else if (const auto* s = std::get_if<Tree>(&m.state)) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto& v = s->leaf_value(Xs.row(i));
        std::copy(v.begin(), v.end(), scores.row(i).begin());
      }
    } else if (const auto* s = std::get_if<ForestState>(&m.state)) {
      const double w = 1.0 / static_cast<double>(s->trees.size());
      for (std::size_t i = 0; i < n; ++i) {
        for (const auto& t : s->trees) scores(i, detail::argmax(t.leaf_value(Xs.row(i)))) += w;
      }
    } else if (const auto* s = std::get_if<BoostState>(&m.state)) {
      scores = detail::boost_raw(*s, Xs);
      for (std::size_t i = 0; i < n; ++i) detail::softmax_inplace(scores.row(i));
    } else if (const auto* s = std::get_if<LinearState>(&m.state)) {
      scores = detail::linear_raw(*s, Xs);
      if (m.spec.kind == ModelKind::softmax) {
        for (std::size_t i = 0; i < n; ++i) detail::softmax_inplace(scores.row(i));
      }
    } else if (const auto* s = std::get_if<KernelState>(&m.state)) {
      scores = detail::kernel_raw(*s, Xs);
    }
    out.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.labels[i] = m.classes[detail::argmax(scores.row(i))];
    out.scores = std::move(scores);
    return out;
  }

  out.values.assign(n, 0.0);
  if (const auto* s = std::get_if<KnnState>(&m.state)) {
    const auto k = static_cast<std::size_t>(m.spec.hyper.k);
    for (std::size_t i = 0; i < n; ++i) {
      const auto nb = nearest(s->points, Xs.row(i), k);
      double sum = 0.0;
      for (auto j : nb) sum += s->targets[j];
      out.values[i] = sum / static_cast<double>(nb.size());
    }
  } else if (const auto* s = std::get_if<Tree>(&m.state)) {
    for (std::size_t i = 0; i < n; ++i) out.values[i] = s->leaf_value(Xs.row(i))[0];
  } else if (const auto* s = std::get_if<ForestState>(&m.state)) {
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (const auto& t : s->trees) sum += t.leaf_value(Xs.row(i))[0];
      out.values[i] = sum / static_cast<double>(s->trees.size());
    }
  } else if (const auto* s = std::get_if<BoostState>(&m.state)) {
    const Matrix raw = detail::boost_raw(*s, Xs);
    for (std::size_t i = 0; i < n; ++i) out.values[i] = raw(i, 0);
  } else {
    const Matrix raw = std::holds_alternative<LinearState>(m.state)
                           ? detail::linear_raw(std::get<LinearState>(m.state), Xs)
                           : detail::kernel_raw(std::get<KernelState>(m.state), Xs);
    for (std::size_t i = 0; i < n; ++i) out.values[i] = m.target_mean + m.target_scale * raw(i, 0);
  }
  return out;
}

std::vector<std::vector<int>> train_ensemble(const std::vector<ModelSpec>& specs, const FeatureTable& X,
                                             std::span<const int> labels, std::size_t k, std::uint64_t seed) {
  if (specs.empty()) throw InvalidHyperparam("ensemble needs at least one model");
  if (X.rows() != labels.size()) throw LengthMismatch(X.rows(), labels.size());
  const auto folds = make_folds(labels, k, seed);
  std::vector<std::vector<int>> out(labels.size(), std::vector<int>(specs.size(), 0));
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto& fold = folds[f];
    const auto train_x = X.select_rows(fold.train);
    const auto test_x = X.select_rows(fold.test);
    std::vector<int> train_y;
    for (auto i : fold.train) train_y.push_back(labels[i]);
    for (std::size_t j = 0; j < specs.size(); ++j) {
      ModelSpec spec = specs[j];
      spec.hyper.seed = util::derive_seed(util::derive_seed(seed, f), j);
      const auto model = train(spec, train_x, train_y);
      const auto pred = predict(model, test_x);
      for (std::size_t t = 0; t < fold.test.size(); ++t) out[fold.test[t]][j] = pred.labels[t];
    }
  }
  return out;
}

std::vector<ModelSpec> cleaning_ensemble(std::uint64_t seed) {
  std::vector<ModelSpec> specs;
  for (auto kind : {ModelKind::svm_rbf, ModelKind::random_forest, ModelKind::knn, ModelKind::softmax, ModelKind::gbt}) {
    auto s = ModelSpec::defaults(kind);
    s.hyper.seed = seed;
    specs.push_back(s);
  }
  return specs;
}

}  // namespace qiraa
