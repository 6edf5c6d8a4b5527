#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "qiraa/errors.hpp"
#include "qiraa/evaluation.hpp"
#include "qiraa/models.hpp"
#include "testkit.hpp"

using namespace qiraa;

namespace qiraa {
void PrintTo(ModelKind k, std::ostream* os) { *os << to_string(k); }
}  // namespace qiraa

namespace {

const std::vector<ModelKind> kClassifiers = {ModelKind::knn,          ModelKind::naive_bayes, ModelKind::decision_tree,
                                             ModelKind::random_forest, ModelKind::gbt,         ModelKind::softmax,
                                             ModelKind::svm_linear,   ModelKind::svm_rbf};
const std::vector<ModelKind> kRegressors = {ModelKind::knn,        ModelKind::decision_tree, ModelKind::random_forest,
                                            ModelKind::gbt,        ModelKind::svm_linear,    ModelKind::svm_rbf,
                                            ModelKind::ridge};

double accuracy(const std::vector<int>& a, const std::vector<int>& b) {
  double hit = 0;
  for (std::size_t i = 0; i < a.size(); ++i) hit += a[i] == b[i] ? 1 : 0;
  return hit / static_cast<double>(a.size());
}

bool bit_identical(const Prediction& a, const Prediction& b) {
  auto same = [](const std::vector<double>& x, const std::vector<double>& y) {
    return x.size() == y.size() && std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) == 0;
  };
  return a.labels == b.labels && same(a.scores.data(), b.scores.data()) && same(a.values, b.values);
}

}  // namespace

class EveryClassifier : public ::testing::TestWithParam<ModelKind> {};

TEST_P(EveryClassifier, SeparatesBlobsAndRoundTrips) {
  const auto data = testkit::blobs(240, 3, 3, 7.0, 2);
  auto spec = ModelSpec::defaults(GetParam());
  spec.hyper.seed = 4;
  const auto m = train(spec, data.X, data.y);
  const auto p = predict(m, data.X);
  EXPECT_GE(accuracy(p.labels, data.y), 0.97);
  EXPECT_EQ(p.scores.rows(), 240u);
  EXPECT_EQ(p.scores.cols(), 3u);

  const auto back = deserialize_model(serialize_model(m));
  EXPECT_TRUE(bit_identical(p, predict(back, data.X)));
  EXPECT_EQ(serialize_model(back), serialize_model(m));
}

TEST_P(EveryClassifier, SameSeedSameModel) {
  const auto data = testkit::blobs(90, 3, 3, 4.0, 8);
  auto spec = ModelSpec::defaults(GetParam());
  spec.hyper.seed = 12;
  EXPECT_EQ(serialize_model(train(spec, data.X, data.y)), serialize_model(train(spec, data.X, data.y)));
}

TEST_P(EveryClassifier, RescaledColumnKeepsLabels) {
  const auto data = testkit::blobs(150, 3, 3, 6.0, 21);
  auto scaled = data.X;
  for (std::size_t i = 0; i < scaled.rows(); ++i) scaled.values(i, 1) = 40.0 * scaled.values(i, 1) - 7.0;
  auto spec = ModelSpec::defaults(GetParam());
  spec.hyper.seed = 3;
  const auto a = predict(train(spec, data.X, data.y), data.X).labels;
  const auto b = predict(train(spec, scaled, data.y), scaled).labels;
  EXPECT_GE(accuracy(a, b), 0.99);
}

INSTANTIATE_TEST_SUITE_P(Models, EveryClassifier, ::testing::ValuesIn(kClassifiers),
                         [](const auto& info) { return to_string(info.param); });

class EveryRegressor : public ::testing::TestWithParam<ModelKind> {};

TEST_P(EveryRegressor, FitsLinearTarget) {
  const auto data = testkit::linear_data(200, 3, 0.05, 6);
  auto spec = ModelSpec::defaults(GetParam(), Task::regress);
  spec.hyper.seed = 1;
  const auto m = train(spec, data.X, data.y);
  const auto p = predict(m, data.X);
  ASSERT_EQ(p.values.size(), 200u);
  EXPECT_GE(*pearson(data.y, p.values), 0.9);
  EXPECT_TRUE(bit_identical(p, predict(deserialize_model(serialize_model(m)), data.X)));
}

INSTANTIATE_TEST_SUITE_P(Models, EveryRegressor, ::testing::ValuesIn(kRegressors),
                         [](const auto& info) { return to_string(info.param); });

TEST(Models, LinearSvmOnTwoGaussians) {
  const auto data = testkit::blobs(200, 2, 2, 8.0, 31);
  const auto m = train(ModelSpec::defaults(ModelKind::svm_linear), data.X, data.y);
  EXPECT_GE(accuracy(predict(m, data.X).labels, data.y), 0.99);
}

TEST(Models, OneNeighbourReproducesTrainingLabels) {
  const auto data = testkit::blobs(120, 3, 4, 1.0, 17);
  auto spec = ModelSpec::defaults(ModelKind::knn);
  spec.hyper.k = 1;
  EXPECT_EQ(predict(train(spec, data.X, data.y), data.X).labels, data.y);
}

TEST(Models, UnregularizedSoftmaxOnSeparableData) {
  const auto data = testkit::blobs(300, 3, 2, 12.0, 41);
  auto spec = ModelSpec::defaults(ModelKind::softmax);
  spec.hyper.lambda = 0.0;
  const auto p = predict(train(spec, data.X, data.y), data.X);
  EXPECT_GE(weighted_prf(confusion(data.y, p.labels)).macro_f1, 0.99);
}

TEST(Models, SingleTreeForestEqualsTree) {
  const auto data = testkit::blobs(150, 3, 4, 2.0, 5);
  auto tree = ModelSpec::defaults(ModelKind::decision_tree);
  tree.hyper.seed = 9;
  auto forest = ModelSpec::defaults(ModelKind::random_forest);
  forest.hyper.seed = 9;
  forest.hyper.n_trees = 1;
  forest.hyper.bootstrap = false;
  forest.hyper.max_features = 0;
  const auto a = predict(train(tree, data.X, data.y), data.X);
  const auto b = predict(train(forest, data.X, data.y), data.X);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.scores, b.scores);
}

TEST(Models, ConstantLabelsAreDegenerate) {
  const auto data = testkit::blobs(20, 1, 2, 0.0, 1);
  EXPECT_THROW(train(ModelSpec::defaults(ModelKind::softmax), data.X, data.y), DegenerateData);
  std::vector<double> flat(20, 2.0);
  EXPECT_THROW(train(ModelSpec::defaults(ModelKind::ridge, Task::regress), data.X, std::span<const double>(flat)),
               DegenerateData);
}

TEST(Models, HyperparameterValidation) {
  auto spec = ModelSpec::defaults(ModelKind::knn);
  spec.hyper.k = 0;
  EXPECT_THROW(spec.validate(), InvalidHyperparam);
  spec = ModelSpec::defaults(ModelKind::svm_rbf);
  spec.hyper.lambda = 0.0;
  EXPECT_THROW(spec.validate(), InvalidHyperparam);
  spec = ModelSpec::defaults(ModelKind::svm_rbf);
  spec.hyper.gamma = -1.0;
  EXPECT_THROW(spec.validate(), InvalidHyperparam);
  EXPECT_THROW(ModelSpec::defaults(ModelKind::naive_bayes, Task::regress).validate(), InvalidHyperparam);
  EXPECT_THROW(ModelSpec::defaults(ModelKind::ridge, Task::classify).validate(), InvalidHyperparam);
}

TEST(Models, PermutedColumnsRejected) {
  const auto data = testkit::blobs(60, 2, 3, 5.0, 2);
  const auto m = train(ModelSpec::defaults(ModelKind::knn), data.X, data.y);
  const std::vector<std::size_t> perm = {1, 0, 2};
  EXPECT_THROW(predict(m, data.X.select_cols(perm)), FeatureMismatch);
}

TEST(Models, FullBatchLossNeverIncreases) {
  const auto data = testkit::blobs(150, 3, 3, 2.0, 13);
  auto spec = ModelSpec::defaults(ModelKind::softmax);
  spec.hyper.batch_size = 0;
  spec.hyper.epochs = 40;
  const auto m = train(spec, data.X, data.y);
  const auto& h = m.diagnostics.loss_history;
  ASSERT_EQ(h.size(), 40u);
  for (std::size_t i = 1; i < h.size(); ++i) EXPECT_LE(h[i], h[i - 1] + 1e-12) << "epoch " << i;
}

TEST(Models, SoftmaxGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix X(25, 4);
    std::vector<int> y;
    for (std::size_t i = 0; i < 25; ++i) {
      for (std::size_t j = 0; j < 4; ++j) X(i, j) = g(rng);
      y.push_back(static_cast<int>(i % 3));
    }
    Matrix W(3, 5);
    for (auto& w : W.data()) w = g(rng);
    Matrix grad;
    detail::softmax_objective(W, X, y, 0.05, &grad);
    for (std::size_t k = 0; k < W.data().size(); ++k) {
      Matrix wp = W, wm = W;
      wp.data()[k] += 1e-6;
      wm.data()[k] -= 1e-6;
      const double num = (detail::softmax_objective(wp, X, y, 0.05, nullptr) -
                          detail::softmax_objective(wm, X, y, 0.05, nullptr)) /
                         2e-6;
      const double a = grad.data()[k];
      EXPECT_LE(std::fabs(a - num), 1e-5 * std::max(1e-3, std::fabs(a) + std::fabs(num)));
    }
  }
}

TEST(Ensemble, LeaveOneOutNearestOther) {
  Matrix v(6, 1);
  const double xs[] = {0.0, 0.1, 5.0, 5.2, 9.0, 9.5};
  for (std::size_t i = 0; i < 6; ++i) v(i, 0) = xs[i];
  FeatureTable X{{"x"}, v};
  const std::vector<int> y = {0, 1, 1, 0, 2, 0};
  auto spec = ModelSpec::defaults(ModelKind::knn);
  spec.hyper.k = 1;
  const auto preds = train_ensemble(std::vector<ModelSpec>(5, spec), X, y, 6, 1);
  const std::vector<int> nearest_other = {1, 0, 0, 1, 0, 2};
  for (std::size_t i = 0; i < 6; ++i) {
    ASSERT_EQ(preds[i].size(), 5u);
    for (int p : preds[i]) EXPECT_EQ(p, nearest_other[i]) << "row " << i;
  }
}

TEST(Ensemble, SignOfFirstFeature) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  FeatureTable X{{"a", "b", "c"}, Matrix(300, 3)};
  std::vector<int> y;
  for (std::size_t i = 0; i < 300; ++i) {
    for (std::size_t j = 0; j < 3; ++j) X.values(i, j) = g(rng);
    if (std::fabs(X.values(i, 0)) < 0.1) X.values(i, 0) += X.values(i, 0) < 0 ? -0.1 : 0.1;
    y.push_back(X.values(i, 0) > 0 ? 1 : 0);
  }
  const auto preds = train_ensemble(cleaning_ensemble(7), X, y, 5, 7);
  ASSERT_EQ(preds.size(), 300u);
  for (std::size_t c = 0; c < 5; ++c) {
    double hit = 0;
    for (std::size_t i = 0; i < 300; ++i) hit += preds[i][c] == y[i] ? 1 : 0;
    EXPECT_GE(hit / 300.0, 0.95) << "model " << c;
  }
}

TEST(Serialization, VersionedEnvelope) {
  const auto data = testkit::blobs(40, 2, 2, 5.0, 3);
  const auto text = serialize_model(train(ModelSpec::defaults(ModelKind::naive_bayes), data.X, data.y));
  EXPECT_NE(text.find("\"format_version\":1"), std::string::npos);
  EXPECT_THROW(deserialize_model("{\"format_version\":99}"), Error);
  EXPECT_THROW(deserialize_model("not json"), Error);
}
