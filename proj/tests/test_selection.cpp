#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "qiraa/errors.hpp"
#include "qiraa/features.hpp"
#include "qiraa/selection.hpp"
#include "testkit.hpp"

using namespace qiraa;

namespace {

/// Columns named after real linguistic features plus a small embedding
/// block; only the embedding carries the class.
testkit::Labelled grouped_table(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  const auto& names = feature_names();
  testkit::Labelled out;
  out.X.names = {names[0], names[3], names[4], names[21], names[25], names[27], names[33], "emb_0", "emb_1", "emb_2"};
  out.X.values = Matrix(n, out.X.names.size());
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % 2);
    out.y.push_back(c);
    for (std::size_t j = 0; j < out.X.names.size(); ++j) {
      const bool signal = j >= 7;
      out.X.values(i, j) = g(rng) + (signal ? 2.5 * (c == 0 ? -1.0 : 1.0) : 0.0);
    }
  }
  return out;
}

}  // namespace

TEST(Units, EmbeddingBlockIsOneUnit) {
  const auto units = selection_units({"ttr_forms", "emb_0", "noun_rate", "emb_1"});
  EXPECT_EQ(units, (std::vector<std::string>{"ttr_forms", kEmbeddingUnit, "noun_rate"}));
}

TEST(Rfe, PlantedLabelColumnRanksFirst) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  FeatureTable X{testkit::generic_names(5, "f"), Matrix(200, 5)};
  std::vector<int> y;
  for (std::size_t i = 0; i < 200; ++i) {
    y.push_back(static_cast<int>(i % 2));
    for (std::size_t j = 0; j < 5; ++j) X.values(i, j) = g(rng);
    X.values(i, 1) = y.back();
  }
  for (auto kind : {ModelKind::svm_linear, ModelKind::softmax, ModelKind::decision_tree}) {
    auto spec = ModelSpec::defaults(kind);
    RfeOptions opt;
    opt.seed = 5;
    const auto r = rfe(spec, X, y, opt);
    ASSERT_EQ(r.ranking.size(), 5u);
    EXPECT_EQ(r.ranking[0], "f1") << to_string(kind);
    EXPECT_EQ(r.elimination_trace.size(), 4u);
  }
}

TEST(Rfe, RankingIsPermutationAndDeterministic) {
  const auto p = testkit::planted_features(200, 3, 9, 4);
  auto spec = ModelSpec::defaults(ModelKind::svm_linear);
  RfeOptions opt;
  opt.step = 2;
  opt.target_count = 3;
  opt.seed = 11;
  const auto a = rfe(spec, p.data.X, p.data.y, opt);
  const auto b = rfe(spec, p.data.X, p.data.y, opt);
  EXPECT_EQ(a.ranking, b.ranking);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  auto sorted = a.ranking;
  std::sort(sorted.begin(), sorted.end());
  auto names = p.data.X.names;
  std::sort(names.begin(), names.end());
  EXPECT_EQ(sorted, names);
  std::size_t removed = 0;
  for (const auto& s : a.elimination_trace) {
    EXPECT_LE(s.removed.size(), 2u);
    removed += s.removed.size();
  }
  EXPECT_EQ(removed, 9u);
}

TEST(Rfe, TargetEqualToUnitCountRemovesNothing) {
  const auto p = testkit::planted_features(120, 2, 3, 9);
  RfeOptions opt;
  opt.target_count = 5;
  const auto r = rfe(ModelSpec::defaults(ModelKind::svm_linear), p.data.X, p.data.y, opt);
  EXPECT_TRUE(r.elimination_trace.empty());
  EXPECT_EQ(r.ranking.size(), 5u);
  const std::set<std::string> top(r.ranking.begin(), r.ranking.begin() + 2);
  EXPECT_EQ(top, std::set<std::string>(p.informative.begin(), p.informative.end()));
}

TEST(Rfe, EmbeddingEliminatedAtomically) {
  const auto t = grouped_table(200, 2);
  RfeOptions opt;
  opt.seed = 1;
  opt.validation_folds = 0;
  const auto r = rfe(ModelSpec::defaults(ModelKind::svm_linear), t.X, t.y, opt);
  EXPECT_EQ(r.ranking.size(), 8u);
  EXPECT_EQ(r.ranking[0], kEmbeddingUnit);
  for (const auto& name : r.ranking) EXPECT_NE(name.rfind("emb_", 0), 0u);
}

TEST(Rfe, InvalidOptions) {
  const auto p = testkit::planted_features(50, 2, 2, 1);
  RfeOptions opt;
  opt.step = 0;
  EXPECT_THROW(rfe(ModelSpec::defaults(ModelKind::svm_linear), p.data.X, p.data.y, opt), InvalidHyperparam);
  opt.step = 1;
  opt.target_count = 9;
  EXPECT_THROW(rfe(ModelSpec::defaults(ModelKind::svm_linear), p.data.X, p.data.y, opt), InvalidHyperparam);
}

TEST(Ablation, NoiseGroupBarelyMattersSignalGroupDoes) {
  const auto t = grouped_table(300, 7);
  const auto r = ablate(ModelSpec::defaults(ModelKind::svm_linear), t.X, t.y,
                        {FeatureGroup::POS, FeatureGroup::Syntactic, FeatureGroup::CEFR, FeatureGroup::Embedding}, 5, 3);
  ASSERT_EQ(r.rows.size(), 5u);
  for (const auto& row : r.rows) EXPECT_EQ(row.fold_hash, r.full.fold_hash) << row.label;
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(r.rows[i].f1, r.full.f1, 0.02) << r.rows[i].label;
  EXPECT_EQ(r.rows[3].excluded, FeatureGroup::Embedding);
  EXPECT_LT(r.rows[3].f1, 0.65);
  EXPECT_EQ(r.rows[4].label, "only Embedding");
  EXPECT_EQ(r.rows[4].columns, 3u);
  EXPECT_GE(r.rows[4].f1, r.rows[3].f1);
  EXPECT_NE(ablation_table(r).find("only Embedding"), std::string::npos);
}

TEST(Ablation, NeedsEmbeddingColumns) {
  const auto p = testkit::planted_features(60, 2, 2, 1);
  EXPECT_THROW(ablate(ModelSpec::defaults(ModelKind::svm_linear), p.data.X, p.data.y, {FeatureGroup::POS}, 3, 1),
               DegenerateData);
}
