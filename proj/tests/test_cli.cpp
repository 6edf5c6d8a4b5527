#include <gtest/gtest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <set>
#include <sstream>

#include "qiraa/cleaning.hpp"
#include "qiraa/cli.hpp"
#include "qiraa/corpus.hpp"
#include "qiraa/features.hpp"
#include "qiraa/json_io.hpp"
#include "qiraa/util.hpp"
#include "testkit.hpp"

using namespace qiraa;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = qiraa::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

/// Six relabelled copies of every golden sentence: 12 A, 12 B, 6 C.
class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("qiraa-cli-" + std::to_string(::getpid()) + "-" +
                                       ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir);
    const auto golden = load_dataset(testkit::fixture_path("golden.conllu"));
    Dataset d;
    for (int copy = 0; copy < 6; ++copy) {
      for (const auto& s : golden.sentences) {
        auto c = s;
        c.id = s.id + "_" + std::to_string(copy);
        d.sentences.push_back(c);
      }
    }
    corpus = path("corpus.conllu");
    util::write_file_atomic(corpus, serialize(d));
  }
  void TearDown() override { fs::remove_all(dir); }

  std::string path(const std::string& name) const { return (dir / name).string(); }

  std::vector<std::string> resources() const {
    return {"--lexicon",           testkit::fixture_path("golden_lexicon.tsv"),
            "--connectors-simple", testkit::fixture_path("connectors_simple.txt"),
            "--connectors-complex", testkit::fixture_path("connectors_complex.txt")};
  }

  std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) const {
    head.insert(head.end(), tail.begin(), tail.end());
    return head;
  }

  fs::path dir;
  std::string corpus;
};

}  // namespace

TEST_F(CliTest, CvIsDeterministicAndWritesManifest) {
  const auto a = invoke(with({"cv", "--data", corpus, "--k", "3", "--seed", "42", "--out", path("a.json")}, resources()));
  ASSERT_EQ(a.code, 0) << a.err;
  const auto b = invoke(with({"cv", "--data", corpus, "--k", "3", "--seed", "42", "--out", path("b.json")}, resources()));
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(util::read_file(path("a.json")), util::read_file(path("b.json")));
  EXPECT_NE(a.out.find("svm_rbf"), std::string::npos) << a.out;

  const auto report = json::parse(util::read_file(path("a.json")));
  EXPECT_EQ(report.at("k"), 3);
  EXPECT_EQ(report.at("report").at("fold_seeds").size(), 3u);

  const auto manifest = json::parse(util::read_file(path("a.json.manifest.json")));
  EXPECT_EQ(manifest.at("seed"), 42);
  EXPECT_EQ(manifest.at("command"), "cv");
  const auto digest = util::hex64(util::fnv1a(util::read_file(corpus)));
  EXPECT_EQ(manifest.at("inputs").at("data").at("fnv1a64"), digest);
  EXPECT_TRUE(manifest.at("inputs").contains("lexicon"));
}

TEST_F(CliTest, MissingLexiconIsDataErrorWithoutOutput) {
  const auto r = invoke({"train", "--data", corpus, "--lexicon", path("absent.tsv"), "--out", path("model.json")});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(fs::exists(path("model.json")));
  EXPECT_NE(r.err.find("absent.tsv"), std::string::npos);
}

TEST_F(CliTest, UsageErrorsExitTwoWithHelp) {
  const auto bad_flag = invoke({"cv", "--bogus"});
  EXPECT_EQ(bad_flag.code, 2);
  EXPECT_NE(bad_flag.err.find("--k"), std::string::npos);
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"clean", "flag", "--threshold", "7"}).code, 2);
  const auto bad_param =
      invoke(with({"cv", "--data", corpus, "--param", "nonsense=1", "--out", path("x.json")}, resources()));
  EXPECT_EQ(bad_param.code, 2);
  EXPECT_EQ(invoke(with({"cv", "--data", corpus, "--scheme", "seven_way", "--out", path("y.json")}, resources())).code, 2);
}

TEST_F(CliTest, MalformedCorpusIsDataError) {
  util::write_file_atomic(path("bad.conllu"), "# sent_id = x\n1\tonly\tthree\n");
  const auto r = invoke(with({"featurize", "--data", path("bad.conllu"), "--out", path("f.csv")}, resources()));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("line 2"), std::string::npos);
}

TEST_F(CliTest, FeaturizeTrainPredictEvaluate) {
  ASSERT_EQ(invoke(with({"featurize", "--data", corpus, "--out", path("f.csv")}, resources())).code, 0);
  std::vector<std::string> ids;
  const auto table = parse_feature_csv(util::read_file(path("f.csv")), ids);
  EXPECT_EQ(table.rows(), 30u);
  EXPECT_EQ(table.cols(), 34u);

  const auto t = invoke({"train", "--data", corpus, "--features", path("f.csv"), "--model", "knn", "--param", "k=1",
                      "--out", path("m.json")});
  ASSERT_EQ(t.code, 0) << t.err;

  const auto p = invoke(with({"predict", "--data", testkit::fixture_path("golden.conllu"), "--model-in", path("m.json"),
                           "--out", path("p.json")},
                          resources()));
  ASSERT_EQ(p.code, 0) << p.err;
  const auto preds = json::parse(util::read_file(path("p.json")));
  ASSERT_EQ(preds.size(), 5u);
  EXPECT_EQ(preds[0].at("level"), "A");
  EXPECT_EQ(preds[3].at("level"), "C");
  EXPECT_EQ(preds[0].at("features").size(), 34u);

  const auto e = invoke(with({"evaluate", "--data", testkit::fixture_path("golden.conllu"), "--model-in", path("m.json"),
                           "--out", path("e.json")},
                          resources()));
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_EQ(json::parse(util::read_file(path("e.json"))).at("report").at("n"), 5);
}

TEST_F(CliTest, RegressReportsCorrelations) {
  const auto r = invoke(with({"regress", "--data", corpus, "--k", "3", "--out", path("r.json")}, resources()));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto body = json::parse(util::read_file(path("r.json")));
  EXPECT_EQ(body.at("model").at("kind"), "ridge");
  EXPECT_TRUE(body.at("report").contains("pearson"));
}

TEST_F(CliTest, CleanFlagFromSavedPredictions) {
  const auto d = load_dataset(corpus);
  json rows = json::array();
  std::set<std::string> expected;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const int gold = class_of(*d.sentences[i].gold, LabelScheme::three_way);
    const bool contradict = i % 7 == 0;
    if (contradict) expected.insert(d.sentences[i].id);
    rows.push_back({{"sentence_id", d.sentences[i].id},
                    {"votes", std::vector<int>(5, contradict ? (gold + 1) % 3 : gold)}});
  }
  const json preds = {{"models", {"svm_rbf", "random_forest", "knn", "softmax", "gbt"}},
                      {"scheme", "three_way"},
                      {"rows", rows}};
  util::write_file_atomic(path("preds.json"), preds.dump());
  const auto r = invoke({"clean", "flag", "--data", corpus, "--predictions", path("preds.json"), "--out", path("t.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto items = read_triage_items(util::read_file(path("t.json")));
  std::set<std::string> got;
  for (const auto& it : items) got.insert(it.sentence_id);
  EXPECT_EQ(got, expected);
}

TEST_F(CliTest, CleanFlagRunsEnsembleAndSavesPredictions) {
  const auto r = invoke(with({"clean", "flag", "--data", corpus, "--k", "3", "--predictions-out", path("p.json"), "--out",
                           path("t.json")},
                          resources()));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto p = json::parse(util::read_file(path("p.json")));
  EXPECT_EQ(p.at("rows").size(), 30u);
  EXPECT_EQ(p.at("models").size(), 5u);
}

TEST_F(CliTest, ApplyAndExportDecisions) {
  const auto d = load_dataset(corpus);
  std::vector<std::vector<int>> preds;
  for (const auto& s : d.sentences) preds.push_back(std::vector<int>(5, (class_of(*s.gold, d.label_scheme) + 1) % 3));
  const auto items = flag_disagreements(d, preds, {"a", "b", "c", "d", "e"});
  util::write_file_atomic(path("t.json"), write_triage_items(items, 5));
  {
    TriageStore store(path("log.jsonl"), items);
    TriageDecision dec;
    dec.sentence_id = "g3_0";
    dec.tag = TriageTag::Modify;
    dec.new_label = CefrLabel(CefrLevel::A2);
    store.append(dec);
    dec.sentence_id = "g4_0";
    dec.tag = TriageTag::False;
    dec.new_label.reset();
    store.append(dec);
  }
  ASSERT_EQ(invoke({"clean", "export", "--triage", path("t.json"), "--log", path("log.jsonl"), "--out",
                 path("decisions.jsonl")})
                .code,
            0);
  const auto r = invoke({"clean", "apply", "--data", corpus, "--decisions", path("decisions.jsonl"), "--out",
                      path("clean.conllu")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto cleaned = load_dataset(path("clean.conllu"));
  EXPECT_EQ(cleaned.size(), 29u);
  EXPECT_EQ(cleaned.find("g3_0")->gold, CefrLabel(CefrLevel::A2));
  const auto changes = json::parse(util::read_file(path("clean.conllu.changes.json")));
  EXPECT_EQ(changes.size(), 2u);
}

TEST_F(CliTest, RfeAndAblate) {
  const auto r = invoke(with({"rfe", "--data", corpus, "--target", "30", "--validation-folds", "0", "--out",
                           path("rfe.json")},
                          resources()));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(util::read_file(path("rfe.json"))).at("ranking").size(), 34u);
  // no embedding block in this configuration
  const auto a = invoke(with({"ablate", "--data", corpus, "--k", "3", "--out", path("abl.json")}, resources()));
  EXPECT_EQ(a.code, 1);
}

TEST_F(CliTest, DataDirFallback) {
  fs::copy_file(corpus, dir / "relative.conllu");
  ::setenv("QIRAA_DATA_DIR", dir.c_str(), 1);
  const auto r = invoke(with({"featurize", "--data", "relative.conllu", "--out", path("f.csv")}, resources()));
  ::unsetenv("QIRAA_DATA_DIR");
  EXPECT_EQ(r.code, 0) << r.err;
}
