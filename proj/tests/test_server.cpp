#include <gtest/gtest.h>

#include <unistd.h>

#include <filesystem>
#include <thread>

#include "httplib.h"
#include "qiraa/app.hpp"
#include "qiraa/cleaning.hpp"
#include "qiraa/corpus.hpp"
#include "qiraa/features.hpp"
#include "qiraa/server.hpp"
#include "qiraa/util.hpp"
#include "testkit.hpp"

using namespace qiraa;
namespace fs = std::filesystem;

namespace {

/// Every golden sentence flagged with a unanimous vote for the next class.
std::vector<TriageItem> golden_items(const Dataset& d) {
  std::vector<std::vector<int>> preds;
  for (auto i : d.labelled()) {
    preds.push_back(std::vector<int>(5, (class_of(*d.sentences[i].gold, d.label_scheme) + 1) % 3));
  }
  return flag_disagreements(d, preds, {"svm_rbf", "random_forest", "knn", "softmax", "gbt"});
}

class Running {
 public:
  Running(TriageStore& store, ServeConfig cfg, const TrainedModel* model = nullptr,
          const app::LoadedResources* res = nullptr)
      : server(store, [&] {
          cfg.port = 0;
          return cfg;
        }(), model, res) {
    port = server.bind();
    thread = std::thread([this] { server.serve(); });
    server.wait_until_ready();
  }
  ~Running() {
    server.stop();
    thread.join();
  }
  httplib::Client client() const { return httplib::Client("127.0.0.1", port); }

  ApiServer server;
  int port = -1;
  std::thread thread;
};

class ServerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("qiraa-server-" + std::to_string(::getpid()) + "-" +
                                       ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir);
    golden = load_dataset(testkit::fixture_path("golden.conllu"));
    store = std::make_unique<TriageStore>((dir / "log.jsonl").string(), golden_items(golden));
  }
  void TearDown() override {
    store.reset();
    fs::remove_all(dir);
  }

  fs::path dir;
  Dataset golden;
  std::unique_ptr<TriageStore> store;
};

json body_of(const httplib::Result& r) { return json::parse(r->body); }

}  // namespace

TEST_F(ServerTest, DecisionLifecycle) {
  Running run(*store, {});
  ASSERT_GT(run.port, 0);
  auto c = run.client();

  auto health = c.Get("/api/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);

  auto list = c.Get("/api/triage");
  ASSERT_TRUE(list);
  EXPECT_EQ(body_of(list).at("total"), 5);
  EXPECT_EQ(body_of(c.Get("/api/stats")).at("pending"), 5);

  auto created = c.Post("/api/triage/g1/decision", R"({"tag":"Modify","new_label":"A2","annotator":"r1"})",
                        "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 201);
  EXPECT_EQ(body_of(created).at("new_label"), "A2");

  const auto stats = body_of(c.Get("/api/stats"));
  EXPECT_EQ(stats.at("pending"), 4);
  EXPECT_EQ(stats.at("decided"), 1);

  auto dup = c.Post("/api/triage/g1/decision", R"({"tag":"Wrong"})", "application/json");
  EXPECT_EQ(dup->status, 409);

  auto amended = c.Put("/api/triage/g1/decision", R"({"tag":"Ambiguous"})", "application/json");
  EXPECT_EQ(amended->status, 200);
  EXPECT_EQ(body_of(amended).at("tag"), "Ambiguous");
  EXPECT_EQ(store->decision("g1")->tag, TriageTag::Ambiguous);

  auto item = body_of(c.Get("/api/triage/g1"));
  EXPECT_EQ(item.at("decision").at("tag"), "Ambiguous");
  EXPECT_EQ(body_of(c.Get("/api/triage?status=decided")).at("total"), 1);
  EXPECT_EQ(body_of(c.Get("/api/triage?status=all")).at("total"), 5);
  EXPECT_EQ(c.Get("/api/triage?status=bogus")->status, 400);
}

TEST_F(ServerTest, RejectsBadDecisions) {
  Running run(*store, {});
  auto c = run.client();
  EXPECT_EQ(c.Post("/api/triage/nope/decision", R"({"tag":"Wrong"})", "application/json")->status, 404);
  EXPECT_EQ(c.Get("/api/triage/nope")->status, 404);
  EXPECT_EQ(c.Post("/api/triage/g2/decision", R"({"tag":"Modify"})", "application/json")->status, 422);
  EXPECT_EQ(c.Post("/api/triage/g2/decision", R"({"tag":"Maybe"})", "application/json")->status, 422);
  EXPECT_EQ(c.Post("/api/triage/g2/decision", "{not json", "application/json")->status, 400);
  EXPECT_EQ(c.Put("/api/triage/g2/decision", R"({"tag":"Wrong"})", "application/json")->status, 404);
  EXPECT_EQ(body_of(c.Get("/api/stats")).at("pending"), 5);
}

TEST_F(ServerTest, TokenGuardsApi) {
  ServeConfig cfg;
  cfg.token = "s3cret";
  Running run(*store, cfg);
  auto c = run.client();
  EXPECT_EQ(c.Get("/api/stats")->status, 401);
  EXPECT_EQ(c.Get("/api/stats", {{"X-Qiraa-Token", "wrong"}})->status, 401);
  EXPECT_EQ(c.Get("/api/stats", {{"X-Qiraa-Token", "s3cret"}})->status, 200);
}

TEST_F(ServerTest, PredictWithoutModelIsUnavailable) {
  Running run(*store, {});
  auto c = run.client();
  EXPECT_EQ(c.Post("/api/predict", serialize(golden.sentences[0]), "text/plain")->status, 503);
}

TEST_F(ServerTest, PredictMatchesFeaturize) {
  app::ResourcePaths paths;
  paths.lexicon = testkit::fixture_path("golden_lexicon.tsv");
  paths.connectors_simple = testkit::fixture_path("connectors_simple.txt");
  paths.connectors_complex = testkit::fixture_path("connectors_complex.txt");
  app::InputLog inputs;
  const auto res = app::load_resources(paths, inputs, nullptr, golden.label_scheme);
  const auto rows = app::labelled_rows(golden, featurize(golden, res.features));
  auto spec = ModelSpec::defaults(ModelKind::knn);
  spec.hyper.k = 1;
  auto model = train(spec, rows.X, rows.classes);
  model.label_scheme = golden.label_scheme;

  Running run(*store, {}, &model, &res);
  auto c = run.client();
  for (const auto& s : golden.sentences) {
    auto r = c.Post("/api/predict", serialize(s), "text/plain");
    ASSERT_TRUE(r);
    ASSERT_EQ(r->status, 200) << r->body;
    const auto body = body_of(r);
    EXPECT_EQ(body.at("sentence_id"), s.id);
    EXPECT_EQ(body.at("features"), app::feature_values(featurize(s, res.features)));
    EXPECT_EQ(body.at("class"), class_of(*s.gold, golden.label_scheme));
  }
  const json wrapped = {{"conllu", serialize(golden.sentences[2])}};
  auto r = c.Post("/api/predict", wrapped.dump(), "application/json");
  EXPECT_EQ(body_of(r).at("sentence_id"), "g3");
  EXPECT_EQ(c.Post("/api/predict", "# sent_id = x\n1\tbroken\n", "text/plain")->status, 422);
  EXPECT_EQ(c.Post("/api/predict", R"({"text":1})", "application/json")->status, 400);
}
