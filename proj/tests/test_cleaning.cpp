#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <csignal>
#include <filesystem>
#include <fstream>

#include "qiraa/cleaning.hpp"
#include "qiraa/errors.hpp"
#include "qiraa/models.hpp"
#include "qiraa/util.hpp"
#include "testkit.hpp"

using namespace qiraa;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kModels = {"svm_rbf", "random_forest", "knn", "softmax", "gbt"};

Dataset three_class_corpus(std::size_t n) {
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "s%03zu", i);
    d.sentences.push_back(testkit::tiny_sentence(id, testkit::level_for_class(static_cast<int>(i % 3))));
  }
  return d;
}

TriageDecision decision(const std::string& id, TriageTag tag, std::optional<CefrLevel> to = std::nullopt) {
  TriageDecision d;
  d.sentence_id = id;
  d.tag = tag;
  if (to) d.new_label = CefrLabel(*to);
  d.annotator = "tester";
  d.timestamp = "2026-01-01T00:00:00Z";
  return d;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("qiraa-clean-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

std::vector<TriageItem> sample_items() {
  const auto d = three_class_corpus(6);
  std::vector<std::vector<int>> preds;
  for (std::size_t i = 0; i < 6; ++i) {
    const int other = (static_cast<int>(i) + 1) % 3;
    preds.push_back(std::vector<int>(5, other));
  }
  return flag_disagreements(d, preds, kModels, 5);
}

}  // namespace

TEST(Flag, UnanimousContradiction) {
  const std::vector<std::vector<int>> preds = {{1, 1, 1, 1, 1}, {1, 1, 1, 0, 0}, {0, 0, 0, 0, 0}};
  const std::vector<int> gold = {0, 0, 0};
  EXPECT_EQ(disagreement_rows(preds, gold, 5), (std::vector<std::size_t>{0}));
  EXPECT_EQ(disagreement_rows(preds, gold, 3), (std::vector<std::size_t>{0, 1}));
}

TEST(Flag, FourOfFiveNeedsLowerThreshold) {
  const std::vector<std::vector<int>> preds = {{2, 2, 2, 2, 0}};
  const std::vector<int> gold = {0};
  EXPECT_TRUE(disagreement_rows(preds, gold, 5).empty());
  EXPECT_EQ(disagreement_rows(preds, gold, 4).size(), 1u);
}

TEST(Flag, ShapeAndThresholdChecks) {
  const std::vector<std::vector<int>> short_row = {{1, 1, 1, 1}};
  const std::vector<int> gold = {0};
  EXPECT_THROW(disagreement_rows(short_row, gold, 5), ShapeMismatch);
  EXPECT_THROW(disagreement_rows({{1, 1, 1, 1, 1}}, std::vector<int>{0, 1}, 5), ShapeMismatch);
  EXPECT_THROW(disagreement_rows({{1, 1, 1, 1, 1}}, gold, 2), InvalidHyperparam);
  EXPECT_THROW(disagreement_rows({{1, 1, 1, 1, 1}}, gold, 6), InvalidHyperparam);
}

TEST(Flag, ItemsCarryVotesAndSortById) {
  auto d = three_class_corpus(9);
  std::reverse(d.sentences.begin(), d.sentences.end());
  std::vector<std::vector<int>> preds;
  for (std::size_t i = 0; i < 9; ++i) {
    const int gold = class_of(*d.sentences[i].gold, d.label_scheme);
    preds.push_back(i % 2 == 0 ? std::vector<int>(5, (gold + 1) % 3) : std::vector<int>(5, gold));
  }
  const auto items = flag_disagreements(d, preds, kModels);
  ASSERT_EQ(items.size(), 5u);
  EXPECT_TRUE(std::is_sorted(items.begin(), items.end(),
                             [](const auto& a, const auto& b) { return a.sentence_id < b.sentence_id; }));
  for (const auto& it : items) {
    ASSERT_EQ(it.votes.size(), 5u);
    EXPECT_EQ(it.votes[2].model, "knn");
    EXPECT_EQ(it.consensus_class, (it.gold_class + 1) % 3);
    EXPECT_EQ(it.votes[0].label, class_names(LabelScheme::three_way)[static_cast<std::size_t>(it.consensus_class)]);
    EXPECT_EQ(it.status, TriageStatus::pending);
  }
  EXPECT_EQ(flag_disagreements(d, preds, kModels).size(), items.size());
}

TEST(Flag, PlantedContradictionsAmongHundred) {
  const auto d = three_class_corpus(100);
  std::vector<std::vector<int>> preds;
  std::set<std::string> planted;
  for (std::size_t i = 0; i < 100; ++i) {
    const int gold = static_cast<int>(i % 3);
    if (i % 6 == 1 && planted.size() < 17) {
      preds.push_back(std::vector<int>(5, (gold + 2) % 3));
      planted.insert(d.sentences[i].id);
    } else if (i % 5 == 0) {
      preds.push_back({(gold + 1) % 3, (gold + 1) % 3, (gold + 1) % 3, (gold + 1) % 3, gold});
    } else {
      preds.push_back(std::vector<int>(5, gold));
    }
  }
  ASSERT_EQ(planted.size(), 17u);
  const auto items = flag_disagreements(d, preds, kModels, 5);
  std::set<std::string> got;
  for (const auto& it : items) got.insert(it.sentence_id);
  EXPECT_EQ(got, planted);
}

TEST(Flag, RealEnsembleFindsSparseLabelNoise) {
  const auto data = testkit::blobs(90, 3, 3, 10.0, 5);
  auto d = three_class_corpus(0);
  std::vector<int> noisy = data.y;
  const std::set<std::size_t> flipped = {4, 40, 77};
  for (auto i : flipped) noisy[i] = (noisy[i] + 1) % 3;
  for (std::size_t i = 0; i < 90; ++i) {
    d.sentences.push_back(testkit::tiny_sentence("r" + std::to_string(100 + i), testkit::level_for_class(noisy[i])));
  }
  const auto specs = cleaning_ensemble(5);
  const auto preds = train_ensemble(specs, data.X, noisy, 10, 5);
  const auto items = flag_disagreements(d, preds, kModels, 5);
  std::set<std::string> got, want;
  for (const auto& it : items) got.insert(it.sentence_id);
  for (auto i : flipped) want.insert(d.sentences[i].id);
  EXPECT_EQ(got, want);
}

TEST(Apply, ModifyFalseWrongAmbiguous) {
  const auto d = three_class_corpus(6);
  const std::vector<TriageDecision> ds = {decision("s001", TriageTag::Modify, CefrLevel::A2),
                                          decision("s002", TriageTag::False), decision("s003", TriageTag::Wrong),
                                          decision("s004", TriageTag::Ambiguous)};
  const auto [out, log] = apply_decisions(d, ds);
  EXPECT_EQ(out.size(), 5u);
  EXPECT_EQ(out.find("s001")->gold, CefrLabel(CefrLevel::A2));
  EXPECT_EQ(out.find("s002"), nullptr);
  EXPECT_EQ(*out.find("s003"), *d.find("s003"));
  ASSERT_EQ(log.size(), 2u);
  EXPECT_EQ(log[0].sentence_id, "s001");
  EXPECT_EQ(log[0].before, CefrLabel(CefrLevel::B1));
  EXPECT_EQ(log[0].after, CefrLabel(CefrLevel::A2));
  EXPECT_FALSE(log[1].after);
}

TEST(Apply, OnlyWrongLeavesDatasetAlone) {
  const auto d = three_class_corpus(6);
  const std::vector<TriageDecision> ds = {decision("s000", TriageTag::Wrong), decision("s005", TriageTag::Wrong)};
  const auto [out, log] = apply_decisions(d, ds);
  EXPECT_EQ(out, d);
  EXPECT_TRUE(log.empty());
}

TEST(Apply, HistogramShiftsByDeltasAndIsIdempotent) {
  const auto d = three_class_corpus(30);
  auto want = label_histogram(d);
  std::vector<TriageDecision> ds;
  for (std::size_t i = 1; i < 30; i += 3) {
    ds.push_back(decision(d.sentences[i].id, TriageTag::Modify, CefrLevel::A1));
    want["B"] -= 1;
    want["A"] += 1;
  }
  ds.push_back(decision("s002", TriageTag::False));
  want["C"] -= 1;
  const auto [out, log] = apply_decisions(d, ds);
  EXPECT_EQ(label_histogram(out), want);
  EXPECT_GT(want["A"], label_histogram(d)["A"]);
  const auto [again, log2] = apply_decisions(out, ds);
  EXPECT_EQ(again, out);
  EXPECT_TRUE(log2.empty());
}

TEST(Apply, Errors) {
  const auto d = three_class_corpus(3);
  const std::vector<TriageDecision> unknown = {decision("nope", TriageTag::Wrong)};
  EXPECT_THROW(apply_decisions(d, unknown), UnknownSentence);
  const std::vector<TriageDecision> missing = {decision("s000", TriageTag::Modify)};
  EXPECT_THROW(apply_decisions(d, missing), MissingNewLabel);
  const std::vector<TriageDecision> dup = {decision("s000", TriageTag::Wrong), decision("s000", TriageTag::Ambiguous)};
  EXPECT_THROW(apply_decisions(d, dup), DuplicateDecision);
}

TEST(DecisionJson, ParsesAndRejects) {
  const auto ok = triage_decision_from_json(
      json::parse(R"({"sentence_id":"s1","tag":"Modify","new_label":"A2","annotator":"x","timestamp":"t"})"));
  EXPECT_EQ(ok.tag, TriageTag::Modify);
  EXPECT_EQ(ok.new_label, CefrLabel(CefrLevel::A2));
  EXPECT_THROW(triage_decision_from_json(json::parse(R"({"sentence_id":"s1","tag":"Maybe"})")), InvalidDecision);
  EXPECT_THROW(triage_decision_from_json(json::parse(R"({"sentence_id":"s1","tag":"Modify"})")), MissingNewLabel);
  EXPECT_THROW(triage_decision_from_json(json::parse(R"({"sentence_id":"s1","tag":"Wrong","new_label":"A1"})")),
               InvalidDecision);
  const std::vector<TriageDecision> ds = {decision("a", TriageTag::False), decision("b", TriageTag::Modify, CefrLevel::C2)};
  const auto back = read_decisions(write_decisions(ds));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].new_label, CefrLabel(CefrLevel::C2));
}

TEST(TriageFile, RoundTrip) {
  const auto items = sample_items();
  const auto back = read_triage_items(write_triage_items(items, 5));
  ASSERT_EQ(back.size(), items.size());
  EXPECT_EQ(back[3].votes[4].model, "gbt");
  EXPECT_EQ(back[3].gold, items[3].gold);
  EXPECT_EQ(back[3].text, items[3].text);
}

TEST(Store, AppendListAmendExport) {
  TempDir tmp;
  TriageStore store((tmp.path / "log.jsonl").string(), sample_items());
  EXPECT_EQ(store.list(TriageStatus::pending).total, 6u);
  store.append(decision("s001", TriageTag::Modify, CefrLevel::A1));
  EXPECT_EQ(store.item("s001")->status, TriageStatus::decided);
  EXPECT_EQ(store.list(TriageStatus::pending).total, 5u);
  EXPECT_EQ(store.list(TriageStatus::decided).items.front().sentence_id, "s001");
  EXPECT_THROW(store.append(decision("s001", TriageTag::Wrong)), DuplicateDecision);
  EXPECT_THROW(store.append(decision("zzz", TriageTag::Wrong)), UnknownSentence);
  EXPECT_THROW(store.append(decision("s002", TriageTag::Modify)), MissingNewLabel);
  EXPECT_THROW(store.append(decision("s002", TriageTag::Modify, CefrLevel::C1)), InvalidDecision);
  EXPECT_THROW(store.amend(decision("s004", TriageTag::Wrong)), UnknownSentence);
  store.amend(decision("s001", TriageTag::Ambiguous));
  EXPECT_EQ(store.decision("s001")->tag, TriageTag::Ambiguous);
  const auto stats = store.stats();
  EXPECT_EQ(stats.decided, 1u);
  EXPECT_EQ(stats.pending, 5u);
  EXPECT_EQ(stats.tags.at("Ambiguous"), 1);
  EXPECT_EQ(stats.tags.at("Modify"), 0);

  const auto page = store.list(std::nullopt, 2, 3);
  EXPECT_EQ(page.total, 6u);
  ASSERT_EQ(page.items.size(), 3u);
  EXPECT_EQ(page.items[0].sentence_id, "s002");

  const auto exported = store.export_decisions();
  ASSERT_EQ(exported.size(), 1u);
  EXPECT_EQ(read_decisions(util::read_file((tmp.path / "log.jsonl").string())).front().tag, TriageTag::Ambiguous);
}

TEST(Store, ReopenReplaysLog) {
  TempDir tmp;
  const auto path = (tmp.path / "log.jsonl").string();
  {
    TriageStore store(path, sample_items());
    store.append(decision("s000", TriageTag::Wrong));
    store.append(decision("s003", TriageTag::Modify, CefrLevel::B2));
  }
  TriageStore again(path, sample_items());
  EXPECT_EQ(again.stats().decided, 2u);
  EXPECT_EQ(again.decision("s003")->new_label, CefrLabel(CefrLevel::B2));
  EXPECT_THROW(again.append(decision("s000", TriageTag::False)), DuplicateDecision);
}

TEST(Store, KilledWriterLosesNothingAppended) {
  TempDir tmp;
  const auto path = (tmp.path / "log.jsonl").string();
  int ready[2];
  ASSERT_EQ(::pipe(ready), 0);
  const pid_t pid = ::fork();
  ASSERT_GE(pid, 0);
  if (pid == 0) {
    ::close(ready[0]);
    TriageStore store(path, sample_items());
    store.append(decision("s000", TriageTag::Wrong));
    store.append(decision("s005", TriageTag::Modify, CefrLevel::A1));
    const char byte = 1;
    (void)!::write(ready[1], &byte, 1);
    ::pause();
    ::_exit(0);
  }
  ::close(ready[1]);
  char byte = 0;
  ASSERT_EQ(::read(ready[0], &byte, 1), 1);
  ::kill(pid, SIGKILL);
  int status = 0;
  ::waitpid(pid, &status, 0);
  ::close(ready[0]);
  ASSERT_TRUE(WIFSIGNALED(status));

  TriageStore reopened(path, sample_items());
  EXPECT_EQ(reopened.stats().decided, 2u);
  EXPECT_EQ(reopened.decision("s005")->new_label, CefrLabel(CefrLevel::A1));
}

TEST(Store, TornFinalLineIsDiscarded) {
  TempDir tmp;
  const auto path = (tmp.path / "log.jsonl").string();
  {
    TriageStore store(path, sample_items());
    store.append(decision("s001", TriageTag::Wrong));
  }
  {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    out << R"({"op":"decide","decision":{"sentence_id":"s002","ta)";
  }
  TriageStore store(path, sample_items());
  EXPECT_EQ(store.stats().decided, 1u);
  store.append(decision("s002", TriageTag::False));
  TriageStore again(path, sample_items());
  EXPECT_EQ(again.stats().decided, 2u);
}
