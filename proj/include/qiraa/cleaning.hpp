#pragma once

#include <cstddef>
#include <cstdio>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qiraa/cefr.hpp"
#include "qiraa/corpus.hpp"
#include "qiraa/json_io.hpp"

namespace qiraa {

enum class TriageTag { Wrong, Modify, Ambiguous, False };
enum class TriageStatus { pending, decided };

std::string to_string(TriageTag t);
std::optional<TriageTag> parse_tag(std::string_view s);
std::string to_string(TriageStatus s);

struct EnsembleVote {
  std::string model;
  int cls = 0;
  std::string label;  // class name under the dataset's scheme
};

struct TriageItem {
  std::string sentence_id;
  std::string text;
  CefrLabel gold;
  int gold_class = 0;
  int consensus_class = 0;
  std::string consensus_label;
  std::vector<EnsembleVote> votes;
  TriageStatus status = TriageStatus::pending;
};

struct TriageDecision {
  std::string sentence_id;
  TriageTag tag = TriageTag::Wrong;
  std::optional<CefrLabel> new_label;  // present iff tag == Modify
  std::string annotator;
  std::string timestamp;  // ISO-8601 UTC
};

json to_json(const TriageItem& item);
TriageItem triage_item_from_json(const json& j);
json to_json(const TriageDecision& d);
/// Throws InvalidDecision on an unknown tag or malformed field and
/// MissingNewLabel when a Modify has no new_label.
TriageDecision triage_decision_from_json(const json& j);

/// Row indices whose predictions contain at least `threshold` identical
/// labels that differ from gold. preds is n x 5.
std::vector<std::size_t> disagreement_rows(const std::vector<std::vector<int>>& preds, std::span<const int> gold,
                                           int threshold = 5);

/// Items for the labelled sentences of `d` (rows of preds align with
/// d.labelled()), ordered by sentence_id.
std::vector<TriageItem> flag_disagreements(const Dataset& d, const std::vector<std::vector<int>>& preds,
                                           const std::vector<std::string>& model_names, int threshold = 5);

struct Change {
  std::string sentence_id;
  std::optional<CefrLabel> before;
  std::optional<CefrLabel> after;  // nullopt when the sentence was removed
};

using ChangeLog = std::vector<Change>;

json to_json(const ChangeLog& log);

/// Modify relabels, False removes, Wrong and Ambiguous leave the sentence
/// alone. Applying the same list to its own output changes nothing.
std::pair<Dataset, ChangeLog> apply_decisions(const Dataset& d, std::span<const TriageDecision> decisions);

/// Label counts per class name of the dataset's scheme.
std::map<std::string, long long> label_histogram(const Dataset& d);

/// Reads exported decisions, or a store log (amends replayed, one decision
/// per sentence).
std::vector<TriageDecision> read_decisions(std::string_view jsonl);
std::string write_decisions(std::span<const TriageDecision> decisions);

/// Append-only JSONL decision log over a fixed set of flagged items. Every
/// append is flushed and synced before it returns.
class TriageStore {
 public:
  TriageStore(std::string log_path, std::vector<TriageItem> items);
  ~TriageStore();
  TriageStore(const TriageStore&) = delete;
  TriageStore& operator=(const TriageStore&) = delete;

  /// Throws UnknownSentence, DuplicateDecision, MissingNewLabel or
  /// InvalidDecision.
  void append(TriageDecision d);
  /// Replaces an existing decision; throws UnknownSentence when there is
  /// none to replace.
  void amend(TriageDecision d);

  struct Page {
    std::vector<TriageItem> items;
    std::size_t total = 0;
  };
  Page list(std::optional<TriageStatus> status, std::size_t offset = 0, std::size_t limit = 50) const;
  std::optional<TriageItem> item(const std::string& id) const;
  std::optional<TriageDecision> decision(const std::string& id) const;

  struct Stats {
    std::map<std::string, long long> tags;
    std::size_t pending = 0;
    std::size_t decided = 0;
    std::size_t total = 0;
  };
  Stats stats() const;

  /// Current decisions, one per decided item, ordered by sentence_id.
  std::vector<TriageDecision> export_decisions() const;

 private:
  void validate(const TriageDecision& d) const;
  void write_line(const json& line);

  std::string path_;
  std::vector<TriageItem> items_;  // ordered by sentence_id
  std::map<std::string, std::size_t, std::less<>> index_;
  std::map<std::string, TriageDecision, std::less<>> decisions_;
  std::FILE* file_ = nullptr;
  mutable std::shared_mutex mu_;
};

json to_json(const TriageStore::Stats& s);

std::vector<TriageItem> read_triage_items(std::string_view json_text);
std::string write_triage_items(std::span<const TriageItem> items, int threshold);

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

}  // namespace qiraa
