#include "qiraa/cleaning.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include "qiraa/errors.hpp"
#include "qiraa/util.hpp"

namespace qiraa {

std::string to_string(TriageTag t) {
  switch (t) {
    case TriageTag::Wrong: return "Wrong";
    case TriageTag::Modify: return "Modify";
    case TriageTag::Ambiguous: return "Ambiguous";
    case TriageTag::False: return "False";
  }
  return "Wrong";
}

std::optional<TriageTag> parse_tag(std::string_view s) {
  if (s == "Wrong") return TriageTag::Wrong;
  if (s == "Modify") return TriageTag::Modify;
  if (s == "Ambiguous") return TriageTag::Ambiguous;
  if (s == "False") return TriageTag::False;
  return std::nullopt;
}

std::string to_string(TriageStatus s) { return s == TriageStatus::pending ? "pending" : "decided"; }

json to_json(const TriageItem& item) {
  json votes = json::array();
  for (const auto& v : item.votes) votes.push_back({{"model", v.model}, {"class", v.cls}, {"label", v.label}});
  return {{"sentence_id", item.sentence_id},
          {"text", item.text},
          {"gold", item.gold.str()},
          {"gold_class", item.gold_class},
          {"consensus_class", item.consensus_class},
          {"consensus_label", item.consensus_label},
          {"votes", votes},
          {"status", to_string(item.status)}};
}

TriageItem triage_item_from_json(const json& j) {
  try {
    TriageItem item;
    item.sentence_id = j.at("sentence_id").get<std::string>();
    item.text = j.at("text").get<std::string>();
    const auto gold = CefrLabel::parse(j.at("gold").get<std::string>());
    if (!gold) throw FormatError("triage item '" + item.sentence_id + "' has an unknown gold label");
    item.gold = *gold;
    item.gold_class = j.at("gold_class").get<int>();
    item.consensus_class = j.at("consensus_class").get<int>();
    item.consensus_label = j.at("consensus_label").get<std::string>();
    for (const auto& v : j.at("votes")) {
      item.votes.push_back({v.at("model").get<std::string>(), v.at("class").get<int>(), v.at("label").get<std::string>()});
    }
    return item;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed triage item: ") + e.what());
  }
}

json to_json(const TriageDecision& d) {
  json j = {{"sentence_id", d.sentence_id}, {"tag", to_string(d.tag)}, {"annotator", d.annotator},
            {"timestamp", d.timestamp}};
  if (d.new_label) j["new_label"] = d.new_label->str();
  return j;
}

TriageDecision triage_decision_from_json(const json& j) {
  if (!j.is_object()) throw InvalidDecision("decision must be a JSON object");
  auto text_field = [&](const char* key, bool required) -> std::optional<std::string> {
    if (!j.contains(key) || j.at(key).is_null()) {
      if (required) throw InvalidDecision(std::string("decision is missing '") + key + "'");
      return std::nullopt;
    }
    if (!j.at(key).is_string()) throw InvalidDecision(std::string("decision field '") + key + "' must be a string");
    return j.at(key).get<std::string>();
  };
  TriageDecision d;
  d.sentence_id = text_field("sentence_id", false).value_or("");
  const auto tag_text = *text_field("tag", true);
  const auto tag = parse_tag(tag_text);
  if (!tag) throw InvalidDecision("unknown tag '" + tag_text + "'");
  d.tag = *tag;
  if (auto nl = text_field("new_label", false)) {
    const auto label = CefrLabel::parse(*nl);
    if (!label) throw InvalidDecision("unknown new_label '" + *nl + "'");
    d.new_label = *label;
  }
  if (d.tag == TriageTag::Modify && !d.new_label) throw MissingNewLabel(d.sentence_id);
  if (d.tag != TriageTag::Modify && d.new_label) throw InvalidDecision("new_label is only allowed with Modify");
  d.annotator = text_field("annotator", false).value_or("");
  d.timestamp = text_field("timestamp", false).value_or("");
  return d;
}

std::vector<std::size_t> disagreement_rows(const std::vector<std::vector<int>>& preds, std::span<const int> gold,
                                           int threshold) {
  if (threshold < 3 || threshold > 5) throw InvalidHyperparam("threshold must be between 3 and 5");
  if (preds.size() != gold.size()) {
    throw ShapeMismatch("prediction rows (" + std::to_string(preds.size()) + ") differ from gold labels (" +
                        std::to_string(gold.size()) + ")");
  }
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].size() != 5) throw ShapeMismatch("row " + std::to_string(i) + " does not hold 5 predictions");
    for (int candidate : preds[i]) {
      const auto agree = std::count(preds[i].begin(), preds[i].end(), candidate);
      if (agree >= threshold) {
        if (candidate != gold[i]) rows.push_back(i);
        break;
      }
    }
  }
  return rows;
}

std::vector<TriageItem> flag_disagreements(const Dataset& d, const std::vector<std::vector<int>>& preds,
                                           const std::vector<std::string>& model_names, int threshold) {
  const auto labelled = d.labelled();
  const auto gold = d.classes();
  if (model_names.size() != 5) throw ShapeMismatch("the ensemble must name 5 models");
  const auto names = class_names(d.label_scheme);
  auto name_of = [&](int c) {
    return c >= 0 && static_cast<std::size_t>(c) < names.size() ? names[static_cast<std::size_t>(c)]
                                                                  : std::to_string(c);
  };
  std::vector<TriageItem> items;
  for (auto r : disagreement_rows(preds, gold, threshold)) {
    const auto& s = d.sentences[labelled[r]];
    TriageItem item;
    item.sentence_id = s.id;
    item.text = s.text();
    item.gold = *s.gold;
    item.gold_class = gold[r];
    for (std::size_t m = 0; m < 5; ++m) item.votes.push_back({model_names[m], preds[r][m], name_of(preds[r][m])});
    for (int c : preds[r]) {
      if (std::count(preds[r].begin(), preds[r].end(), c) >= threshold) {
        item.consensus_class = c;
        break;
      }
    }
    item.consensus_label = name_of(item.consensus_class);
    items.push_back(std::move(item));
  }
  std::stable_sort(items.begin(), items.end(),
                   [](const TriageItem& a, const TriageItem& b) { return a.sentence_id < b.sentence_id; });
  return items;
}

json to_json(const ChangeLog& log) {
  json arr = json::array();
  for (const auto& c : log) {
    arr.push_back({{"sentence_id", c.sentence_id},
                   {"before", c.before ? json(c.before->str()) : json(nullptr)},
                   {"after", c.after ? json(c.after->str()) : json(nullptr)}});
  }
  return arr;
}

std::pair<Dataset, ChangeLog> apply_decisions(const Dataset& d, std::span<const TriageDecision> decisions) {
  std::map<std::string, const TriageDecision*, std::less<>> by_id;
  for (const auto& dec : decisions) {
    if (dec.tag == TriageTag::Modify && !dec.new_label) throw MissingNewLabel(dec.sentence_id);
    if (!by_id.emplace(dec.sentence_id, &dec).second) throw DuplicateDecision(dec.sentence_id);
    if (!d.find(dec.sentence_id) && dec.tag != TriageTag::False) throw UnknownSentence(dec.sentence_id);
  }
  Dataset out;
  out.label_scheme = d.label_scheme;
  ChangeLog log;
  for (const auto& s : d.sentences) {
    auto it = by_id.find(s.id);
    if (it == by_id.end()) {
      out.sentences.push_back(s);
      continue;
    }
    const auto& dec = *it->second;
    if (dec.tag == TriageTag::False) {
      log.push_back({s.id, s.gold, std::nullopt});
      continue;
    }
    auto copy = s;
    if (dec.tag == TriageTag::Modify && copy.gold != dec.new_label) {
      log.push_back({s.id, s.gold, dec.new_label});
      copy.gold = dec.new_label;
    }
    out.sentences.push_back(std::move(copy));
  }
  return {std::move(out), std::move(log)};
}

std::map<std::string, long long> label_histogram(const Dataset& d) {
  std::map<std::string, long long> h;
  const auto names = class_names(d.label_scheme);
  for (const auto& n : names) h[n] = 0;
  for (const auto& s : d.sentences) {
    if (s.gold) ++h[names[static_cast<std::size_t>(class_of(*s.gold, d.label_scheme))]];
  }
  return h;
}

std::vector<TriageDecision> read_decisions(std::string_view jsonl) {
  std::vector<TriageDecision> out;
  std::map<std::string, TriageDecision> replayed;  // store log lines, later entries win
  bool log_format = false;
  std::size_t line_no = 0;
  for (auto line : util::split(jsonl, '\n')) {
    ++line_no;
    line = util::trim(line);
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      if (j.is_object() && j.contains("op")) {
        log_format = true;
        auto d = triage_decision_from_json(j.at("decision"));
        replayed.insert_or_assign(d.sentence_id, std::move(d));
      } else {
        out.push_back(triage_decision_from_json(j));
      }
    } catch (const json::exception& e) {
      throw MalformedLine(line_no, e.what());
    }
  }
  if (log_format) {
    if (!out.empty()) throw FormatError("decision file mixes log entries and plain decisions");
    for (auto& [id, d] : replayed) out.push_back(std::move(d));
  }
  return out;
}

std::string write_decisions(std::span<const TriageDecision> decisions) {
  std::string out;
  for (const auto& d : decisions) out += to_json(d).dump() + "\n";
  return out;
}

TriageStore::TriageStore(std::string log_path, std::vector<TriageItem> items)
    : path_(std::move(log_path)), items_(std::move(items)) {
  std::stable_sort(items_.begin(), items_.end(),
                   [](const TriageItem& a, const TriageItem& b) { return a.sentence_id < b.sentence_id; });
  for (std::size_t i = 0; i < items_.size(); ++i) {
    items_[i].status = TriageStatus::pending;
    if (!index_.emplace(items_[i].sentence_id, i).second) throw DuplicateId(items_[i].sentence_id);
  }

  if (std::filesystem::exists(path_)) {
    const auto text = util::read_file(path_);
    std::size_t good_end = 0;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
      const auto nl = text.find('\n', pos);
      ++line_no;
      if (nl == std::string::npos) break;  // torn final write, dropped below
      const auto line = util::trim(std::string_view(text).substr(pos, nl - pos));
      if (!line.empty()) {
        json entry;
        try {
          entry = json::parse(line);
        } catch (const json::exception& e) {
          throw MalformedLine(line_no, std::string("decision log: ") + e.what());
        }
        auto dec = triage_decision_from_json(entry.at("decision"));
        if (!index_.contains(dec.sentence_id)) {
          throw FormatError("decision log references unknown item '" + dec.sentence_id + "'");
        }
        decisions_.insert_or_assign(dec.sentence_id, std::move(dec));
      }
      pos = nl + 1;
      good_end = pos;
    }
    if (good_end < text.size()) std::filesystem::resize_file(path_, good_end);
  }
  for (const auto& [id, dec] : decisions_) items_[index_.at(id)].status = TriageStatus::decided;

  file_ = std::fopen(path_.c_str(), "ab");
  if (!file_) throw Error("cannot open decision log '" + path_ + "'");
}

TriageStore::~TriageStore() {
  if (file_) std::fclose(file_);
}

void TriageStore::validate(const TriageDecision& d) const {
  auto it = index_.find(d.sentence_id);
  if (it == index_.end()) throw UnknownSentence(d.sentence_id);
  if (d.tag == TriageTag::Modify) {
    if (!d.new_label) throw MissingNewLabel(d.sentence_id);
    if (*d.new_label == items_[it->second].gold) throw InvalidDecision("new_label must differ from the gold label");
  } else if (d.new_label) {
    throw InvalidDecision("new_label is only allowed with Modify");
  }
}

void TriageStore::write_line(const json& line) {
  const auto text = line.dump() + "\n";
  if (std::fwrite(text.data(), 1, text.size(), file_) != text.size() || std::fflush(file_) != 0 ||
      ::fsync(::fileno(file_)) != 0) {
    throw Error("failed to write decision log '" + path_ + "'");
  }
}

void TriageStore::append(TriageDecision d) {
  std::unique_lock lock(mu_);
  validate(d);
  if (decisions_.contains(d.sentence_id)) throw DuplicateDecision(d.sentence_id);
  if (d.timestamp.empty()) d.timestamp = utc_timestamp();
  write_line({{"op", "decide"}, {"decision", to_json(d)}});
  items_[index_.at(d.sentence_id)].status = TriageStatus::decided;
  decisions_.emplace(d.sentence_id, std::move(d));
}

void TriageStore::amend(TriageDecision d) {
  std::unique_lock lock(mu_);
  validate(d);
  auto it = decisions_.find(d.sentence_id);
  if (it == decisions_.end()) throw UnknownSentence(d.sentence_id);
  if (d.timestamp.empty()) d.timestamp = utc_timestamp();
  write_line({{"op", "amend"}, {"decision", to_json(d)}});
  it->second = std::move(d);
}

TriageStore::Page TriageStore::list(std::optional<TriageStatus> status, std::size_t offset, std::size_t limit) const {
  std::shared_lock lock(mu_);
  Page page;
  for (const auto& item : items_) {
    if (status && item.status != *status) continue;
    if (page.total >= offset && page.items.size() < limit) page.items.push_back(item);
    ++page.total;
  }
  return page;
}

std::optional<TriageItem> TriageStore::item(const std::string& id) const {
  std::shared_lock lock(mu_);
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return items_[it->second];
}

std::optional<TriageDecision> TriageStore::decision(const std::string& id) const {
  std::shared_lock lock(mu_);
  auto it = decisions_.find(id);
  if (it == decisions_.end()) return std::nullopt;
  return it->second;
}

TriageStore::Stats TriageStore::stats() const {
  std::shared_lock lock(mu_);
  Stats s;
  for (auto t : {TriageTag::Wrong, TriageTag::Modify, TriageTag::Ambiguous, TriageTag::False}) s.tags[to_string(t)] = 0;
  for (const auto& [id, d] : decisions_) ++s.tags[to_string(d.tag)];
  s.total = items_.size();
  s.decided = decisions_.size();
  s.pending = s.total - s.decided;
  return s;
}

std::vector<TriageDecision> TriageStore::export_decisions() const {
  std::shared_lock lock(mu_);
  std::vector<TriageDecision> out;
  for (const auto& [id, d] : decisions_) out.push_back(d);
  return out;
}

json to_json(const TriageStore::Stats& s) {
  return {{"tags", s.tags}, {"pending", s.pending}, {"decided", s.decided}, {"total", s.total}};
}

std::vector<TriageItem> read_triage_items(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("triage file is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("items") || !j.at("items").is_array()) {
    throw FormatError("triage file needs an 'items' array");
  }
  std::vector<TriageItem> items;
  for (const auto& it : j.at("items")) items.push_back(triage_item_from_json(it));
  return items;
}

std::string write_triage_items(std::span<const TriageItem> items, int threshold) {
  json arr = json::array();
  for (const auto& it : items) arr.push_back(to_json(it));
  return json{{"threshold", threshold}, {"count", items.size()}, {"items", arr}}.dump(2) + "\n";
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace qiraa
