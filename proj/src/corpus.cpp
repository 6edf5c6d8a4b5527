#include "qiraa/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "qiraa/errors.hpp"
#include "qiraa/util.hpp"

namespace qiraa {

namespace {

bool truthy(std::string_view v) { return v == "1" || v == "y" || v == "yes" || v == "true"; }

Aspect parse_aspect(std::string_view v) {
  if (v == "p" || v == "perfective" || v == "prf") return Aspect::perfective;
  if (v == "i" || v == "imperfective" || v == "ipf") return Aspect::imperfective;
  if (v == "c" || v == "command" || v == "imperative") return Aspect::command;
  return Aspect::none;
}

Voice parse_voice(std::string_view v) {
  if (v == "a" || v == "active") return Voice::active;
  if (v == "p" || v == "passive") return Voice::passive;
  return Voice::none;
}

Morph parse_feats(std::string_view col) {
  Morph m;
  if (col == "_" || col.empty()) return m;
  for (auto item : util::split(col, '|')) {
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) continue;
    const auto key = item.substr(0, eq);
    const auto val = item.substr(eq + 1);
    if (key == "asp") {
      m.aspect = parse_aspect(val);
    } else if (key == "vox") {
      m.voice = parse_voice(val);
    } else if (key == "per") {
      m.person = (val == "1") ? 1 : (val == "2") ? 2 : (val == "3") ? 3 : 0;
    } else if (key == "prop") {
      m.proper = truthy(val);
    } else if (key == "num") {
      m.numeric = truthy(val);
    } else if (key == "comp") {
      m.comparative = truthy(val);
    }
  }
  return m;
}

std::string format_feats(const Morph& m) {
  std::vector<std::string> parts;
  switch (m.aspect) {
    case Aspect::perfective: parts.emplace_back("asp=p"); break;
    case Aspect::imperfective: parts.emplace_back("asp=i"); break;
    case Aspect::command: parts.emplace_back("asp=c"); break;
    case Aspect::none: break;
  }
  if (m.voice == Voice::active) parts.emplace_back("vox=a");
  if (m.voice == Voice::passive) parts.emplace_back("vox=p");
  if (m.person != 0) parts.push_back("per=" + std::to_string(m.person));
  if (m.proper) parts.emplace_back("prop=1");
  if (m.numeric) parts.emplace_back("num=1");
  if (m.comparative) parts.emplace_back("comp=1");
  if (parts.empty()) return "_";
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += '|';
    out += parts[i];
  }
  return out;
}

int parse_seg(std::string_view misc, std::size_t line_no) {
  if (misc == "_" || misc.empty()) return 1;
  for (auto item : util::split(misc, '|')) {
    if (item.substr(0, 4) == "seg=") {
      long long v = 0;
      if (!util::parse_int(item.substr(4), v) || v < 1) throw MalformedLine(line_no, "seg must be a positive integer");
      return static_cast<int>(v);
    }
  }
  return 1;
}

struct PendingSentence {
  AnnotatedSentence s;
  std::vector<std::size_t> token_lines;
  std::size_t first_line = 0;
  std::optional<std::string> raw_label;
  bool has_content = false;
};

void finish(PendingSentence& p, Dataset& d) {
  if (p.s.tokens.empty()) {
    p = PendingSentence{};
    return;
  }
  if (p.s.id.empty()) p.s.id = "s" + std::to_string(d.sentences.size() + 1);
  if (p.raw_label) {
    auto label = CefrLabel::parse(*p.raw_label);
    if (!label) throw UnknownLabel(p.s.id, *p.raw_label);
    p.s.gold = *label;
  }
  const std::size_t n = p.s.tokens.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (p.s.tokens[i].head > n) throw MalformedLine(p.token_lines[i], "head out of range");
  }
  validate(p.s);
  d.sentences.push_back(std::move(p.s));
  p = PendingSentence{};
}

}  // namespace

std::string AnnotatedSentence::text() const {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t.form;
  }
  return out;
}

std::vector<std::size_t> Dataset::labelled() const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (sentences[i].gold) idx.push_back(i);
  }
  return idx;
}

std::vector<int> Dataset::classes() const {
  std::vector<int> out;
  for (const auto& s : sentences) {
    if (s.gold) out.push_back(class_of(*s.gold, label_scheme));
  }
  return out;
}

const AnnotatedSentence* Dataset::find(std::string_view id) const {
  for (const auto& s : sentences) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

void validate(const AnnotatedSentence& s) {
  const std::size_t n = s.tokens.size();
  if (n == 0) throw FormatError("sentence '" + s.id + "' has no tokens");
  for (std::size_t i = 0; i < n; ++i) {
    const Token& t = s.tokens[i];
    if (t.index != i + 1) throw FormatError("sentence '" + s.id + "' has non-contiguous token indices");
    if (t.head > n) throw FormatError("sentence '" + s.id + "' has a head out of range");
    if (t.head == t.index) throw CyclicTree(s.id);
    if (t.seg_count < 1) throw FormatError("sentence '" + s.id + "' has seg_count < 1");
  }
  // A chain longer than n steps must revisit a node.
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t cur = i + 1;
    std::size_t steps = 0;
    while (cur != 0) {
      cur = s.tokens[cur - 1].head;
      if (++steps > n) throw CyclicTree(s.id);
    }
  }
}

std::vector<int> token_depths(const AnnotatedSentence& s) {
  const std::size_t n = s.tokens.size();
  std::vector<int> depth(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> chain;
    std::size_t cur = i + 1;
    while (cur != 0 && depth[cur - 1] < 0) {
      chain.push_back(cur);
      if (chain.size() > n) throw CyclicTree(s.id);
      cur = s.tokens[cur - 1].head;
    }
    int base = (cur == 0) ? -1 : depth[cur - 1];
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) depth[*it - 1] = ++base;
  }
  return depth;
}

Dataset parse_annotated(std::istream& in, LabelScheme scheme) {
  Dataset d;
  d.label_scheme = scheme;
  PendingSentence p;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (util::trim(line).empty()) {
      finish(p, d);
      continue;
    }
    if (line.front() == '#') {
      auto body = util::trim(line.substr(1));
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) continue;
      const auto key = util::trim(body.substr(0, eq));
      const auto val = std::string(util::trim(body.substr(eq + 1)));
      if (key == "sent_id") {
        p.s.id = val;
      } else if (key == "cefr") {
        p.raw_label = val;
      } else if (key == "source") {
        p.s.source = val;
      } else if (key == "genre") {
        p.s.genre = val;
      }
      continue;
    }
    const auto cols = util::split(line, '\t');
    if (cols.size() != 10) {
      throw MalformedLine(line_no, "expected 10 tab-separated columns, got " + std::to_string(cols.size()));
    }
    // Multiword ranges and empty nodes are not part of the token sequence.
    if (cols[0].find_first_of("-.") != std::string_view::npos) continue;
    long long id = 0;
    long long head = 0;
    if (!util::parse_int(cols[0], id) || id < 1) throw MalformedLine(line_no, "bad token id");
    if (!util::parse_int(cols[6], head) || head < 0) throw MalformedLine(line_no, "bad head");
    if (static_cast<std::size_t>(id) != p.s.tokens.size() + 1) {
      throw MalformedLine(line_no, "token ids must be contiguous from 1");
    }
    Token t;
    t.index = static_cast<std::size_t>(id);
    t.form = std::string(cols[1]);
    t.lemma = std::string(cols[2]);
    t.pos = std::string(cols[3]);
    t.feats = parse_feats(cols[5]);
    t.head = static_cast<std::size_t>(head);
    t.deprel = cols[7] == "_" ? std::string() : std::string(cols[7]);
    t.seg_count = parse_seg(cols[9], line_no);
    if (t.head == t.index) {
      if (p.s.id.empty()) p.s.id = "s" + std::to_string(d.sentences.size() + 1);
      throw CyclicTree(p.s.id);
    }
    p.s.tokens.push_back(std::move(t));
    p.token_lines.push_back(line_no);
  }
  finish(p, d);
  return d;
}

Dataset parse_annotated(std::string_view text, LabelScheme scheme) {
  std::istringstream in{std::string(text)};
  return parse_annotated(in, scheme);
}

Dataset load_dataset(const std::string& path, LabelScheme scheme) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset '" + path + "'");
  return parse_annotated(in, scheme);
}

std::string serialize(const AnnotatedSentence& s) {
  std::ostringstream out;
  out << "# sent_id = " << s.id << '\n';
  if (s.gold) out << "# cefr = " << s.gold->str() << '\n';
  if (!s.source.empty()) out << "# source = " << s.source << '\n';
  if (s.genre) out << "# genre = " << *s.genre << '\n';
  for (const auto& t : s.tokens) {
    out << t.index << '\t' << t.form << '\t' << t.lemma << '\t' << (t.pos.empty() ? "_" : t.pos) << "\t_\t"
        << format_feats(t.feats) << '\t' << t.head << '\t' << (t.deprel.empty() ? "_" : t.deprel) << "\t_\t";
    if (t.seg_count != 1) {
      out << "seg=" << t.seg_count;
    } else {
      out << '_';
    }
    out << '\n';
  }
  out << '\n';
  return out.str();
}

std::string serialize(const Dataset& d) {
  std::string out;
  for (const auto& s : d.sentences) out += serialize(s);
  return out;
}

std::vector<Fold> stratified_folds(std::span<const int> classes, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error("k must be at least 2");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < classes.size(); ++i) by_class[classes[i]].push_back(i);
  for (const auto& [cls, members] : by_class) {
    if (members.size() < k) throw TooFewInstances(cls, members.size(), k);
  }
  std::mt19937_64 rng(seed);
  std::vector<Fold> folds(k);
  // Dealing the class-grouped, shuffled sequence round-robin keeps every
  // class and every fold size within one instance of its share.
  std::size_t pos = 0;
  for (auto& [cls, members] : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t idx : members) folds[pos++ % k].test.push_back(idx);
  }
  for (auto& f : folds) {
    std::sort(f.test.begin(), f.test.end());
    std::vector<char> in_test(classes.size(), 0);
    for (auto i : f.test) in_test[i] = 1;
    for (std::size_t i = 0; i < classes.size(); ++i) {
      if (!in_test[i]) f.train.push_back(i);
    }
  }
  return folds;
}

std::vector<Fold> stratified_folds(const Dataset& d, std::size_t k, std::uint64_t seed) {
  const auto idx = d.labelled();
  const auto cls = d.classes();
  auto folds = stratified_folds(std::span<const int>(cls), k, seed);
  for (auto& f : folds) {
    for (auto& i : f.train) i = idx[i];
    for (auto& i : f.test) i = idx[i];
  }
  return folds;
}

std::vector<Fold> make_folds(std::span<const int> classes, std::size_t k, std::uint64_t seed) {
  const std::size_t n = classes.size();
  if (k != n || n < 2) return stratified_folds(classes, k, seed);
  std::vector<Fold> folds(n);
  for (std::size_t i = 0; i < n; ++i) {
    folds[i].test = {i};
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) folds[i].train.push_back(j);
    }
  }
  return folds;
}

std::vector<Fold> shuffled_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2 || k > n) throw Error("k must lie in [2, n]");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Fold> folds(k);
  for (std::size_t p = 0; p < n; ++p) folds[p % k].test.push_back(order[p]);
  for (auto& f : folds) {
    std::sort(f.test.begin(), f.test.end());
    std::vector<char> in_test(n, 0);
    for (auto i : f.test) in_test[i] = 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_test[i]) f.train.push_back(i);
    }
  }
  return folds;
}

std::uint64_t fold_hash(std::span<const Fold> folds) {
  std::uint64_t h = util::fnv1a("folds");
  for (const auto& f : folds) {
    for (auto i : f.test) {
      const auto v = static_cast<std::uint64_t>(i);
      h = util::fnv1a(std::string_view(reinterpret_cast<const char*>(&v), sizeof v), h);
    }
    h = util::fnv1a("|", h);
  }
  return h;
}

}  // namespace qiraa
