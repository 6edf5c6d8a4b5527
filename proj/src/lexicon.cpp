#include "qiraa/lexicon.hpp"

#include <algorithm>

#include "qiraa/errors.hpp"
#include "qiraa/util.hpp"

namespace qiraa {

namespace {

// Minimal UTF-8 walk; malformed bytes pass through unchanged.
char32_t next_codepoint(std::string_view s, std::size_t& i, std::size_t& len) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) { return static_cast<unsigned char>(s[i + k]) & 0x3F; };
  if (b0 < 0x80) {
    len = 1;
    return b0;
  }
  if ((b0 & 0xE0) == 0xC0 && i + 1 < s.size()) {
    len = 2;
    return ((b0 & 0x1F) << 6) | cont(1);
  }
  if ((b0 & 0xF0) == 0xE0 && i + 2 < s.size()) {
    len = 3;
    return ((b0 & 0x0F) << 12) | (cont(1) << 6) | cont(2);
  }
  if ((b0 & 0xF8) == 0xF0 && i + 3 < s.size()) {
    len = 4;
    return ((b0 & 0x07) << 18) | (cont(1) << 12) | (cont(2) << 6) | cont(3);
  }
  len = 1;
  return b0;
}

}  // namespace

std::string normalize_lemma(std::string_view lemma) {
  lemma = util::trim(lemma);
  std::string out;
  out.reserve(lemma.size());
  std::size_t i = 0;
  while (i < lemma.size()) {
    std::size_t len = 1;
    const char32_t cp = next_codepoint(lemma, i, len);
    if (cp >= 0x064B && cp <= 0x0652) {
      i += len;
      continue;
    }
    if (cp == 0x0622 || cp == 0x0623 || cp == 0x0625) {
      out += "\xD8\xA7";  // U+0627
    } else {
      out.append(lemma.substr(i, len));
    }
    i += len;
  }
  return out;
}

CefrLexicon CefrLexicon::merge(const std::vector<LexiconList>& lists) {
  CefrLexicon lex;
  for (const auto& list : lists) {
    for (const auto& [lemma, label] : list.entries) {
      auto key = normalize_lemma(lemma);
      if (key.empty()) throw EmptyLemma(list.source_id);
      if (lex.entries_.emplace(key, label).second) lex.provenance_.emplace(std::move(key), list.source_id);
    }
  }
  return lex;
}

std::optional<CefrLabel> CefrLexicon::lookup(std::string_view lemma) const {
  auto it = entries_.find(normalize_lemma(lemma));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> CefrLexicon::provenance(std::string_view lemma) const {
  auto it = provenance_.find(normalize_lemma(lemma));
  if (it == provenance_.end()) return std::nullopt;
  return it->second;
}

std::vector<LexiconList> CefrLexicon::as_lists() const {
  std::vector<LexiconList> lists;
  for (const auto& [lemma, label] : entries_) {
    const auto& src = provenance_.at(lemma);
    auto it = std::find_if(lists.begin(), lists.end(), [&](const LexiconList& l) { return l.source_id == src; });
    if (it == lists.end()) {
      lists.push_back({src, {}});
      it = std::prev(lists.end());
    }
    it->entries.emplace_back(lemma, label);
  }
  return lists;
}

CefrLexicon parse_lexicon_tsv(std::string_view text, const std::vector<std::string>& precedence) {
  std::vector<LexiconList> groups;
  auto group_for = [&](const std::string& src) -> LexiconList& {
    for (auto& g : groups) {
      if (g.source_id == src) return g;
    }
    groups.push_back({src, {}});
    return groups.back();
  };
  std::size_t line_no = 0;
  for (auto line : util::split(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (util::trim(line).empty() || line.front() == '#') continue;
    const auto cols = util::split(line, '\t');
    if (cols.size() < 2 || cols.size() > 3) throw MalformedLine(line_no, "expected lemma<TAB>level<TAB>source");
    const auto label = CefrLabel::parse(util::trim(cols[1]));
    if (!label) throw MalformedLine(line_no, "unknown CEFR level '" + std::string(cols[1]) + "'");
    const std::string src = cols.size() == 3 ? std::string(util::trim(cols[2])) : std::string("default");
    if (util::trim(cols[0]).empty()) throw EmptyLemma(src);
    group_for(src).entries.emplace_back(std::string(cols[0]), *label);
  }
  std::stable_sort(groups.begin(), groups.end(), [&](const LexiconList& a, const LexiconList& b) {
    auto rank = [&](const std::string& s) {
      auto it = std::find(precedence.begin(), precedence.end(), s);
      return static_cast<std::size_t>(it - precedence.begin());
    };
    return rank(a.source_id) < rank(b.source_id);
  });
  return CefrLexicon::merge(groups);
}

CefrLexicon load_lexicon(const std::string& path, const std::vector<std::string>& precedence) {
  return parse_lexicon_tsv(util::read_file(path), precedence);
}

std::string lexicon_to_tsv(const CefrLexicon& lex) {
  std::string out;
  for (const auto& [lemma, label] : lex.entries()) {
    out += lemma + '\t' + label.str() + '\t' + lex.provenance_map().at(lemma) + '\n';
  }
  return out;
}

ConnectorLists::ConnectorLists(const std::vector<std::string>& simple, const std::vector<std::string>& complex) {
  for (const auto& s : simple) {
    auto key = normalize_lemma(s);
    if (!key.empty()) simple_.insert(std::move(key));
  }
  for (const auto& c : complex) {
    auto key = normalize_lemma(c);
    if (key.empty()) continue;
    if (simple_.count(key)) throw FormatError("connector '" + c + "' is in both the simple and complex lists");
    complex_.insert(std::move(key));
  }
}

ConnectorKind ConnectorLists::classify(std::string_view lemma) const {
  const auto key = normalize_lemma(lemma);
  if (simple_.count(key)) return ConnectorKind::Simple;
  if (complex_.count(key)) return ConnectorKind::Complex;
  return ConnectorKind::None;
}

std::vector<std::string> parse_word_list(std::string_view text) {
  std::vector<std::string> out;
  for (auto line : util::split(text, '\n')) {
    line = util::trim(line);
    if (line.empty() || line.front() == '#') continue;
    out.emplace_back(line);
  }
  return out;
}

ConnectorLists load_connectors(const std::string& simple_path, const std::string& complex_path) {
  return ConnectorLists(parse_word_list(util::read_file(simple_path)), parse_word_list(util::read_file(complex_path)));
}

}  // namespace qiraa
