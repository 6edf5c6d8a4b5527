#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qiraa/cefr.hpp"

namespace qiraa {

/// Strips Arabic diacritics (U+064B..U+0652) and folds hamzated/madda alef
/// (U+0622, U+0623, U+0625) to bare alef. Ta marbuta is left alone.
std::string normalize_lemma(std::string_view lemma);

struct LexiconList {
  std::string source_id;
  std::vector<std::pair<std::string, CefrLabel>> entries;
};

class CefrLexicon {
 public:
  /// Earliest list wins for a lemma present in several lists.
  static CefrLexicon merge(const std::vector<LexiconList>& lists);

  std::optional<CefrLabel> lookup(std::string_view lemma) const;
  std::optional<std::string> provenance(std::string_view lemma) const;
  std::size_t size() const { return entries_.size(); }

  /// Keys are normalized lemmas.
  const std::map<std::string, CefrLabel>& entries() const { return entries_; }
  const std::map<std::string, std::string>& provenance_map() const { return provenance_; }

  /// Flattened back into a single list per provenance, in the order given.
  std::vector<LexiconList> as_lists() const;

  friend bool operator==(const CefrLexicon&, const CefrLexicon&) = default;

 private:
  std::map<std::string, CefrLabel> entries_;
  std::map<std::string, std::string> provenance_;
};

inline CefrLexicon merge_lexicons(const std::vector<LexiconList>& lists) { return CefrLexicon::merge(lists); }

/// Default precedence for the three source lists.
inline const std::vector<std::string> kDefaultPrecedence = {"kitaab", "kelly", "buckwalter"};

/// Reads `lemma<TAB>level<TAB>source` rows. Rows are grouped by source and
/// merged in `precedence` order; sources not named there follow in order of
/// first appearance.
CefrLexicon parse_lexicon_tsv(std::string_view text,
                              const std::vector<std::string>& precedence = kDefaultPrecedence);
CefrLexicon load_lexicon(const std::string& path, const std::vector<std::string>& precedence = kDefaultPrecedence);
std::string lexicon_to_tsv(const CefrLexicon& lex);

enum class ConnectorKind { None, Simple, Complex };

class ConnectorLists {
 public:
  ConnectorLists() = default;
  /// Throws FormatError when a lemma is in both lists.
  ConnectorLists(const std::vector<std::string>& simple, const std::vector<std::string>& complex);

  ConnectorKind classify(std::string_view lemma) const;
  const std::set<std::string>& simple() const { return simple_; }
  const std::set<std::string>& complex() const { return complex_; }

 private:
  std::set<std::string> simple_;
  std::set<std::string> complex_;
};

inline ConnectorKind classify_connector(const ConnectorLists& cl, std::string_view lemma) {
  return cl.classify(lemma);
}

/// One lemma per line; blank lines and `#` comments are skipped.
std::vector<std::string> parse_word_list(std::string_view text);
ConnectorLists load_connectors(const std::string& simple_path, const std::string& complex_path);

}  // namespace qiraa
