#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qiraa/cefr.hpp"

namespace qiraa {

enum class Aspect { none, perfective, imperfective, command };
enum class Voice { none, active, passive };

/// Morphological attributes carried in the FEATS column. Absent keys keep
/// their defaults.
struct Morph {
  Aspect aspect = Aspect::none;
  Voice voice = Voice::none;
  int person = 0;  // 1..3, 0 = none
  bool proper = false;
  bool numeric = false;
  bool comparative = false;

  friend bool operator==(const Morph&, const Morph&) = default;
};

struct Token {
  std::size_t index = 1;  // 1-based
  std::string form;
  std::string lemma;
  std::string pos;
  Morph feats;
  int seg_count = 1;
  std::size_t head = 0;  // 0 = root
  std::string deprel;

  friend bool operator==(const Token&, const Token&) = default;
};

struct AnnotatedSentence {
  std::string id;
  std::vector<Token> tokens;
  std::optional<CefrLabel> gold;
  std::string source;
  std::optional<std::string> genre;

  /// Forms joined by single spaces.
  std::string text() const;

  friend bool operator==(const AnnotatedSentence&, const AnnotatedSentence&) = default;
};

struct Dataset {
  std::vector<AnnotatedSentence> sentences;
  LabelScheme label_scheme = LabelScheme::three_way;

  std::size_t size() const { return sentences.size(); }
  /// Indices of sentences that carry a gold label.
  std::vector<std::size_t> labelled() const;
  /// Class ids of labelled sentences, aligned with labelled().
  std::vector<int> classes() const;
  const AnnotatedSentence* find(std::string_view id) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Checks the token and head-graph invariants of a sentence. Throws
/// CyclicTree when a head chain never reaches a root and FormatError on
/// index or range violations.
void validate(const AnnotatedSentence& s);

/// Depth of every token (roots have depth 0), aligned with s.tokens.
std::vector<int> token_depths(const AnnotatedSentence& s);

/// Reads the extended CoNLL-U format: ten tab-separated columns per token
/// line, FEATS keys asp/vox/per/prop/num/comp, MISC key seg, and comment keys
/// sent_id, cefr, source, genre.
Dataset parse_annotated(std::istream& in, LabelScheme scheme = LabelScheme::three_way);
Dataset parse_annotated(std::string_view text, LabelScheme scheme = LabelScheme::three_way);
Dataset load_dataset(const std::string& path, LabelScheme scheme = LabelScheme::three_way);

std::string serialize(const Dataset& d);
std::string serialize(const AnnotatedSentence& s);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Stratified k-fold partition over positions 0..classes.size()-1. Every
/// class must have at least k members.
std::vector<Fold> stratified_folds(std::span<const int> classes, std::size_t k, std::uint64_t seed);

/// Same partition expressed in dataset indices; only labelled sentences are
/// distributed.
std::vector<Fold> stratified_folds(const Dataset& d, std::size_t k, std::uint64_t seed);

/// Leave-one-out when k equals the instance count, stratified otherwise.
std::vector<Fold> make_folds(std::span<const int> classes, std::size_t k, std::uint64_t seed);

/// Plain shuffled k-fold for regression targets.
std::vector<Fold> shuffled_folds(std::size_t n, std::size_t k, std::uint64_t seed);

/// Order-sensitive digest of a partition, used to prove that experiments
/// share folds.
std::uint64_t fold_hash(std::span<const Fold> folds);

}  // namespace qiraa
