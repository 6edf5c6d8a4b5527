#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qiraa/corpus.hpp"
#include "qiraa/lexicon.hpp"
#include "qiraa/matrix.hpp"

namespace qiraa {

inline constexpr std::size_t kLinguisticFeatureCount = 34;

enum class PosClass {
  Other,
  Noun,
  ProperNoun,
  Verb,
  PseudoVerb,
  Adjective,
  Conjunction,
  SubConjunction,
  Pronoun,
  Punctuation,
};

struct TagInfo {
  PosClass cls = PosClass::Other;
  bool numeric = false;
  bool comparative = false;
};

/// Maps tagger-specific POS tags onto the classes the features count.
class TagInventory {
 public:
  TagInventory() = default;
  explicit TagInventory(const std::map<std::string, TagInfo>& tags) : tags_(tags.begin(), tags.end()) {}

  /// MADAMIRA tags (noun, noun_prop, verb_pseudo, adj_comp, conj_sub, ...)
  /// plus the UD universal tags.
  static TagInventory standard();
  /// Rows of `tag<TAB>class[<TAB>numeric|comparative]`.
  static TagInventory parse(std::string_view text);

  TagInfo info(std::string_view tag) const;

 private:
  std::map<std::string, TagInfo, std::less<>> tags_;
};

enum class SyntacticRole { Other, Subject, Object, Modifier, Coordination };

struct RelationMap {
  std::map<std::string, SyntacticRole, std::less<>> roles;
  /// A token whose head is a coordinating conjunction counts as coordination.
  bool conjunction_headed_coordination = true;

  /// CATiB labels as produced by CamelParser: SBJ, OBJ, MOD, IDF.
  static RelationMap catib();
  static RelationMap ud();
  /// Rows of `deprel<TAB>subject|object|modifier|coordination`.
  static RelationMap parse(std::string_view text);

  SyntacticRole role(std::string_view deprel) const;
};

enum class FeatureGroup { POS, Syntactic, CEFR, Embedding };

std::string to_string(FeatureGroup g);
std::optional<FeatureGroup> parse_feature_group(std::string_view s);

/// Names of the 34 linguistic features in table order.
const std::vector<std::string>& feature_names();

/// Group of a column name: the 34 linguistic names by position, `emb_*`
/// columns as Embedding.
std::optional<FeatureGroup> group_of(std::string_view column_name);

using PosFeatures = std::array<double, 21>;
using SyntacticFeatures = std::array<double, 6>;
using CefrFeatures = std::array<double, 7>;

PosFeatures extract_pos(const AnnotatedSentence& s, const ConnectorLists& cl,
                        const TagInventory& tags = TagInventory::standard());
SyntacticFeatures extract_syntactic(const AnnotatedSentence& s, const RelationMap& relmap,
                                    const TagInventory& tags = TagInventory::standard());
CefrFeatures extract_cefr(const AnnotatedSentence& s, const CefrLexicon& lex);

struct FeatureVector {
  std::array<double, kLinguisticFeatureCount> linguistic{};
  std::optional<std::vector<double>> embedding;

  static const std::vector<std::string>& names() { return feature_names(); }
};

/// Supplies the sentence-embedding block.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dim() const = 0;
  virtual std::vector<double> embed(const AnnotatedSentence& s) const = 0;
};

struct FeatureResources {
  CefrLexicon lexicon;
  ConnectorLists connectors;
  RelationMap relations = RelationMap::catib();
  TagInventory tags = TagInventory::standard();
};

FeatureVector featurize(const AnnotatedSentence& s, const FeatureResources& res,
                        const EmbeddingProvider* emb = nullptr);

/// One row per sentence in dataset order; `emb_0..emb_{d-1}` follow the 34
/// linguistic columns when a provider is given.
FeatureTable featurize(const Dataset& d, const FeatureResources& res, const EmbeddingProvider* emb = nullptr);

/// CSV with a `sent_id` column followed by the table columns.
std::string to_csv(const FeatureTable& t, const std::vector<std::string>& row_ids);

/// Inverse of to_csv; row ids land in `row_ids`.
FeatureTable parse_feature_csv(std::string_view text, std::vector<std::string>& row_ids);

}  // namespace qiraa
