#include "qiraa/features.hpp"

#include <cmath>
#include <set>

#include "qiraa/errors.hpp"
#include "qiraa/util.hpp"

namespace qiraa {

namespace {

double rate(std::size_t count, std::size_t denom) {
  return denom == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(denom);
}

std::optional<PosClass> parse_pos_class(std::string_view s) {
  static const std::map<std::string, PosClass, std::less<>> names = {
      {"other", PosClass::Other},
      {"noun", PosClass::Noun},
      {"proper_noun", PosClass::ProperNoun},
      {"verb", PosClass::Verb},
      {"pseudo_verb", PosClass::PseudoVerb},
      {"adjective", PosClass::Adjective},
      {"conjunction", PosClass::Conjunction},
      {"subordinating_conjunction", PosClass::SubConjunction},
      {"pronoun", PosClass::Pronoun},
      {"punctuation", PosClass::Punctuation},
  };
  auto it = names.find(s);
  if (it == names.end()) return std::nullopt;
  return it->second;
}

}  // namespace

TagInventory TagInventory::standard() {
  std::map<std::string, TagInfo> t;
  for (const char* tag : {"noun", "noun_quant", "noun_num", "NOUN"}) t[tag] = {PosClass::Noun};
  for (const char* tag : {"noun_prop", "PROPN"}) t[tag] = {PosClass::ProperNoun};
  for (const char* tag : {"verb", "VERB"}) t[tag] = {PosClass::Verb};
  t["verb_pseudo"] = {PosClass::PseudoVerb};
  for (const char* tag : {"adj", "ADJ"}) t[tag] = {PosClass::Adjective};
  t["adj_comp"] = {PosClass::Adjective, false, true};
  t["adj_num"] = {PosClass::Adjective, true, false};
  for (const char* tag : {"conj", "CCONJ"}) t[tag] = {PosClass::Conjunction};
  for (const char* tag : {"conj_sub", "SCONJ"}) t[tag] = {PosClass::SubConjunction};
  for (const char* tag : {"pron", "pron_dem", "pron_rel", "pron_interrog", "PRON"}) t[tag] = {PosClass::Pronoun};
  for (const char* tag : {"punc", "PUNCT"}) t[tag] = {PosClass::Punctuation};
  return TagInventory(std::move(t));
}

TagInventory TagInventory::parse(std::string_view text) {
  std::map<std::string, TagInfo> t;
  std::size_t line_no = 0;
  for (auto line : util::split(text, '\n')) {
    ++line_no;
    line = util::trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto cols = util::split(line, '\t');
    if (cols.size() < 2) throw MalformedLine(line_no, "expected tag<TAB>class");
    auto cls = parse_pos_class(util::trim(cols[1]));
    if (!cls) throw MalformedLine(line_no, "unknown POS class '" + std::string(cols[1]) + "'");
    TagInfo info{*cls};
    if (cols.size() > 2) {
      const auto flag = util::trim(cols[2]);
      info.numeric = flag == "numeric";
      info.comparative = flag == "comparative";
    }
    t[std::string(util::trim(cols[0]))] = info;
  }
  return TagInventory(std::move(t));
}

TagInfo TagInventory::info(std::string_view tag) const {
  auto it = tags_.find(tag);
  return it == tags_.end() ? TagInfo{} : it->second;
}

RelationMap RelationMap::catib() {
  RelationMap m;
  m.roles = {{"SBJ", SyntacticRole::Subject},
             {"OBJ", SyntacticRole::Object},
             {"MOD", SyntacticRole::Modifier},
             {"IDF", SyntacticRole::Modifier}};
  return m;
}

RelationMap RelationMap::ud() {
  RelationMap m;
  m.roles = {{"nsubj", SyntacticRole::Subject},      {"nsubj:pass", SyntacticRole::Subject},
             {"csubj", SyntacticRole::Subject},      {"obj", SyntacticRole::Object},
             {"iobj", SyntacticRole::Object},        {"amod", SyntacticRole::Modifier},
             {"nmod", SyntacticRole::Modifier},      {"advmod", SyntacticRole::Modifier},
             {"nummod", SyntacticRole::Modifier},    {"conj", SyntacticRole::Coordination}};
  m.conjunction_headed_coordination = false;
  return m;
}

RelationMap RelationMap::parse(std::string_view text) {
  RelationMap m;
  m.conjunction_headed_coordination = false;
  std::size_t line_no = 0;
  for (auto line : util::split(text, '\n')) {
    ++line_no;
    line = util::trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto cols = util::split(line, '\t');
    if (cols.size() != 2) throw MalformedLine(line_no, "expected deprel<TAB>role");
    const auto deprel = std::string(util::trim(cols[0]));
    const auto role = util::trim(cols[1]);
    if (deprel == "*" && role == "conjunction_headed") {
      m.conjunction_headed_coordination = true;
    } else if (role == "subject") {
      m.roles[deprel] = SyntacticRole::Subject;
    } else if (role == "object") {
      m.roles[deprel] = SyntacticRole::Object;
    } else if (role == "modifier") {
      m.roles[deprel] = SyntacticRole::Modifier;
    } else if (role == "coordination") {
      m.roles[deprel] = SyntacticRole::Coordination;
    } else {
      throw MalformedLine(line_no, "unknown role '" + std::string(role) + "'");
    }
  }
  return m;
}

SyntacticRole RelationMap::role(std::string_view deprel) const {
  auto it = roles.find(deprel);
  return it == roles.end() ? SyntacticRole::Other : it->second;
}

std::string to_string(FeatureGroup g) {
  switch (g) {
    case FeatureGroup::POS: return "POS";
    case FeatureGroup::Syntactic: return "Syntactic";
    case FeatureGroup::CEFR: return "CEFR";
    case FeatureGroup::Embedding: return "Embedding";
  }
  return "POS";
}

std::optional<FeatureGroup> parse_feature_group(std::string_view s) {
  for (auto g : {FeatureGroup::POS, FeatureGroup::Syntactic, FeatureGroup::CEFR, FeatureGroup::Embedding}) {
    if (s == to_string(g)) return g;
  }
  return std::nullopt;
}

const std::vector<std::string>& feature_names() {
  // Denominators: 1-3 use non-punctuation tokens, 11 uses verbs, 24 uses
  // roots, 26 is a count, 27 a mean over tokens, 34 an entropy over matched
  // tokens; every other feature is a rate over all tokens.
  static const std::vector<std::string> names = {
      "ttr_forms",
      "morphemes_per_word",
      "ttr_lemmas",
      "noun_rate",
      "verb_rate",
      "adjective_rate",
      "pseudo_verb_rate",
      "passive_verb_rate",
      "perfective_verb_rate",
      "imperfective_verb_rate",
      "third_person_verb_share",
      "numeric_adjective_rate",
      "comparative_adjective_rate",
      "conjunction_rate",
      "subordinating_conjunction_rate",
      "proper_noun_rate",
      "pronoun_rate",
      "punctuation_rate",
      "simple_connector_rate",
      "complex_connector_rate",
      "connector_rate",
      "subject_rate",
      "object_rate",
      "modifier_per_root",
      "coordination_rate",
      "phrase_count",
      "mean_depth",
      "cefr_a1_rate",
      "cefr_a2_rate",
      "cefr_b1_rate",
      "cefr_b2_rate",
      "cefr_c1_rate",
      "cefr_c2_rate",
      "cefr_entropy",
  };
  return names;
}

std::optional<FeatureGroup> group_of(std::string_view column_name) {
  if (column_name.substr(0, 4) == "emb_") return FeatureGroup::Embedding;
  const auto& names = feature_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == column_name) {
      if (i < 21) return FeatureGroup::POS;
      if (i < 27) return FeatureGroup::Syntactic;
      return FeatureGroup::CEFR;
    }
  }
  return std::nullopt;
}

PosFeatures extract_pos(const AnnotatedSentence& s, const ConnectorLists& cl, const TagInventory& tags) {
  PosFeatures f{};
  const std::size_t n = s.tokens.size();
  std::set<std::string_view> forms;
  std::set<std::string_view> lemmas;
  std::size_t content = 0;
  long long segs = 0;
  std::size_t noun = 0, verb = 0, adj = 0, pseudo = 0, passive = 0, perf = 0, imperf = 0, third = 0;
  std::size_t adj_num = 0, adj_comp = 0, conj = 0, sub = 0, proper = 0, pron = 0, punct = 0;
  std::size_t simple = 0, complex = 0;

  for (const auto& t : s.tokens) {
    const TagInfo info = tags.info(t.pos);
    if (info.cls != PosClass::Punctuation) {
      ++content;
      segs += t.seg_count;
      forms.insert(t.form);
      lemmas.insert(t.lemma);
    }
    const bool is_proper = info.cls == PosClass::ProperNoun || t.feats.proper;
    switch (info.cls) {
      case PosClass::Noun:
        if (!is_proper) ++noun;
        break;
      case PosClass::Verb:
        ++verb;
        if (t.feats.voice == Voice::passive) ++passive;
        if (t.feats.aspect == Aspect::perfective) ++perf;
        if (t.feats.aspect == Aspect::imperfective) ++imperf;
        if (t.feats.person == 3) ++third;
        break;
      case PosClass::PseudoVerb: ++pseudo; break;
      case PosClass::Adjective:
        ++adj;
        if (info.numeric || t.feats.numeric) ++adj_num;
        if (info.comparative || t.feats.comparative) ++adj_comp;
        break;
      case PosClass::Conjunction: ++conj; break;
      case PosClass::SubConjunction: ++sub; break;
      case PosClass::Pronoun: ++pron; break;
      case PosClass::Punctuation: ++punct; break;
      case PosClass::ProperNoun:
      case PosClass::Other: break;
    }
    if (is_proper) ++proper;
    switch (cl.classify(t.lemma)) {
      case ConnectorKind::Simple: ++simple; break;
      case ConnectorKind::Complex: ++complex; break;
      case ConnectorKind::None: break;
    }
  }

  f[0] = rate(forms.size(), content);
  f[1] = content == 0 ? 0.0 : static_cast<double>(segs) / static_cast<double>(content);
  f[2] = rate(lemmas.size(), content);
  f[3] = rate(noun, n);
  f[4] = rate(verb, n);
  f[5] = rate(adj, n);
  f[6] = rate(pseudo, n);
  f[7] = rate(passive, n);
  f[8] = rate(perf, n);
  f[9] = rate(imperf, n);
  f[10] = rate(third, verb);
  f[11] = rate(adj_num, n);
  f[12] = rate(adj_comp, n);
  f[13] = rate(conj, n);
  f[14] = rate(sub, n);
  f[15] = rate(proper, n);
  f[16] = rate(pron, n);
  f[17] = rate(punct, n);
  f[18] = rate(simple, n);
  f[19] = rate(complex, n);
  f[20] = f[18] + f[19];
  return f;
}

SyntacticFeatures extract_syntactic(const AnnotatedSentence& s, const RelationMap& relmap, const TagInventory& tags) {
  SyntacticFeatures f{};
  const std::size_t n = s.tokens.size();
  if (n == 0) return f;
  std::size_t subj = 0, obj = 0, mod = 0, coord = 0, roots = 0;
  std::vector<char> has_dependent(n, 0);
  for (const auto& t : s.tokens) {
    if (t.head == 0) {
      ++roots;
    } else {
      has_dependent[t.head - 1] = 1;
    }
    const auto role = relmap.role(t.deprel);
    bool coordinated = role == SyntacticRole::Coordination;
    if (!coordinated && relmap.conjunction_headed_coordination && t.head != 0) {
      coordinated = tags.info(s.tokens[t.head - 1].pos).cls == PosClass::Conjunction;
    }
    if (role == SyntacticRole::Subject) ++subj;
    if (role == SyntacticRole::Object) ++obj;
    if (role == SyntacticRole::Modifier) ++mod;
    if (coordinated) ++coord;
  }
  const auto depths = token_depths(s);
  long long depth_sum = 0;
  for (int d : depths) depth_sum += d;
  std::size_t internal = 0;
  for (char c : has_dependent) internal += c ? 1 : 0;

  f[0] = rate(subj, n);
  f[1] = rate(obj, n);
  f[2] = rate(mod, roots);
  f[3] = rate(coord, n);
  f[4] = static_cast<double>(internal);
  f[5] = static_cast<double>(depth_sum) / static_cast<double>(n);
  return f;
}

CefrFeatures extract_cefr(const AnnotatedSentence& s, const CefrLexicon& lex) {
  CefrFeatures f{};
  const std::size_t n = s.tokens.size();
  std::array<std::size_t, 6> counts{};
  std::size_t matched = 0;
  for (const auto& t : s.tokens) {
    if (auto label = lex.lookup(t.lemma)) {
      ++counts[static_cast<int>(label->level())];
      ++matched;
    }
  }
  for (std::size_t i = 0; i < 6; ++i) f[i] = rate(counts[i], n);
  double h = 0.0;
  if (matched > 1) {
    for (auto c : counts) {
      if (c == 0) continue;
      const double p = static_cast<double>(c) / static_cast<double>(matched);
      h -= p * std::log(p);
    }
  }
  f[6] = h;
  return f;
}

FeatureVector featurize(const AnnotatedSentence& s, const FeatureResources& res, const EmbeddingProvider* emb) {
  FeatureVector v;
  const auto pos = extract_pos(s, res.connectors, res.tags);
  const auto syn = extract_syntactic(s, res.relations, res.tags);
  const auto cefr = extract_cefr(s, res.lexicon);
  std::copy(pos.begin(), pos.end(), v.linguistic.begin());
  std::copy(syn.begin(), syn.end(), v.linguistic.begin() + 21);
  std::copy(cefr.begin(), cefr.end(), v.linguistic.begin() + 27);
  if (emb) {
    v.embedding = emb->embed(s);
    if (v.embedding->size() != emb->dim()) throw DimMismatch("embedding of sentence '" + s.id + "'");
  }
  return v;
}

FeatureTable featurize(const Dataset& d, const FeatureResources& res, const EmbeddingProvider* emb) {
  FeatureTable t;
  t.names = feature_names();
  const std::size_t dim = emb ? emb->dim() : 0;
  for (std::size_t j = 0; j < dim; ++j) t.names.push_back("emb_" + std::to_string(j));
  t.values = Matrix(d.size(), t.names.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto v = featurize(d.sentences[i], res, emb);
    auto row = t.values.row(i);
    std::copy(v.linguistic.begin(), v.linguistic.end(), row.begin());
    if (v.embedding) std::copy(v.embedding->begin(), v.embedding->end(), row.begin() + kLinguisticFeatureCount);
  }
  return t;
}

std::string to_csv(const FeatureTable& t, const std::vector<std::string>& row_ids) {
  std::string out = "sent_id";
  for (const auto& n : t.names) out += ',' + n;
  out += '\n';
  for (std::size_t r = 0; r < t.rows(); ++r) {
    out += r < row_ids.size() ? row_ids[r] : std::to_string(r);
    for (double v : t.values.row(r)) out += ',' + util::format_double(v);
    out += '\n';
  }
  return out;
}

FeatureTable parse_feature_csv(std::string_view text, std::vector<std::string>& row_ids) {
  FeatureTable t;
  row_ids.clear();
  std::size_t line_no = 0;
  for (auto line : util::split(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto cells = util::split(line, ',');
    if (line_no == 1) {
      if (cells.empty() || cells[0] != "sent_id") throw MalformedLine(1, "feature CSV must start with a sent_id column");
      for (std::size_t i = 1; i < cells.size(); ++i) t.names.emplace_back(cells[i]);
      continue;
    }
    if (cells.size() != t.names.size() + 1) throw MalformedLine(line_no, "wrong number of columns");
    row_ids.emplace_back(cells[0]);
    std::vector<double> row(t.names.size());
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (!util::parse_double(cells[i + 1], row[i])) throw MalformedLine(line_no, "not a number: " + std::string(cells[i + 1]));
    }
    if (t.values.rows() == 0) t.values = Matrix(0, row.size());
    t.values.append_row(row);
  }
  if (line_no == 0) throw MalformedLine(1, "empty feature CSV");
  return t;
}

}  // namespace qiraa
