#include "qiraa/embeddings.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "qiraa/errors.hpp"
#include "qiraa/util.hpp"

namespace qiraa {

WordVectorTable load_word_vectors(std::istream& in) {
  WordVectorTable table;
  std::string line;
  if (!std::getline(in, line)) throw BadHeader("empty file");
  {
    std::istringstream header(line);
    long long count = -1;
    long long dim = -1;
    std::string extra;
    if (!(header >> count >> dim) || (header >> extra) || count < 0 || dim <= 0) {
      throw BadHeader("expected '<count> <dim>'");
    }
    table.dim = static_cast<std::size_t>(dim);
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (util::trim(line).empty()) continue;
    std::istringstream row(line);
    std::string word;
    row >> word;
    std::vector<double> v;
    v.reserve(table.dim);
    std::string tok;
    while (row >> tok) {
      double x = 0.0;
      if (!util::parse_double(tok, x)) throw MalformedLine(line_no, "non-numeric vector component");
      v.push_back(x);
    }
    if (v.size() != table.dim) throw DimMismatch("line " + std::to_string(line_no));
    table.vectors.emplace(std::move(word), std::move(v));
  }
  return table;
}

WordVectorTable load_word_vectors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open word vectors '" + path + "'");
  return load_word_vectors(in);
}

double TfidfWeights::idf(std::string_view term) const {
  auto it = df_.find(std::string(term));
  const double df = it == df_.end() ? 0.0 : static_cast<double>(it->second);
  const double n = static_cast<double>(doc_count_);
  return std::log((1.0 + n) / (1.0 + df)) + 1.0;
}

TfidfWeights fit_tfidf(const Dataset& d) {
  if (d.sentences.empty()) throw Error("cannot fit tf-idf on an empty dataset");
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& s : d.sentences) {
    std::set<std::string_view> seen;
    for (const auto& t : s.tokens) {
      if (seen.insert(t.form).second) ++df[t.form];
    }
  }
  return TfidfWeights(std::move(df), d.sentences.size());
}

std::vector<double> compose_sentence(const AnnotatedSentence& s, const WordVectorTable& wv, const TfidfWeights& tw,
                                     ComposeOptions opts) {
  std::vector<double> out(wv.dim, 0.0);
  const std::size_t n = s.tokens.size();
  if (n == 0) return out;
  std::map<std::string_view, std::size_t> tf;
  for (const auto& t : s.tokens) ++tf[t.form];
  // Summing in sorted-form order makes the result bit-identical under token
  // permutation; each occurrence still contributes its own term.
  for (const auto& [form, count] : tf) {
    const auto* vec = wv.find(form);
    if (!vec) continue;
    const double w = static_cast<double>(count) * tw.idf(form);
    for (std::size_t rep = 0; rep < count; ++rep) {
      for (std::size_t j = 0; j < wv.dim; ++j) out[j] += w * (*vec)[j];
    }
  }
  for (auto& x : out) x /= static_cast<double>(n);
  if (opts.unit_norm) {
    double norm = 0.0;
    for (double x : out) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (auto& x : out) x /= norm;
    }
  }
  return out;
}

SentenceVectorStore load_sentence_vectors(std::istream& in) {
  SentenceVectorStore store;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (util::trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw MalformedLine(line_no, "expected sent_id<TAB>values");
    std::string id(util::trim(std::string_view(line).substr(0, tab)));
    std::vector<double> v;
    for (auto tok : util::split(std::string_view(line).substr(tab + 1), ',')) {
      double x = 0.0;
      if (!util::parse_double(tok, x)) throw MalformedLine(line_no, "non-numeric vector component");
      v.push_back(x);
    }
    if (first) {
      store.dim = v.size();
      first = false;
    } else if (v.size() != store.dim) {
      throw DimMismatch("sentence '" + id + "'");
    }
    if (store.by_id.count(id)) throw DuplicateId(id);
    store.by_id.emplace(std::move(id), std::move(v));
  }
  return store;
}

SentenceVectorStore load_sentence_vectors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open sentence vectors '" + path + "'");
  return load_sentence_vectors(in);
}

std::vector<double> StoredEmbedding::embed(const AnnotatedSentence& s) const {
  auto it = store_.by_id.find(s.id);
  if (it == store_.by_id.end()) throw Error("no sentence vector for '" + s.id + "'");
  return it->second;
}

}  // namespace qiraa
