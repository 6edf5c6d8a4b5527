#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qiraa/corpus.hpp"
#include "qiraa/features.hpp"

namespace qiraa {

struct WordVectorTable {
  std::size_t dim = 0;
  std::unordered_map<std::string, std::vector<double>> vectors;

  const std::vector<double>* find(std::string_view word) const {
    auto it = vectors.find(std::string(word));
    return it == vectors.end() ? nullptr : &it->second;
  }
};

/// fastText `.vec` text: a `<count> <dim>` header, then `word v1 ... v_dim`
/// per line. The first occurrence of a repeated word is kept.
WordVectorTable load_word_vectors(std::istream& in);
WordVectorTable load_word_vectors(const std::string& path);

/// Smoothed inverse document frequencies over sentences:
/// idf(t) = ln((1 + N) / (1 + df(t))) + 1.
class TfidfWeights {
 public:
  TfidfWeights() = default;
  TfidfWeights(std::unordered_map<std::string, std::size_t> df, std::size_t doc_count)
      : df_(std::move(df)), doc_count_(doc_count) {}

  double idf(std::string_view term) const;
  std::size_t doc_count() const { return doc_count_; }
  std::size_t vocabulary_size() const { return df_.size(); }

 private:
  std::unordered_map<std::string, std::size_t> df_;
  std::size_t doc_count_ = 0;
};

/// Each sentence is one document; terms are surface forms.
TfidfWeights fit_tfidf(const Dataset& d);

struct ComposeOptions {
  bool unit_norm = false;
};

/// (1/n) * sum over the n tokens of tf(w, s) * idf(w) * vec(w). Words without
/// a vector contribute zero but still count in n.
std::vector<double> compose_sentence(const AnnotatedSentence& s, const WordVectorTable& wv, const TfidfWeights& tw,
                                     ComposeOptions opts = {});

struct SentenceVectorStore {
  std::size_t dim = 0;
  std::unordered_map<std::string, std::vector<double>> by_id;
};

/// `sent_id<TAB>v1,v2,...` rows; the first row fixes the dimension.
SentenceVectorStore load_sentence_vectors(std::istream& in);
SentenceVectorStore load_sentence_vectors(const std::string& path);

class ComposedEmbedding final : public EmbeddingProvider {
 public:
  ComposedEmbedding(WordVectorTable wv, TfidfWeights tw, ComposeOptions opts = {})
      : wv_(std::move(wv)), tw_(std::move(tw)), opts_(opts) {}
  std::size_t dim() const override { return wv_.dim; }
  std::vector<double> embed(const AnnotatedSentence& s) const override {
    return compose_sentence(s, wv_, tw_, opts_);
  }

 private:
  WordVectorTable wv_;
  TfidfWeights tw_;
  ComposeOptions opts_;
};

/// Looks sentences up by id; a missing id is a data error.
class StoredEmbedding final : public EmbeddingProvider {
 public:
  explicit StoredEmbedding(SentenceVectorStore store) : store_(std::move(store)) {}
  std::size_t dim() const override { return store_.dim; }
  std::vector<double> embed(const AnnotatedSentence& s) const override;

 private:
  SentenceVectorStore store_;
};

}  // namespace qiraa
