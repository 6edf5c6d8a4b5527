#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qiraa/cefr.hpp"
#include "qiraa/corpus.hpp"
#include "qiraa/features.hpp"
#include "qiraa/json_io.hpp"
#include "qiraa/models.hpp"

// Operations shared by the command line and the HTTP service.
namespace qiraa::app {

/// Returns `path` if it exists, else the same relative path under
/// $QIRAA_DATA_DIR if that exists. Throws Error when neither does.
std::string resolve_input(const std::string& path);

/// Records the FNV-1a digest of every input file read during a run.
class InputLog {
 public:
  std::string read(const std::string& role, const std::string& path);
  const std::map<std::string, json>& entries() const { return entries_; }

 private:
  std::map<std::string, json> entries_;
};

struct ResourcePaths {
  std::string lexicon;
  std::vector<std::string> precedence = kDefaultPrecedence;
  std::string connectors_simple;
  std::string connectors_complex;
  std::string relations = "catib";  // catib, ud, or a TSV path
  std::string tags;                 // empty = built-in inventory
  std::string vectors;              // fastText .vec for composed embeddings
  std::string idf_data;             // corpus the tf-idf weights are fitted on
  std::string sentence_vectors;     // precomputed sentence vectors
};

struct LoadedResources {
  FeatureResources features;
  std::unique_ptr<EmbeddingProvider> embedding;
};

/// `idf_fallback` supplies the tf-idf corpus when paths.idf_data is empty.
LoadedResources load_resources(const ResourcePaths& paths, InputLog& inputs, const Dataset* idf_fallback,
                               LabelScheme scheme);

/// Labelled rows of a dataset with their class ids (classification) and
/// ordinal levels (regression).
struct LabelledTable {
  FeatureTable X;
  std::vector<std::string> ids;
  std::vector<int> classes;
  std::vector<double> ordinals;
};

/// Rows of `all` (aligned with d.sentences) restricted to labelled sentences.
LabelledTable labelled_rows(const Dataset& d, const FeatureTable& all);

/// Features for `d`, aligned with d.sentences, taken from a CSV keyed by
/// sent_id.
FeatureTable features_from_csv(const Dataset& d, const std::string& csv_text);

/// Spec from a kind name and `key=value` hyperparameter overrides. Throws
/// InvalidHyperparam on unknown keys or bad values.
ModelSpec build_spec(const std::string& kind, Task task, const std::vector<std::string>& params, std::uint64_t seed);

/// Level, scores and linguistic feature values for one sentence.
json predict_sentence(const TrainedModel& m, const AnnotatedSentence& s, const LoadedResources& res);

/// Linguistic feature values keyed by name.
json feature_values(const FeatureVector& fv);

}  // namespace qiraa::app
