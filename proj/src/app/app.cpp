#include "qiraa/app.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "qiraa/embeddings.hpp"
#include "qiraa/errors.hpp"
#include "qiraa/lexicon.hpp"
#include "qiraa/util.hpp"

namespace qiraa::app {

std::string resolve_input(const std::string& path) {
  namespace fs = std::filesystem;
  if (fs::exists(path)) return path;
  if (const char* root = std::getenv("QIRAA_DATA_DIR"); root && *root && fs::path(path).is_relative()) {
    const auto candidate = (fs::path(root) / path).string();
    if (fs::exists(candidate)) return candidate;
  }
  throw Error("input file not found: " + path);
}

std::string InputLog::read(const std::string& role, const std::string& path) {
  const auto resolved = resolve_input(path);
  auto text = util::read_file(resolved);
  entries_[role] = {{"path", resolved}, {"fnv1a64", util::hex64(util::fnv1a(text))}, {"bytes", text.size()}};
  return text;
}

LoadedResources load_resources(const ResourcePaths& paths, InputLog& inputs, const Dataset* idf_fallback,
                               LabelScheme scheme) {
  LoadedResources out;
  if (!paths.lexicon.empty()) {
    out.features.lexicon = parse_lexicon_tsv(inputs.read("lexicon", paths.lexicon), paths.precedence);
  }
  std::vector<std::string> simple, complex;
  if (!paths.connectors_simple.empty()) {
    simple = parse_word_list(inputs.read("connectors_simple", paths.connectors_simple));
  }
  if (!paths.connectors_complex.empty()) {
    complex = parse_word_list(inputs.read("connectors_complex", paths.connectors_complex));
  }
  out.features.connectors = ConnectorLists(simple, complex);
  if (paths.relations == "catib") {
    out.features.relations = RelationMap::catib();
  } else if (paths.relations == "ud") {
    out.features.relations = RelationMap::ud();
  } else {
    out.features.relations = RelationMap::parse(inputs.read("relations", paths.relations));
  }
  if (!paths.tags.empty()) out.features.tags = TagInventory::parse(inputs.read("tags", paths.tags));

  if (!paths.vectors.empty() && !paths.sentence_vectors.empty()) {
    throw Error("give either word vectors or sentence vectors, not both");
  }
  if (!paths.vectors.empty()) {
    std::istringstream vin(inputs.read("vectors", paths.vectors));
    auto table = load_word_vectors(vin);
    TfidfWeights weights;
    if (!paths.idf_data.empty()) {
      weights = fit_tfidf(parse_annotated(inputs.read("idf_data", paths.idf_data), scheme));
    } else if (idf_fallback) {
      weights = fit_tfidf(*idf_fallback);
    } else {
      throw Error("word vectors need a corpus for the tf-idf weights");
    }
    out.embedding = std::make_unique<ComposedEmbedding>(std::move(table), std::move(weights));
  } else if (!paths.sentence_vectors.empty()) {
    std::istringstream sin(inputs.read("sentence_vectors", paths.sentence_vectors));
    out.embedding = std::make_unique<StoredEmbedding>(load_sentence_vectors(sin));
  }
  return out;
}

LabelledTable labelled_rows(const Dataset& d, const FeatureTable& all) {
  if (all.rows() != d.size()) throw LengthMismatch(all.rows(), d.size());
  LabelledTable t;
  const auto rows = d.labelled();
  t.X = all.select_rows(rows);
  t.classes = d.classes();
  for (auto r : rows) {
    t.ids.push_back(d.sentences[r].id);
    t.ordinals.push_back(static_cast<double>(d.sentences[r].gold->ordinal()));
  }
  return t;
}

FeatureTable features_from_csv(const Dataset& d, const std::string& csv_text) {
  std::vector<std::string> ids;
  const auto table = parse_feature_csv(csv_text, ids);
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!row_of.emplace(ids[i], i).second) throw DuplicateId(ids[i]);
  }
  std::vector<std::size_t> order;
  for (const auto& s : d.sentences) {
    auto it = row_of.find(s.id);
    if (it == row_of.end()) throw UnknownSentence(s.id);
    order.push_back(it->second);
  }
  return table.select_rows(order);
}

ModelSpec build_spec(const std::string& kind, Task task, const std::vector<std::string>& params, std::uint64_t seed) {
  const auto k = parse_model_kind(kind);
  if (!k) throw InvalidHyperparam("unknown model kind '" + kind + "'");
  auto spec = ModelSpec::defaults(*k, task);
  json overrides = json::object();
  to_json(overrides, spec.hyper);
  for (const auto& p : params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos) throw InvalidHyperparam("expected key=value, got '" + p + "'");
    const auto key = p.substr(0, eq);
    const auto value = p.substr(eq + 1);
    if (!overrides.contains(key) || key == "seed") throw InvalidHyperparam("unknown hyperparameter '" + key + "'");
    auto& slot = overrides[key];
    if (slot.is_boolean()) {
      if (value != "true" && value != "false") throw InvalidHyperparam(key + " must be true or false");
      slot = value == "true";
    } else if (slot.is_number_float()) {
      double v = 0.0;
      if (!util::parse_double(value, v)) throw InvalidHyperparam(key + " must be a number");
      slot = v;
    } else {
      long long v = 0;
      if (!util::parse_int(value, v)) throw InvalidHyperparam(key + " must be an integer");
      slot = v;
    }
  }
  spec.hyper = overrides.get<Hyperparams>();
  spec.hyper.seed = seed;
  spec.validate();
  return spec;
}

json feature_values(const FeatureVector& fv) {
  json j = json::object();
  const auto& names = feature_names();
  for (std::size_t i = 0; i < names.size(); ++i) j[names[i]] = fv.linguistic[i];
  return j;
}

json predict_sentence(const TrainedModel& m, const AnnotatedSentence& s, const LoadedResources& res) {
  const auto fv = featurize(s, res.features, res.embedding.get());
  FeatureTable X;
  X.names = feature_names();
  std::vector<double> row(fv.linguistic.begin(), fv.linguistic.end());
  if (fv.embedding) {
    for (std::size_t i = 0; i < fv.embedding->size(); ++i) {
      X.names.push_back("emb_" + std::to_string(i));
      row.push_back((*fv.embedding)[i]);
    }
  }
  X.values.append_row(row);
  const auto pred = predict(m, X);

  json out = {{"sentence_id", s.id}, {"task", to_string(m.spec.task)}, {"features", feature_values(fv)}};
  if (m.spec.task == Task::classify) {
    const auto scheme = m.label_scheme.value_or(LabelScheme::three_way);
    const auto names = class_names(scheme);
    auto name_of = [&](int c) {
      return c >= 0 && static_cast<std::size_t>(c) < names.size() ? names[static_cast<std::size_t>(c)]
                                                                    : std::to_string(c);
    };
    out["class"] = pred.labels[0];
    out["level"] = name_of(pred.labels[0]);
    json scores = json::object();
    for (std::size_t c = 0; c < m.classes.size(); ++c) scores[name_of(m.classes[c])] = pred.scores(0, c);
    out["scores"] = scores;
  } else {
    const double v = pred.values[0];
    const int ordinal = static_cast<int>(std::clamp(std::lround(v), 1L, 3L));
    out["value"] = v;
    out["level"] = to_string(static_cast<CoarseLevel>(ordinal - 1));
  }
  return out;
}

}  // namespace qiraa::app
