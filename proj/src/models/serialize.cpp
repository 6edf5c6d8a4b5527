#include "qiraa/errors.hpp"
#include "qiraa/json_io.hpp"

namespace qiraa {

void to_json(json& j, const Hyperparams& h) {
  j = json{{"k", h.k},
           {"max_depth", h.max_depth},
           {"min_samples_split", h.min_samples_split},
           {"n_trees", h.n_trees},
           {"max_features", h.max_features},
           {"bootstrap", h.bootstrap},
           {"learning_rate", h.learning_rate},
           {"epochs", h.epochs},
           {"batch_size", h.batch_size},
           {"lambda", h.lambda},
           {"gamma", h.gamma},
           {"epsilon", h.epsilon},
           {"seed", h.seed}};
}

void from_json(const json& j, Hyperparams& h) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("k", h.k);
  get("max_depth", h.max_depth);
  get("min_samples_split", h.min_samples_split);
  get("n_trees", h.n_trees);
  get("max_features", h.max_features);
  get("bootstrap", h.bootstrap);
  get("learning_rate", h.learning_rate);
  get("epochs", h.epochs);
  get("batch_size", h.batch_size);
  get("lambda", h.lambda);
  get("gamma", h.gamma);
  get("epsilon", h.epsilon);
  get("seed", h.seed);
}

void to_json(json& j, const ModelSpec& s) {
  j = json{{"kind", to_string(s.kind)}, {"task", to_string(s.task)}, {"hyperparams", s.hyper}};
}

void from_json(const json& j, ModelSpec& s) {
  const auto kind = parse_model_kind(j.at("kind").get<std::string>());
  if (!kind) throw FormatError("unknown model kind '" + j.at("kind").get<std::string>() + "'");
  Task task = Task::classify;
  if (j.contains("task")) {
    auto t = parse_task(j.at("task").get<std::string>());
    if (!t) throw FormatError("unknown task '" + j.at("task").get<std::string>() + "'");
    task = *t;
  }
  s = ModelSpec::defaults(*kind, task);
  if (j.contains("hyperparams")) j.at("hyperparams").get_to(s.hyper);
}

void to_json(json& j, const Matrix& m) { j = json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}}; }

void from_json(const json& j, Matrix& m) {
  m = Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != m.data().size()) throw FormatError("matrix data length mismatch");
  m.data() = std::move(data);
}

namespace {

json tree_to_json(const Tree& t) {
  json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
       value = json::array();
  for (const auto& n : t.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(n.value);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}};
}

Tree tree_from_json(const json& j) {
  Tree t;
  const auto& f = j.at("feature");
  t.nodes.resize(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    auto& n = t.nodes[i];
    n.feature = f[i].get<int>();
    n.threshold = j.at("threshold")[i].get<double>();
    n.left = j.at("left")[i].get<int>();
    n.right = j.at("right")[i].get<int>();
    n.value = j.at("value")[i].get<std::vector<double>>();
  }
  return t;
}

json state_to_json(const ModelState& state) {
  return std::visit(
      [](const auto& s) -> json {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, KnnState>) {
          return {{"type", "knn"}, {"points", s.points}, {"targets", s.targets}};
        } else if constexpr (std::is_same_v<S, NaiveBayesState>) {
          return {{"type", "naive_bayes"}, {"log_prior", s.log_prior}, {"means", s.means}, {"variances", s.variances}};
        } else if constexpr (std::is_same_v<S, Tree>) {
          return {{"type", "tree"}, {"tree", tree_to_json(s)}};
        } else if constexpr (std::is_same_v<S, ForestState>) {
          json trees = json::array();
          for (const auto& t : s.trees) trees.push_back(tree_to_json(t));
          return {{"type", "forest"}, {"trees", trees}};
        } else if constexpr (std::is_same_v<S, BoostState>) {
          json rounds = json::array();
          for (const auto& r : s.rounds) {
            json round = json::array();
            for (const auto& t : r) round.push_back(tree_to_json(t));
            rounds.push_back(round);
          }
          return {{"type", "boost"}, {"init", s.init}, {"learning_rate", s.learning_rate}, {"rounds", rounds}};
        } else if constexpr (std::is_same_v<S, LinearState>) {
          return {{"type", "linear"}, {"weights", s.weights}};
        } else {
          return {{"type", "kernel"}, {"support", s.support}, {"coef", s.coef}, {"gamma", s.gamma}};
        }
      },
      state);
}

ModelState state_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "knn") return KnnState{j.at("points").get<Matrix>(), j.at("targets").get<std::vector<double>>()};
  if (type == "naive_bayes") {
    return NaiveBayesState{j.at("log_prior").get<std::vector<double>>(), j.at("means").get<Matrix>(),
                           j.at("variances").get<Matrix>()};
  }
  if (type == "tree") return tree_from_json(j.at("tree"));
  if (type == "forest") {
    ForestState f;
    for (const auto& t : j.at("trees")) f.trees.push_back(tree_from_json(t));
    return f;
  }
  if (type == "boost") {
    BoostState b;
    b.init = j.at("init").get<std::vector<double>>();
    b.learning_rate = j.at("learning_rate").get<double>();
    for (const auto& r : j.at("rounds")) {
      std::vector<Tree> round;
      for (const auto& t : r) round.push_back(tree_from_json(t));
      b.rounds.push_back(std::move(round));
    }
    return b;
  }
  if (type == "linear") return LinearState{j.at("weights").get<Matrix>()};
  if (type == "kernel") {
    return KernelState{j.at("support").get<Matrix>(), j.at("coef").get<Matrix>(), j.at("gamma").get<double>()};
  }
  throw FormatError("unknown model state type '" + type + "'");
}

}  // namespace

std::string serialize_model(const TrainedModel& m) {
  json state = {{"feature_names", m.feature_names}, {"mean", m.mean},
                {"scale", m.scale},                 {"classes", m.classes},
                {"target_mean", m.target_mean},     {"target_scale", m.target_scale},
                {"model", state_to_json(m.state)}};
  if (m.label_scheme) state["label_scheme"] = to_string(*m.label_scheme);
  json j = {{"format_version", 1}, {"spec", m.spec}, {"state", state}};
  return j.dump();
}

TrainedModel deserialize_model(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format_version").get<int>() != 1) throw FormatError("unsupported model format_version");
    TrainedModel m;
    m.spec = j.at("spec").get<ModelSpec>();
    const auto& s = j.at("state");
    m.feature_names = s.at("feature_names").get<std::vector<std::string>>();
    m.mean = s.at("mean").get<std::vector<double>>();
    m.scale = s.at("scale").get<std::vector<double>>();
    m.classes = s.at("classes").get<std::vector<int>>();
    m.target_mean = s.at("target_mean").get<double>();
    m.target_scale = s.at("target_scale").get<double>();
    if (s.contains("label_scheme")) m.label_scheme = parse_scheme(s.at("label_scheme").get<std::string>());
    m.state = state_from_json(s.at("model"));
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model file: ") + e.what());
  }
}

}  // namespace qiraa
