#include "qiraa/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "qiraa/app.hpp"
#include "qiraa/cleaning.hpp"
#include "qiraa/errors.hpp"
#include "qiraa/evaluation.hpp"
#include "qiraa/selection.hpp"
#include "qiraa/server.hpp"
#include "qiraa/util.hpp"

namespace qiraa::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string data;
  std::string scheme = "three_way";
  std::uint64_t seed = 0;
  std::string out;
  std::string manifest;
  std::string features_csv;
  app::ResourcePaths res;
  std::string model;
  std::vector<std::string> params;
  std::string task = "classify";
  std::size_t k = 10;
  std::string model_in;
  // clean
  int threshold = 5;
  bool loo = false;
  std::string predictions_in;
  std::string predictions_out;
  std::string decisions;
  std::string changelog;
  std::string triage;
  std::string log;
  // selection
  std::size_t step = 1;
  std::size_t target = 10;
  std::size_t validation_folds = 5;
  std::vector<std::string> groups = {"POS", "Syntactic", "CEFR", "Embedding"};
  // serve
  std::string host = "127.0.0.1";
  int port = 8337;
  std::string token;
  std::string ui_dir;
};

struct Run {
  Options& o;
  std::ostream& out;
  std::ostream& err;
  app::InputLog inputs;
  std::vector<std::string> outputs;

  LabelScheme scheme() const {
    auto s = parse_scheme(o.scheme);
    if (!s) throw UsageError("unknown label scheme '" + o.scheme + "'");
    return *s;
  }

  Dataset dataset() {
    if (o.data.empty()) throw UsageError("--data is required");
    return parse_annotated(inputs.read("data", o.data), scheme());
  }

  void require_feature_source() const {
    if (o.features_csv.empty() && o.res.lexicon.empty()) throw UsageError("give --lexicon or --features");
  }

  /// Features aligned with d.sentences.
  FeatureTable features(const Dataset& d, app::LoadedResources* keep = nullptr) {
    if (!o.features_csv.empty()) return app::features_from_csv(d, inputs.read("features", o.features_csv));
    auto res = app::load_resources(o.res, inputs, &d, scheme());
    auto table = featurize(d, res.features, res.embedding.get());
    if (keep) *keep = std::move(res);
    return table;
  }

  void write(const std::string& path, std::string_view content) {
    util::write_file_atomic(path, content);
    outputs.push_back(path);
  }
};

void add_data(CLI::App* sub, Options& o) {
  sub->add_option("--data", o.data, "Annotated corpus (extended CoNLL-U)");
  sub->add_option("--scheme", o.scheme, "Label scheme: five_way, three_way or binary")
      ->check(CLI::IsMember({"five_way", "three_way", "binary"}));
}

void add_resources(CLI::App* sub, Options& o) {
  sub->add_option("--lexicon", o.res.lexicon, "CEFR lexicon TSV (lemma, level, source)");
  sub->add_option("--precedence", o.res.precedence, "Lexicon source precedence, earliest wins")->delimiter(',');
  sub->add_option("--connectors-simple", o.res.connectors_simple, "Simple connector lemmas, one per line");
  sub->add_option("--connectors-complex", o.res.connectors_complex, "Complex connector lemmas, one per line");
  sub->add_option("--relations", o.res.relations, "Relation map: catib, ud, or a TSV path");
  sub->add_option("--tags", o.res.tags, "POS tag inventory TSV");
  sub->add_option("--vectors", o.res.vectors, "Word vectors (.vec) for composed sentence embeddings");
  sub->add_option("--idf-data", o.res.idf_data, "Corpus for tf-idf weights (defaults to --data)");
  sub->add_option("--sentence-vectors", o.res.sentence_vectors, "Precomputed sentence vectors TSV");
}

void add_features(CLI::App* sub, Options& o) {
  add_resources(sub, o);
  sub->add_option("--features", o.features_csv, "Feature CSV from `featurize` instead of computing features");
}

void add_model(CLI::App* sub, Options& o, const std::string& fallback) {
  sub->add_option("--model", o.model, "Model kind")->default_str(fallback);
  sub->add_option("--param", o.params, "Hyperparameter override key=value (repeatable)");
}

void add_run(CLI::App* sub, Options& o) {
  sub->add_option("--seed", o.seed, "Master seed");
  sub->add_option("--out", o.out, "Output file");
  sub->add_option("--manifest", o.manifest, "Manifest path (default <out>.manifest.json)");
}

json option_values(const CLI::App* sub) {
  json cfg = json::object();
  for (const auto* opt : sub->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const auto& name = opt->get_lnames().front();
    if (name == "help") continue;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      cfg[name] = r.size() == 1 ? json(r.front()) : json(r);
    } else {
      cfg[name] = opt->get_default_str();
    }
  }
  return cfg;
}

void write_manifest(Run& run, const std::string& command, const CLI::App* sub) {
  std::string path = run.o.manifest;
  if (path.empty() && !run.o.out.empty()) path = run.o.out + ".manifest.json";
  if (path.empty()) {
    std::string stem = command;
    std::replace(stem.begin(), stem.end(), ' ', '-');
    path = "qiraa-" + stem + ".manifest.json";
  }
  json m = {{"tool", "qiraa"},
            {"format_version", 1},
            {"command", command},
            {"seed", run.o.seed},
            {"config", option_values(sub)},
            {"inputs", run.inputs.entries()},
            {"outputs", run.outputs}};
  util::write_file_atomic(path, m.dump(2) + "\n");
}

Task parse_task_or_usage(const std::string& t) {
  auto task = parse_task(t);
  if (!task) throw UsageError("unknown task '" + t + "'");
  return *task;
}

// ---- commands --------------------------------------------------------------

void cmd_featurize(Run& r) {
  if (r.o.out.empty()) throw UsageError("--out is required");
  if (r.o.res.lexicon.empty()) throw UsageError("--lexicon is required");
  const auto d = r.dataset();
  const auto table = r.features(d);
  std::vector<std::string> ids;
  for (const auto& s : d.sentences) ids.push_back(s.id);
  r.write(r.o.out, to_csv(table, ids));
  r.out << "featurized " << table.rows() << " sentences x " << table.cols() << " columns\n";
}

void cmd_train(Run& r) {
  if (r.o.out.empty()) throw UsageError("--out is required");
  r.require_feature_source();
  const auto task = parse_task_or_usage(r.o.task);
  const auto spec = app::build_spec(r.o.model, task, r.o.params, r.o.seed);
  const auto d = r.dataset();
  const auto rows = app::labelled_rows(d, r.features(d));
  TrainedModel m = task == Task::classify ? train(spec, rows.X, rows.classes) : train(spec, rows.X, rows.ordinals);
  if (task == Task::classify) m.label_scheme = d.label_scheme;
  r.write(r.o.out, serialize_model(m));
  r.out << "trained " << to_string(spec.kind) << " (" << to_string(task) << ") on " << rows.X.rows()
        << " sentences\n";
}

void cmd_evaluate(Run& r) {
  if (r.o.model_in.empty()) throw UsageError("--model-in is required");
  r.require_feature_source();
  const auto m = deserialize_model(r.inputs.read("model", r.o.model_in));
  const auto d = r.dataset();
  const auto rows = app::labelled_rows(d, r.features(d));
  MetricReport report;
  json body;
  if (m.spec.task == Task::classify) {
    report = transfer_eval(m, rows.X, rows.classes, d.label_scheme);
    r.out << prf_table({{to_string(m.spec.kind), *report.prf}}) << "\n" << confusion_table(*report.confusion);
  } else {
    const auto pred = predict(m, rows.X);
    report = regression_report(rows.ordinals, pred.values);
    r.out << correlation_table({{to_string(m.spec.kind), *report.correlations}});
  }
  body = {{"model", m.spec}, {"scheme", to_string(d.label_scheme)}, {"report", report_to_json(report)}};
  if (!r.o.out.empty()) r.write(r.o.out, body.dump(2) + "\n");
}

void cmd_cv(Run& r, Task task) {
  r.require_feature_source();
  const auto spec = app::build_spec(r.o.model, task, r.o.params, r.o.seed);
  const auto d = r.dataset();
  const auto rows = app::labelled_rows(d, r.features(d));
  MetricReport report;
  if (task == Task::classify) {
    report = cross_validate(spec, rows.X, rows.classes, r.o.k, r.o.seed, class_names(d.label_scheme));
    r.out << prf_table({{to_string(spec.kind), *report.prf}}) << "\n" << confusion_table(*report.confusion);
  } else {
    report = cross_validate(spec, rows.X, rows.ordinals, r.o.k, r.o.seed);
    r.out << correlation_table({{to_string(spec.kind), *report.correlations}});
  }
  const json body = {{"model", spec},
                     {"k", r.o.k},
                     {"seed", r.o.seed},
                     {"scheme", to_string(d.label_scheme)},
                     {"report", report_to_json(report)}};
  if (!r.o.out.empty()) r.write(r.o.out, body.dump(2) + "\n");
}

json predictions_json(const std::vector<std::string>& models, const std::vector<std::string>& ids,
                      const std::vector<std::vector<int>>& preds, LabelScheme scheme) {
  json rows = json::array();
  for (std::size_t i = 0; i < ids.size(); ++i) rows.push_back({{"sentence_id", ids[i]}, {"votes", preds[i]}});
  return {{"models", models}, {"scheme", to_string(scheme)}, {"rows", rows}};
}

void cmd_clean_flag(Run& r) {
  if (r.o.out.empty()) throw UsageError("--out is required");
  if (r.o.predictions_in.empty()) r.require_feature_source();
  const auto d = r.dataset();
  std::vector<std::string> ids;
  for (auto i : d.labelled()) ids.push_back(d.sentences[i].id);

  std::vector<std::string> models;
  std::vector<std::vector<int>> preds;
  if (!r.o.predictions_in.empty()) {
    json pj;
    try {
      pj = json::parse(r.inputs.read("predictions", r.o.predictions_in));
      models = pj.at("models").get<std::vector<std::string>>();
      std::map<std::string, std::vector<int>> by_id;
      for (const auto& row : pj.at("rows")) {
        by_id[row.at("sentence_id").get<std::string>()] = row.at("votes").get<std::vector<int>>();
      }
      for (const auto& id : ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw UnknownSentence(id);
        preds.push_back(it->second);
      }
    } catch (const json::exception& e) {
      throw FormatError(std::string("malformed predictions file: ") + e.what());
    }
  } else {
    const auto rows = app::labelled_rows(d, r.features(d));
    const auto specs = cleaning_ensemble(r.o.seed);
    for (const auto& s : specs) models.push_back(to_string(s.kind));
    const std::size_t k = r.o.loo ? rows.X.rows() : r.o.k;
    preds = train_ensemble(specs, rows.X, rows.classes, k, r.o.seed);
    if (!r.o.predictions_out.empty()) {
      r.write(r.o.predictions_out, predictions_json(models, ids, preds, d.label_scheme).dump() + "\n");
    }
  }
  const auto items = flag_disagreements(d, preds, models, r.o.threshold);
  r.write(r.o.out, write_triage_items(items, r.o.threshold));
  r.out << "flagged " << items.size() << " of " << ids.size() << " labelled sentences (threshold "
        << r.o.threshold << ")\n";
}

void print_histogram(std::ostream& out, const std::string& title, const std::map<std::string, long long>& h) {
  out << title;
  for (const auto& [k, v] : h) out << "  " << k << "=" << v;
  out << "\n";
}

void cmd_clean_apply(Run& r) {
  if (r.o.out.empty()) throw UsageError("--out is required");
  if (r.o.decisions.empty()) throw UsageError("--decisions is required");
  const auto d = r.dataset();
  const auto decisions = read_decisions(r.inputs.read("decisions", r.o.decisions));
  const auto [cleaned, log] = apply_decisions(d, decisions);
  r.write(r.o.out, serialize(cleaned));
  const auto changelog = r.o.changelog.empty() ? r.o.out + ".changes.json" : r.o.changelog;
  r.write(changelog, to_json(log).dump(2) + "\n");
  print_histogram(r.out, "before:", label_histogram(d));
  print_histogram(r.out, "after: ", label_histogram(cleaned));
  r.out << log.size() << " changes, " << cleaned.size() << " sentences kept\n";
}

void cmd_clean_export(Run& r) {
  if (r.o.out.empty() || r.o.triage.empty() || r.o.log.empty()) {
    throw UsageError("--triage, --log and --out are required");
  }
  const auto items = read_triage_items(r.inputs.read("triage", r.o.triage));
  r.inputs.read("log", r.o.log);
  TriageStore store(app::resolve_input(r.o.log), items);
  const auto decisions = store.export_decisions();
  r.write(r.o.out, write_decisions(decisions));
  r.out << "exported " << decisions.size() << " decisions\n";
}

std::vector<FeatureGroup> parse_groups(const std::vector<std::string>& names) {
  std::vector<FeatureGroup> groups;
  for (const auto& n : names) {
    auto g = parse_feature_group(n);
    if (!g) throw UsageError("unknown feature group '" + n + "'");
    groups.push_back(*g);
  }
  return groups;
}

void cmd_rfe(Run& r) {
  r.require_feature_source();
  const auto spec = app::build_spec(r.o.model, Task::classify, r.o.params, r.o.seed);
  const auto d = r.dataset();
  const auto rows = app::labelled_rows(d, r.features(d));
  RfeOptions opt;
  opt.step = r.o.step;
  opt.target_count = r.o.target;
  opt.validation_folds = r.o.validation_folds;
  opt.seed = r.o.seed;
  const auto result = rfe(spec, rows.X, rows.classes, opt);
  r.out << rfe_table(result);
  json body = to_json(result);
  body["model"] = spec;
  if (!r.o.out.empty()) r.write(r.o.out, body.dump(2) + "\n");
}

void cmd_ablate(Run& r) {
  r.require_feature_source();
  const auto groups = parse_groups(r.o.groups);
  const auto spec = app::build_spec(r.o.model, Task::classify, r.o.params, r.o.seed);
  const auto d = r.dataset();
  const auto rows = app::labelled_rows(d, r.features(d));
  const auto result = ablate(spec, rows.X, rows.classes, groups, r.o.k, r.o.seed);
  r.out << ablation_table(result);
  json body = to_json(result);
  body["model"] = spec;
  body["k"] = r.o.k;
  if (!r.o.out.empty()) r.write(r.o.out, body.dump(2) + "\n");
}

void cmd_predict(Run& r) {
  if (r.o.model_in.empty()) throw UsageError("--model-in is required");
  if (r.o.res.lexicon.empty()) throw UsageError("--lexicon is required");
  const auto m = deserialize_model(r.inputs.read("model", r.o.model_in));
  const auto d = r.dataset();
  const auto res = app::load_resources(r.o.res, r.inputs, &d, r.scheme());
  json all = json::array();
  for (const auto& s : d.sentences) {
    auto p = app::predict_sentence(m, s, res);
    r.out << s.id << "\t" << p.at("level").get<std::string>() << "\n";
    all.push_back(std::move(p));
  }
  if (!r.o.out.empty()) r.write(r.o.out, all.dump(2) + "\n");
}

void cmd_serve(Run& r, const std::function<void()>& before_listen) {
  if (r.o.triage.empty() || r.o.log.empty()) throw UsageError("--triage and --log are required");
  const auto items = read_triage_items(r.inputs.read("triage", r.o.triage));
  TriageStore store(r.o.log, items);
  std::optional<TrainedModel> model;
  app::LoadedResources res;
  if (!r.o.model_in.empty()) {
    if (r.o.res.lexicon.empty()) throw UsageError("--model-in needs --lexicon");
    model = deserialize_model(r.inputs.read("model", r.o.model_in));
    res = app::load_resources(r.o.res, r.inputs, nullptr, r.scheme());
  }
  ServeConfig cfg;
  cfg.host = r.o.host;
  cfg.port = r.o.port;
  cfg.token = r.o.token;
  cfg.ui_dir = r.o.ui_dir;
  cfg.scheme = r.scheme();
  ApiServer server(store, cfg, model ? &*model : nullptr, model ? &res : nullptr);
  const int port = server.bind();
  if (port < 0) throw Error("cannot bind " + cfg.host + ":" + std::to_string(cfg.port));
  before_listen();
  r.out << "serving on http://" << cfg.host << ":" << port << "\n" << std::flush;
  server.serve();
}

const CLI::App* deepest(const CLI::App* app) {
  for (const auto* sub : app->get_subcommands()) return deepest(sub);
  return app;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sentence-level CEFR difficulty toolkit for Arabic", "qiraa"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  Options o;

  auto* featurize = app.add_subcommand("featurize", "Extract the feature table of a corpus");
  add_data(featurize, o);
  add_resources(featurize, o);
  add_run(featurize, o);

  auto* train_cmd = app.add_subcommand("train", "Train a model and write it as JSON");
  add_data(train_cmd, o);
  add_features(train_cmd, o);
  add_model(train_cmd, o, "svm_rbf");
  train_cmd->add_option("--task", o.task, "classify or regress")->check(CLI::IsMember({"classify", "regress"}));
  add_run(train_cmd, o);

  auto* evaluate = app.add_subcommand("evaluate", "Score a trained model on another labelled corpus");
  add_data(evaluate, o);
  add_features(evaluate, o);
  evaluate->add_option("--model-in", o.model_in, "Model JSON from `train`");
  add_run(evaluate, o);

  auto* cv = app.add_subcommand("cv", "Cross-validated classification report");
  add_data(cv, o);
  add_features(cv, o);
  add_model(cv, o, "svm_rbf");
  cv->add_option("--k", o.k, "Number of folds");
  add_run(cv, o);

  auto* regress = app.add_subcommand("regress", "Cross-validated regression on the ordinal level");
  add_data(regress, o);
  add_features(regress, o);
  add_model(regress, o, "ridge");
  regress->add_option("--k", o.k, "Number of folds");
  add_run(regress, o);

  auto* clean = app.add_subcommand("clean", "Label cleaning through ensemble disagreement");
  clean->require_subcommand(1);
  auto* flag = clean->add_subcommand("flag", "Flag gold labels contradicted by the ensemble");
  add_data(flag, o);
  add_features(flag, o);
  flag->add_option("--k", o.k, "Folds for the out-of-fold ensemble");
  flag->add_flag("--loo", o.loo, "Leave-one-out instead of k folds");
  flag->add_option("--threshold", o.threshold, "Identical votes needed (3 to 5)")->check(CLI::Range(3, 5));
  flag->add_option("--predictions", o.predictions_in, "Reuse saved ensemble predictions");
  flag->add_option("--predictions-out", o.predictions_out, "Save the ensemble predictions");
  add_run(flag, o);
  auto* apply = clean->add_subcommand("apply", "Apply triage decisions to a corpus");
  add_data(apply, o);
  apply->add_option("--decisions", o.decisions, "Decision JSONL (export or store log)");
  apply->add_option("--changelog", o.changelog, "Change log path (default <out>.changes.json)");
  add_run(apply, o);
  auto* exp = clean->add_subcommand("export", "Export the current decisions of a store log");
  exp->add_option("--triage", o.triage, "Triage items from `clean flag`");
  exp->add_option("--log", o.log, "Decision log");
  add_run(exp, o);

  auto* rfe_cmd = app.add_subcommand("rfe", "Recursive feature elimination");
  add_data(rfe_cmd, o);
  add_features(rfe_cmd, o);
  add_model(rfe_cmd, o, "svm_linear");
  rfe_cmd->add_option("--step", o.step, "Units removed per iteration")->check(CLI::PositiveNumber);
  rfe_cmd->add_option("--target", o.target, "Units left at the end")->check(CLI::PositiveNumber);
  rfe_cmd->add_option("--validation-folds", o.validation_folds, "Folds for the trace F1 (0 skips it)");
  add_run(rfe_cmd, o);

  auto* ablate_cmd = app.add_subcommand("ablate", "Feature-group ablation");
  add_data(ablate_cmd, o);
  add_features(ablate_cmd, o);
  add_model(ablate_cmd, o, "svm_linear");
  ablate_cmd->add_option("--groups", o.groups, "Groups to exclude one at a time")->delimiter(',');
  ablate_cmd->add_option("--k", o.k, "Number of folds");
  add_run(ablate_cmd, o);

  auto* predict_cmd = app.add_subcommand("predict", "Predict the level of annotated sentences");
  add_data(predict_cmd, o);
  add_resources(predict_cmd, o);
  predict_cmd->add_option("--model-in", o.model_in, "Model JSON from `train`");
  add_run(predict_cmd, o);

  auto* serve = app.add_subcommand("serve", "HTTP API for triage and prediction");
  serve->add_option("--triage", o.triage, "Triage items from `clean flag`");
  serve->add_option("--log", o.log, "Decision log (created if absent)");
  serve->add_option("--host", o.host, "Listen address");
  serve->add_option("--port", o.port, "Listen port");
  serve->add_option("--token", o.token, "Shared token required in X-Qiraa-Token");
  serve->add_option("--ui-dir", o.ui_dir, "Directory of built UI assets served at /");
  serve->add_option("--model-in", o.model_in, "Model for /api/predict");
  serve->add_option("--scheme", o.scheme, "Label scheme of posted sentences")
      ->check(CLI::IsMember({"five_way", "three_way", "binary"}));
  add_resources(serve, o);
  add_run(serve, o);

  std::vector<std::string> argv_store = {"qiraa"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << deepest(&app)->help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << deepest(&app)->help();
    return 2;
  }

  const CLI::App* sub = deepest(&app);
  std::string command = sub->get_name();
  if (sub->get_parent() && sub->get_parent() != &app) command = sub->get_parent()->get_name() + " " + command;
  if (o.model.empty()) {
    if (const auto* opt = sub->get_option_no_throw("--model")) o.model = opt->get_default_str();
  }

  Run r{o, out, err, {}, {}};
  try {
    if (command == "featurize") {
      cmd_featurize(r);
    } else if (command == "train") {
      cmd_train(r);
    } else if (command == "evaluate") {
      cmd_evaluate(r);
    } else if (command == "cv") {
      cmd_cv(r, Task::classify);
    } else if (command == "regress") {
      cmd_cv(r, Task::regress);
    } else if (command == "clean flag") {
      cmd_clean_flag(r);
    } else if (command == "clean apply") {
      cmd_clean_apply(r);
    } else if (command == "clean export") {
      cmd_clean_export(r);
    } else if (command == "rfe") {
      cmd_rfe(r);
    } else if (command == "ablate") {
      cmd_ablate(r);
    } else if (command == "predict") {
      cmd_predict(r);
    } else if (command == "serve") {
      cmd_serve(r, [&] { write_manifest(r, "serve", sub); });
      return 0;
    }
    write_manifest(r, command, sub);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << sub->help();
    return 2;
  } catch (const InvalidHyperparam& e) {
    err << "error: " << e.what() << "\n\n" << sub->help();
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace qiraa::cli
