#include "qiraa/selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>

#include "qiraa/corpus.hpp"
#include "qiraa/errors.hpp"
#include "qiraa/evaluation.hpp"
#include "qiraa/util.hpp"

namespace qiraa {

namespace {

bool is_embedding_column(const std::string& name) { return group_of(name) == FeatureGroup::Embedding; }

struct UnitLayout {
  std::vector<std::string> names;
  std::vector<std::vector<std::size_t>> columns;  // table columns of each unit
};

UnitLayout layout_units(const std::vector<std::string>& column_names) {
  UnitLayout u;
  std::optional<std::size_t> emb;
  for (std::size_t c = 0; c < column_names.size(); ++c) {
    if (is_embedding_column(column_names[c])) {
      if (!emb) {
        emb = u.names.size();
        u.names.push_back(kEmbeddingUnit);
        u.columns.emplace_back();
      }
      u.columns[*emb].push_back(c);
    } else {
      u.names.push_back(column_names[c]);
      u.columns.push_back({c});
    }
  }
  return u;
}

std::vector<std::size_t> columns_of(const UnitLayout& u, const std::vector<std::size_t>& active) {
  std::vector<std::size_t> cols;
  for (auto a : active) cols.insert(cols.end(), u.columns[a].begin(), u.columns[a].end());
  std::sort(cols.begin(), cols.end());
  return cols;
}

double weighted_f1(std::span<const int> gold, std::span<const int> pred) {
  return weighted_prf(confusion(gold, pred)).f1;
}

std::vector<Fold> internal_folds(std::span<const int> y, std::size_t k, std::uint64_t seed) {
  std::map<int, std::size_t> counts;
  for (int c : y) ++counts[c];
  bool stratifiable = true;
  for (const auto& [c, n] : counts) stratifiable = stratifiable && n >= k;
  return stratifiable ? stratified_folds(y, k, seed) : shuffled_folds(y.size(), k, seed);
}

// Scores for the active units of X (whose columns are laid out by `local`).
std::vector<double> score_units(const ModelSpec& spec, const FeatureTable& X, std::span<const int> y,
                                const std::vector<std::vector<std::size_t>>& local, std::uint64_t seed) {
  std::vector<double> scores(local.size(), 0.0);
  ModelSpec s = spec;
  s.hyper.seed = seed;
  if (spec.kind == ModelKind::softmax || spec.kind == ModelKind::svm_linear) {
    const auto model = train(s, X, y);
    const auto& W = std::get<LinearState>(model.state).weights;
    for (std::size_t u = 0; u < local.size(); ++u) {
      double sq = 0.0;
      for (std::size_t r = 0; r < W.rows(); ++r) {
        for (auto c : local[u]) sq += W(r, c) * W(r, c);
      }
      scores[u] = std::sqrt(sq);
    }
    return scores;
  }

  const auto folds = internal_folds(y, 5, seed);
  const auto& fold = folds.front();
  std::vector<int> train_y, test_y;
  for (auto i : fold.train) train_y.push_back(y[i]);
  for (auto i : fold.test) test_y.push_back(y[i]);
  const auto model = train(s, X.select_rows(fold.train), train_y);
  const auto held_out = X.select_rows(fold.test);
  const double base = weighted_f1(test_y, predict(model, held_out).labels);
  for (std::size_t u = 0; u < local.size(); ++u) {
    auto permuted = held_out;
    std::vector<std::size_t> order(permuted.rows());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(util::derive_seed(seed, u));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t r = 0; r < permuted.rows(); ++r) {
      for (auto c : local[u]) permuted.values(r, c) = held_out.values(order[r], c);
    }
    scores[u] = base - weighted_f1(test_y, predict(model, permuted).labels);
  }
  return scores;
}

}  // namespace

std::vector<std::string> selection_units(const std::vector<std::string>& column_names) {
  return layout_units(column_names).names;
}

RfeResult rfe(const ModelSpec& spec, const FeatureTable& X, std::span<const int> y, const RfeOptions& opt) {
  if (opt.step < 1) throw InvalidHyperparam("rfe step must be at least 1");
  if (opt.target_count < 1) throw InvalidHyperparam("rfe target_count must be at least 1");
  if (spec.task != Task::classify) throw InvalidHyperparam("rfe needs a classification model");
  if (X.rows() != y.size()) throw LengthMismatch(X.rows(), y.size());
  const auto layout = layout_units(X.names);
  if (opt.target_count > layout.names.size()) throw InvalidHyperparam("rfe target_count exceeds the number of features");

  RfeResult result;
  result.seed = opt.seed;
  std::vector<std::size_t> active(layout.names.size());
  std::iota(active.begin(), active.end(), 0);
  std::vector<std::size_t> eliminated;  // in removal order
  std::vector<double> last_scores;

  for (std::size_t iter = 0;; ++iter) {
    const auto cols = columns_of(layout, active);
    const auto sub = X.select_cols(cols);
    std::vector<std::vector<std::size_t>> local;
    for (auto a : active) {
      std::vector<std::size_t> lc;
      for (auto c : layout.columns[a]) {
        lc.push_back(static_cast<std::size_t>(std::lower_bound(cols.begin(), cols.end(), c) - cols.begin()));
      }
      local.push_back(std::move(lc));
    }
    last_scores = score_units(spec, sub, y, local, util::derive_seed(opt.seed, iter));
    if (active.size() <= opt.target_count) break;

    std::vector<std::size_t> order(active.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return last_scores[a] < last_scores[b]; });
    const std::size_t n_remove = std::min(opt.step, active.size() - opt.target_count);
    std::vector<std::size_t> drop(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_remove));

    RfeStep step;
    for (auto d : drop) {
      step.removed.push_back(layout.names[active[d]]);
      eliminated.push_back(active[d]);
    }
    std::sort(drop.begin(), drop.end(), std::greater<>());
    for (auto d : drop) active.erase(active.begin() + static_cast<std::ptrdiff_t>(d));

    if (opt.validation_folds > 1) {
      const auto remaining = X.select_cols(columns_of(layout, active));
      ModelSpec s = spec;
      const auto folds = internal_folds(y, opt.validation_folds, util::derive_seed(opt.seed, iter));
      std::vector<int> pooled(y.size(), 0);
      for (std::size_t f = 0; f < folds.size(); ++f) {
        s.hyper.seed = util::derive_seed(util::derive_seed(opt.seed, iter), f);
        std::vector<int> ty;
        for (auto i : folds[f].train) ty.push_back(y[i]);
        const auto m = train(s, remaining.select_rows(folds[f].train), ty);
        const auto p = predict(m, remaining.select_rows(folds[f].test)).labels;
        for (std::size_t t = 0; t < folds[f].test.size(); ++t) pooled[folds[f].test[t]] = p[t];
      }
      step.validation_f1 = weighted_f1(y, pooled);
    }
    result.elimination_trace.push_back(std::move(step));
  }

  std::vector<std::size_t> order(active.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return last_scores[a] > last_scores[b]; });
  for (auto o : order) result.ranking.push_back(layout.names[active[o]]);
  for (auto it = eliminated.rbegin(); it != eliminated.rend(); ++it) result.ranking.push_back(layout.names[*it]);
  return result;
}

AblationResult ablate(const ModelSpec& spec, const FeatureTable& X, std::span<const int> y,
                      const std::vector<FeatureGroup>& groups, std::size_t k, std::uint64_t seed) {
  if (X.rows() != y.size()) throw LengthMismatch(X.rows(), y.size());
  auto run = [&](const std::string& label, std::optional<FeatureGroup> excluded,
                 const std::vector<std::size_t>& cols) {
    if (cols.empty()) throw DegenerateData("ablation row '" + label + "' has no columns left");
    const auto report = cross_validate(spec, X.select_cols(cols), y, k, seed);
    AblationRow row;
    row.label = label;
    row.excluded = excluded;
    row.precision = report.prf->precision;
    row.recall = report.prf->recall;
    row.f1 = report.prf->f1;
    row.columns = cols.size();
    row.fold_hash = *report.fold_hash;
    return row;
  };

  AblationResult result;
  result.seed = seed;
  std::vector<std::size_t> all(X.cols());
  std::iota(all.begin(), all.end(), 0);
  result.full = run("all features", std::nullopt, all);
  for (auto g : groups) {
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < X.cols(); ++c) {
      if (group_of(X.names[c]) != g) cols.push_back(c);
    }
    result.rows.push_back(run("exclude " + to_string(g), g, cols));
  }
  std::vector<std::size_t> emb;
  for (std::size_t c = 0; c < X.cols(); ++c) {
    if (is_embedding_column(X.names[c])) emb.push_back(c);
  }
  if (emb.empty()) throw DegenerateData("ablation needs embedding columns for the embeddings-only row");
  result.rows.push_back(run("only Embedding", std::nullopt, emb));
  return result;
}

json to_json(const RfeResult& r) {
  json trace = json::array();
  for (const auto& s : r.elimination_trace) trace.push_back({{"removed", s.removed}, {"validation_f1", s.validation_f1}});
  return {{"ranking", r.ranking}, {"elimination_trace", trace}, {"seed", r.seed}};
}

namespace {

json row_json(const AblationRow& row) {
  return {{"label", row.label},
          {"excluded", row.excluded ? json(to_string(*row.excluded)) : json(nullptr)},
          {"precision", row.precision},
          {"recall", row.recall},
          {"f1", row.f1},
          {"columns", row.columns},
          {"fold_hash", util::hex64(row.fold_hash)}};
}

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

json to_json(const AblationResult& r) {
  json rows = json::array();
  for (const auto& row : r.rows) rows.push_back(row_json(row));
  return {{"full", row_json(r.full)}, {"rows", rows}, {"seed", r.seed}};
}

std::string rfe_table(const RfeResult& r, std::size_t top) {
  std::string out = "Rank  Feature\n";
  for (std::size_t i = 0; i < r.ranking.size() && i < top; ++i) {
    auto rank = std::to_string(i + 1);
    out += rank + std::string(6 - std::min<std::size_t>(rank.size(), 5), ' ') + r.ranking[i] + "\n";
  }
  return out;
}

std::string ablation_table(const AblationResult& r) {
  std::size_t w = 12;
  for (const auto& row : r.rows) w = std::max(w, row.label.size());
  auto line = [&](const AblationRow& row) {
    return row.label + std::string(w - row.label.size(), ' ') + "  " + fmt2(row.precision) + "  " +
           fmt2(row.recall) + "  " + fmt2(row.f1) + "\n";
  };
  std::string out = "Features" + std::string(w - 8, ' ') + "  P     R     F-1\n";
  out += line(r.full);
  for (const auto& row : r.rows) out += line(row);
  return out;
}

}  // namespace qiraa
