#include "qiraa/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "qiraa/corpus.hpp"
#include "qiraa/errors.hpp"
#include "qiraa/util.hpp"

namespace qiraa {

long long ConfusionMatrix::total() const {
  long long t = 0;
  for (const auto& r : counts) t += std::accumulate(r.begin(), r.end(), 0LL);
  return t;
}

long long ConfusionMatrix::row_sum(std::size_t i) const {
  return std::accumulate(counts[i].begin(), counts[i].end(), 0LL);
}

long long ConfusionMatrix::col_sum(std::size_t j) const {
  long long t = 0;
  for (const auto& r : counts) t += r[j];
  return t;
}

ConfusionMatrix confusion(std::span<const int> gold, std::span<const int> pred, std::vector<int> classes) {
  if (gold.size() != pred.size()) throw LengthMismatch(gold.size(), pred.size());
  if (gold.empty()) throw Error("confusion matrix needs at least one instance");
  if (classes.empty()) {
    classes.assign(gold.begin(), gold.end());
    classes.insert(classes.end(), pred.begin(), pred.end());
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  }
  std::map<int, std::size_t> pos;
  for (std::size_t i = 0; i < classes.size(); ++i) pos[classes[i]] = i;
  ConfusionMatrix cm;
  cm.classes = classes;
  for (int c : classes) cm.names.push_back(std::to_string(c));
  cm.counts.assign(classes.size(), std::vector<long long>(classes.size(), 0));
  for (std::size_t k = 0; k < gold.size(); ++k) {
    auto g = pos.find(gold[k]);
    auto p = pos.find(pred[k]);
    if (g == pos.end() || p == pos.end()) throw Error("label outside the confusion matrix classes");
    ++cm.counts[g->second][p->second];
  }
  return cm;
}

PrfSummary weighted_prf(const ConfusionMatrix& cm) {
  PrfSummary s;
  const double total = static_cast<double>(cm.total());
  if (total <= 0) throw Error("weighted_prf needs a non-empty confusion matrix");
  const std::size_t K = cm.classes.size();
  for (std::size_t i = 0; i < K; ++i) {
    ClassStats c;
    c.cls = cm.classes[i];
    const double tp = static_cast<double>(cm.counts[i][i]);
    const double col = static_cast<double>(cm.col_sum(i));
    const double row = static_cast<double>(cm.row_sum(i));
    c.support = cm.row_sum(i);
    c.precision = col > 0 ? tp / col : 0.0;
    c.recall = row > 0 ? tp / row : 0.0;
    c.f1 = (c.precision + c.recall) > 0 ? 2.0 * c.precision * c.recall / (c.precision + c.recall) : 0.0;
    const double w = row / total;
    s.precision += w * c.precision;
    s.recall += w * c.recall;
    s.f1 += w * c.f1;
    s.macro_precision += c.precision / static_cast<double>(K);
    s.macro_recall += c.recall / static_cast<double>(K);
    s.macro_f1 += c.f1 / static_cast<double>(K);
    s.per_class.push_back(c);
  }
  return s;
}

namespace {

// Number of adjacent swaps needed to sort v (inversions), via merge sort.
long long count_inversions(std::vector<double>& v, std::vector<double>& buf, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  long long inv = count_inversions(v, buf, lo, mid) + count_inversions(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += static_cast<long long>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

// Sum of t(t-1)/2 over runs of equal values in a sorted sequence.
template <typename It, typename Eq>
long long tied_pairs(It first, It last, Eq eq) {
  long long total = 0;
  while (first != last) {
    It run = first;
    long long t = 0;
    while (run != last && eq(*run, *first)) {
      ++run;
      ++t;
    }
    total += t * (t - 1) / 2;
    first = run;
  }
  return total;
}

}  // namespace

std::optional<double> kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw LengthMismatch(x.size(), y.size());
  if (x.size() < 2) throw Error("kendall_tau_b needs at least two points");
  const std::size_t n = x.size();
  std::vector<std::pair<double, double>> pts(n);
  for (std::size_t i = 0; i < n; ++i) pts[i] = {x[i], y[i]};
  std::sort(pts.begin(), pts.end());
  const long long n0 = static_cast<long long>(n) * static_cast<long long>(n - 1) / 2;
  const long long n1 = tied_pairs(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first == b.first; });
  const long long n3 = tied_pairs(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a == b; });
  std::vector<double> ys(n), buf(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = pts[i].second;
  // Within an x-tie group y is already ascending, so those pairs never count
  // as inversions.
  const long long swaps = count_inversions(ys, buf, 0, n);
  const long long n2 = tied_pairs(ys.begin(), ys.end(), [](double a, double b) { return a == b; });
  const long long left = n0 - n1;
  const long long right = n0 - n2;
  if (left == 0 || right == 0) return std::nullopt;
  const long long numer = n0 - n1 - n2 + n3 - 2 * swaps;
  return static_cast<double>(numer) / std::sqrt(static_cast<double>(left) * static_cast<double>(right));
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw LengthMismatch(x.size(), y.size());
  if (x.size() < 2) throw Error("pearson needs at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw LengthMismatch(x.size(), y.size());
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

double mean_absolute_error(std::span<const double> gold, std::span<const double> pred) {
  if (gold.size() != pred.size()) throw LengthMismatch(gold.size(), pred.size());
  if (gold.empty()) throw Error("mean_absolute_error needs at least one point");
  double s = 0.0;
  for (std::size_t i = 0; i < gold.size(); ++i) s += std::abs(gold[i] - pred[i]);
  return s / static_cast<double>(gold.size());
}

CorrelationSuite correlation_suite(std::span<const double> gold, std::span<const double> pred) {
  if (gold.size() != pred.size()) throw LengthMismatch(gold.size(), pred.size());
  CorrelationSuite c;
  c.pearson = pearson(gold, pred);
  c.spearman = spearman(gold, pred);
  c.kendall_tau_b = kendall_tau_b(gold, pred);
  c.mae = mean_absolute_error(gold, pred);
  return c;
}

MetricReport classification_report(std::span<const int> gold, std::span<const int> pred,
                                   const std::vector<std::string>& class_names) {
  MetricReport r;
  r.task = Task::classify;
  r.n = gold.size();
  auto cm = confusion(gold, pred);
  for (std::size_t i = 0; i < cm.classes.size(); ++i) {
    const auto c = static_cast<std::size_t>(cm.classes[i]);
    if (c < class_names.size()) cm.names[i] = class_names[c];
  }
  r.prf = weighted_prf(cm);
  r.confusion = std::move(cm);
  r.predicted_labels.assign(pred.begin(), pred.end());
  return r;
}

MetricReport regression_report(std::span<const double> gold, std::span<const double> pred) {
  MetricReport r;
  r.task = Task::regress;
  r.n = gold.size();
  r.correlations = correlation_suite(gold, pred);
  r.predicted_values.assign(pred.begin(), pred.end());
  return r;
}

MetricReport cross_validate(const ModelSpec& spec, const FeatureTable& X, std::span<const int> labels, std::size_t k,
                            std::uint64_t seed, const std::vector<std::string>& class_names) {
  if (X.rows() != labels.size()) throw LengthMismatch(X.rows(), labels.size());
  const auto folds = stratified_folds(labels, k, seed);
  std::vector<int> pooled(labels.size(), 0);
  std::vector<std::uint64_t> seeds;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    ModelSpec s = spec;
    s.hyper.seed = util::derive_seed(seed, f);
    seeds.push_back(s.hyper.seed);
    std::vector<int> train_y;
    for (auto i : folds[f].train) train_y.push_back(labels[i]);
    const auto model = train(s, X.select_rows(folds[f].train), train_y);
    const auto pred = predict(model, X.select_rows(folds[f].test));
    for (std::size_t t = 0; t < folds[f].test.size(); ++t) pooled[folds[f].test[t]] = pred.labels[t];
  }
  auto report = classification_report(labels, pooled, class_names);
  report.fold_seeds = std::move(seeds);
  report.fold_hash = fold_hash(folds);
  return report;
}

MetricReport cross_validate(const ModelSpec& spec, const FeatureTable& X, std::span<const double> targets,
                            std::size_t k, std::uint64_t seed) {
  if (X.rows() != targets.size()) throw LengthMismatch(X.rows(), targets.size());
  // Integer targets (ordinal levels) are stratified when every value has at
  // least k members; continuous targets use a shuffled split.
  std::vector<Fold> folds;
  bool integral = true;
  std::map<double, std::size_t> counts;
  for (double t : targets) {
    integral = integral && t == std::floor(t) && std::abs(t) < 1e9;
    ++counts[t];
  }
  bool stratify = integral && counts.size() <= targets.size() / 2;
  for (const auto& [v, c] : counts) stratify = stratify && c >= k;
  if (stratify) {
    std::vector<int> strata(targets.begin(), targets.end());
    folds = stratified_folds(strata, k, seed);
  } else {
    folds = shuffled_folds(targets.size(), k, seed);
  }
  std::vector<double> pooled(targets.size(), 0.0);
  std::vector<std::uint64_t> seeds;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    ModelSpec s = spec;
    s.hyper.seed = util::derive_seed(seed, f);
    seeds.push_back(s.hyper.seed);
    std::vector<double> train_y;
    for (auto i : folds[f].train) train_y.push_back(targets[i]);
    const auto model = train(s, X.select_rows(folds[f].train), train_y);
    const auto pred = predict(model, X.select_rows(folds[f].test));
    for (std::size_t t = 0; t < folds[f].test.size(); ++t) pooled[folds[f].test[t]] = pred.values[t];
  }
  auto report = regression_report(targets, pooled);
  report.fold_seeds = std::move(seeds);
  report.fold_hash = fold_hash(folds);
  return report;
}

int map_class(int cls, LabelScheme from, LabelScheme to) {
  if (from == to) return cls;
  if (from == LabelScheme::five_way) {
    const CefrLabel label(static_cast<CefrLevel>(cls));
    return class_of(label, to);
  }
  if (from == LabelScheme::three_way && to == LabelScheme::binary) return cls == 2 ? 1 : 0;
  throw Error("cannot map " + to_string(from) + " predictions onto " + to_string(to));
}

MetricReport transfer_eval(const TrainedModel& m, const FeatureTable& X, std::span<const int> gold,
                           LabelScheme target_scheme) {
  if (m.spec.task != Task::classify) throw Error("transfer evaluation needs a classifier");
  if (X.rows() != gold.size()) throw LengthMismatch(X.rows(), gold.size());
  auto pred = predict(m, X).labels;
  const LabelScheme from = m.label_scheme.value_or(target_scheme);
  for (auto& p : pred) p = map_class(p, from, target_scheme);
  return classification_report(gold, pred, class_names(target_scheme));
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json report_to_json(const MetricReport& r) {
  json j;
  j["task"] = to_string(r.task);
  j["n"] = r.n;
  if (r.prf) {
    const auto& p = *r.prf;
    j["weighted"] = {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
    j["macro"] = {{"precision", p.macro_precision}, {"recall", p.macro_recall}, {"f1", p.macro_f1}};
    json per = json::array();
    for (std::size_t i = 0; i < p.per_class.size(); ++i) {
      const auto& c = p.per_class[i];
      per.push_back({{"class", r.confusion ? r.confusion->names[i] : std::to_string(c.cls)},
                     {"precision", c.precision},
                     {"recall", c.recall},
                     {"f1", c.f1},
                     {"support", c.support}});
    }
    j["per_class"] = per;
  }
  if (r.confusion) j["confusion"] = {{"classes", r.confusion->names}, {"counts", r.confusion->counts}};
  if (r.correlations) {
    const auto& c = *r.correlations;
    j["pearson"] = optional_number(c.pearson);
    j["spearman"] = optional_number(c.spearman);
    j["kendall_tau_b"] = optional_number(c.kendall_tau_b);
    j["mae"] = c.mae;
  }
  if (!r.fold_seeds.empty()) j["fold_seeds"] = r.fold_seeds;
  if (r.fold_hash) j["fold_hash"] = util::hex64(*r.fold_hash);
  return j;
}

namespace {

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt2(*v) : std::string("n/a"); }

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace

std::string prf_table(const std::vector<std::pair<std::string, PrfSummary>>& rows) {
  std::size_t w = 5;
  for (const auto& [name, p] : rows) w = std::max(w, name.size());
  std::string out = pad("Model", w) + "  P     R     F-1\n";
  for (const auto& [name, p] : rows) {
    out += pad(name, w) + "  " + fmt2(p.precision) + "  " + fmt2(p.recall) + "  " + fmt2(p.f1) + "\n";
  }
  return out;
}

std::string correlation_table(const std::vector<std::pair<std::string, CorrelationSuite>>& rows) {
  std::size_t w = 5;
  for (const auto& [name, c] : rows) w = std::max(w, name.size());
  std::string out = pad("Model", w) + "  Pearson  Spearman  Kendall  MAE\n";
  for (const auto& [name, c] : rows) {
    out += pad(name, w) + "  " + pad(fmt_opt(c.pearson), 7) + "  " + pad(fmt_opt(c.spearman), 8) + "  " +
           pad(fmt_opt(c.kendall_tau_b), 7) + "  " + fmt2(c.mae) + "\n";
  }
  return out;
}

std::string confusion_table(const ConfusionMatrix& cm) {
  std::size_t w = 4;
  for (const auto& n : cm.names) w = std::max(w, n.size());
  for (const auto& r : cm.counts) {
    for (auto c : r) w = std::max(w, std::to_string(c).size());
  }
  std::string out = pad("gold\\pred", std::max<std::size_t>(w, 9));
  for (const auto& n : cm.names) out += "  " + pad(n, w);
  out += "\n";
  for (std::size_t i = 0; i < cm.counts.size(); ++i) {
    out += pad(cm.names[i], std::max<std::size_t>(w, 9));
    for (auto c : cm.counts[i]) out += "  " + pad(std::to_string(c), w);
    out += "\n";
  }
  return out;
}

}  // namespace qiraa
