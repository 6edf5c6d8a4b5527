#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qiraa/cefr.hpp"
#include "qiraa/json_io.hpp"
#include "qiraa/matrix.hpp"
#include "qiraa/models.hpp"

namespace qiraa {

/// Rows are gold classes, columns predicted classes.
struct ConfusionMatrix {
  std::vector<int> classes;
  std::vector<std::string> names;
  std::vector<std::vector<long long>> counts;

  long long total() const;
  long long row_sum(std::size_t i) const;
  long long col_sum(std::size_t j) const;
};

/// Classes default to the sorted union of gold and predicted labels.
ConfusionMatrix confusion(std::span<const int> gold, std::span<const int> pred, std::vector<int> classes = {});

struct ClassStats {
  int cls = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long long support = 0;
};

/// Support-weighted averages (the headline numbers) plus plain macro
/// averages. An empty predicted column gives precision 0.
struct PrfSummary {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::vector<ClassStats> per_class;
};

PrfSummary weighted_prf(const ConfusionMatrix& cm);

/// Tie-corrected Kendall rank correlation in O(n log n). nullopt when either
/// input is constant.
std::optional<double> kendall_tau_b(std::span<const double> x, std::span<const double> y);
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);
/// Pearson on mid-ranks.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);
double mean_absolute_error(std::span<const double> gold, std::span<const double> pred);
/// 1-based ranks, tied values share their mean rank.
std::vector<double> average_ranks(std::span<const double> v);

struct CorrelationSuite {
  std::optional<double> pearson;
  std::optional<double> spearman;
  std::optional<double> kendall_tau_b;
  double mae = 0.0;
};

CorrelationSuite correlation_suite(std::span<const double> gold, std::span<const double> pred);

struct MetricReport {
  Task task = Task::classify;
  std::size_t n = 0;
  std::optional<PrfSummary> prf;
  std::optional<ConfusionMatrix> confusion;
  std::optional<CorrelationSuite> correlations;
  std::vector<std::uint64_t> fold_seeds;
  std::optional<std::uint64_t> fold_hash;
  std::vector<int> predicted_labels;      // pooled, in instance order
  std::vector<double> predicted_values;   // pooled, in instance order
};

MetricReport classification_report(std::span<const int> gold, std::span<const int> pred,
                                   const std::vector<std::string>& class_names = {});
MetricReport regression_report(std::span<const double> gold, std::span<const double> pred);

/// k-fold cross-validation; metrics are computed once over the pooled
/// out-of-fold predictions. Each fold model gets its own seed derived from
/// `seed`.
MetricReport cross_validate(const ModelSpec& spec, const FeatureTable& X, std::span<const int> labels, std::size_t k,
                            std::uint64_t seed, const std::vector<std::string>& class_names = {});
MetricReport cross_validate(const ModelSpec& spec, const FeatureTable& X, std::span<const double> targets,
                            std::size_t k, std::uint64_t seed);

/// Maps a model's class ids onto a coarser target scheme (five_way ->
/// three_way -> binary); identity otherwise.
int map_class(int cls, LabelScheme from, LabelScheme to);

/// Scores a trained classifier on a second labelled set whose gold classes
/// follow `target_scheme`.
MetricReport transfer_eval(const TrainedModel& m, const FeatureTable& X, std::span<const int> gold,
                           LabelScheme target_scheme);

json report_to_json(const MetricReport& r);

/// Aligned text tables.
std::string prf_table(const std::vector<std::pair<std::string, PrfSummary>>& rows);
std::string correlation_table(const std::vector<std::pair<std::string, CorrelationSuite>>& rows);
std::string confusion_table(const ConfusionMatrix& cm);

}  // namespace qiraa
