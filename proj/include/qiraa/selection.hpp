#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qiraa/features.hpp"
#include "qiraa/json_io.hpp"
#include "qiraa/matrix.hpp"
#include "qiraa/models.hpp"

namespace qiraa {

/// Name of the composite unit that stands for every `emb_*` column.
inline constexpr const char* kEmbeddingUnit = "sentence_embedding";

struct RfeStep {
  std::vector<std::string> removed;
  double validation_f1 = 0.0;  // of the units that remain after the removal
};

struct RfeResult {
  std::vector<std::string> ranking;  // best first
  std::vector<RfeStep> elimination_trace;
  std::uint64_t seed = 0;
};

struct RfeOptions {
  std::size_t step = 1;
  std::size_t target_count = 1;
  std::size_t validation_folds = 5;  // 0 skips the validation F1 in the trace
  std::uint64_t seed = 0;
};

/// Selection units of a table: one per linguistic column, one composite for
/// the whole embedding block, placed where its first column appears.
std::vector<std::string> selection_units(const std::vector<std::string>& column_names);

/// Recursive feature elimination. Linear models score a unit by the L2 norm
/// of its standardized weights; other models by the drop in held-out F1 when
/// the unit's columns are permuted.
RfeResult rfe(const ModelSpec& spec, const FeatureTable& X, std::span<const int> y, const RfeOptions& opt);

struct AblationRow {
  std::string label;
  std::optional<FeatureGroup> excluded;  // nullopt for the embeddings-only row
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t columns = 0;
  std::uint64_t fold_hash = 0;
};

struct AblationResult {
  std::vector<AblationRow> rows;
  AblationRow full;  // every column, same folds
  std::uint64_t seed = 0;
};

/// One cross-validated run per excluded group plus one on the embedding
/// block alone, all on the same folds.
AblationResult ablate(const ModelSpec& spec, const FeatureTable& X, std::span<const int> y,
                      const std::vector<FeatureGroup>& groups, std::size_t k, std::uint64_t seed);

json to_json(const RfeResult& r);
json to_json(const AblationResult& r);
std::string rfe_table(const RfeResult& r, std::size_t top = 10);
std::string ablation_table(const AblationResult& r);

}  // namespace qiraa
