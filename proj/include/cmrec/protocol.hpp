#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cmrec/completion.hpp"
#include "cmrec/evaluation.hpp"
#include "cmrec/features.hpp"
#include "cmrec/matrix.hpp"
#include "cmrec/recommend.hpp"

namespace cmrec {

struct HyperGrid {
  std::vector<Metric> metrics = {Metric::kEuclidean, Metric::kCosine, Metric::kGower};
  std::vector<std::size_t> k_values = {1, 2, 3, 5, 10, 15, 20, 30, 50};

  std::size_t size() const { return metrics.size() * k_values.size(); }
  /// DataError when either axis is empty or a k is zero.
  void validate() const;
};

struct CVConfig {
  std::vector<double> sparsity_levels = {0.25, 0.50, 0.75, 0.90};
  std::size_t n_realisations = 1;
  std::uint64_t rng_seed = 1;
  CompletionConfig completion;
  HyperGrid grid;
  double relevance_threshold = kDefaultRelevanceThreshold;
  /// Only "mrr@3" is implemented; anything else fails validation.
  std::string selection_metric = "mrr@3";
  PopularityMode popularity_mode = PopularityMode::kExperimentBalanced;
  /// Baseline item id; the Reference rows are skipped when unset.
  std::optional<std::string> reference_item;
  /// 0 means hardware concurrency.
  std::size_t threads = 0;
  /// Test hook: skip dropping the test experiment from the training
  /// matrix, which the leakage audit must catch.
  bool inject_leakage_fault = false;

  void validate() const;
};

/// Which case columns were readable as performance data while training and
/// tuning for each test experiment, across all sparsities and realisations.
struct AccessTrace {
  std::map<std::string, std::set<std::string>> touched_by_experiment;
};

struct InnerCVRow {
  Metric metric = Metric::kEuclidean;
  std::size_t k = 0;
  double mrr3_val = 0.0;
};

struct InnerCVResult {
  Metric metric = Metric::kEuclidean;
  std::size_t k = 0;
  std::vector<InnerCVRow> table;
};

struct MethodScore {
  double rr1 = 0.0;
  double rr3 = 0.0;
  double regret = 0.0;
};

/// One (sparsity, realisation, test experiment) evaluation, scores at
/// experiment level (mean over the experiment's sub-cases).
struct CVCell {
  double sparsity = 0.0;
  std::size_t realisation = 0;
  std::string experiment;
  Metric chosen_metric = Metric::kEuclidean;
  std::size_t chosen_k = 0;
  /// Keys among {"rs", "pop", "mc", "reference", "random", "oracle"}.
  std::map<std::string, MethodScore> methods;
};

/// Per (sparsity, method) summary; reference and random pool across
/// sparsities and carry no sparsity value.
struct CVAggregate {
  std::optional<double> sparsity;
  std::string method;
  Interval mrr1;
  Interval mrr3;
  Interval regret;
};

/// Per (sparsity, experiment) hyperparameter summary: the modal selection
/// across realisations and the RS scores with CIs over realisations.
struct ExperimentSummary {
  double sparsity = 0.0;
  std::string experiment;
  Metric modal_metric = Metric::kEuclidean;
  std::size_t modal_k = 0;
  Interval rr1;
  Interval rr3;
};

struct CVReport {
  std::vector<CVCell> cells;
  std::vector<CVAggregate> aggregates;
  std::vector<ExperimentSummary> per_experiment;
  bool leakage_audit_passed = false;
  std::vector<std::string> warnings;
  AccessTrace trace;
};

/// Hides exactly round(s * n_items * n_cases) entries, chosen uniformly
/// without replacement, deterministically per seed. Requires a fully
/// observed matrix and s in [0, 1).
PerformanceMatrix sparsify(const PerformanceMatrix& m, double s, std::uint64_t seed);

/// Leave-one-experiment-out hyperparameter selection on the training
/// matrix alone. For every validation experiment v, drops v, completes the
/// remainder, scores each grid config by RR@3 against the observed entries
/// of v's columns, and returns the config with the best mean across
/// validation experiments. Ties prefer smaller k, then euclidean < cosine
/// < gower. Needs at least 2 experiments. The optional trace collects the
/// case columns whose performance entries were readable.
InnerCVResult inner_cv(const PerformanceMatrix& train, const std::vector<CaseFeatures>& features,
                       const FeatureSchema& schema, const ExperimentMap& em,
                       const HyperGrid& grid, const CompletionConfig& completion_cfg,
                       double relevance_threshold, std::set<std::string>* touched = nullptr);

/// The full nested protocol: sparsity x realisation x test experiment,
/// inner selection on the training split, final scoring of the hybrid
/// recommender and the baselines against the fully observed ground truth.
CVReport run_nested_cv(const PerformanceMatrix& ground_truth,
                       const std::vector<CaseFeatures>& features, const FeatureSchema& schema,
                       const ExperimentMap& em, const CVConfig& cfg);

/// True iff no performance entry of any sub-case of experiment_id was
/// readable while training or tuning for it.
bool leakage_audit(const AccessTrace& trace, const ExperimentMap& em,
                   const std::string& experiment_id);

/// 128-bit content hash covering shape, ids, missingness, and exact value
/// bits; the fit cache and derived completion seeds key on it.
std::pair<std::uint64_t, std::uint64_t> matrix_content_hash(const PerformanceMatrix& m);

}  // namespace cmrec
