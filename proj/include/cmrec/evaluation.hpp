#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cmrec/matrix.hpp"

namespace cmrec {

inline constexpr double kDefaultRelevanceThreshold = 0.05;

/// Items of one case within the relevance threshold of its best score,
/// ranked by ground-truth performance descending.
struct RelevanceSet {
  std::string case_id;
  double best_performance = 0.0;
  /// (item_id, ground-truth score), descending score, ties by item id.
  std::vector<std::pair<std::string, double>> relevant;

  bool is_relevant(const std::string& item_id) const;
};

struct MetricRecord {
  enum class Level { kCase, kExperiment, kGlobal };
  Level level = Level::kGlobal;
  std::string metric;
  double value = 0.0;
  std::optional<double> ci_low;
  std::optional<double> ci_high;
};

struct Interval {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Relevant = { j : p_j >= max p - threshold }. The ground-truth column
/// must be fully observed. Throws DataError when empty or negative
/// threshold.
RelevanceSet relevant_items(const std::map<std::string, double>& ground_truth_column,
                            const std::string& case_id,
                            double threshold = kDefaultRelevanceThreshold);

/// Reciprocal rank of the highest-placed relevant item within the top k
/// of the ranking, 0 when none appears. k beyond the ranking length is
/// treated as the length.
double rr_at_k(const std::vector<std::string>& ranking, const RelevanceSet& rel, std::size_t k);

/// Mean RR over the sub-cases of one experiment. Every sub-case of the
/// experiment must appear exactly once in case_rrs.
double rr_per_experiment(const std::vector<std::pair<std::string, double>>& case_rrs,
                         const ExperimentMap& em, const std::string& experiment_id);

/// Mean over experiment-level RRs; experiments weigh equally regardless
/// of sub-case count.
double mrr(const std::vector<double>& experiment_rrs);

/// p*_c - p_c(chosen), always in [0,1] for in-range scores.
double regret(const std::map<std::string, double>& ground_truth_column,
              const std::string& chosen_item);

/// Normal-approximation interval mean +/- z * sd / sqrt(n).
Interval confidence_interval(const std::vector<double>& samples, double level = 0.95);

}  // namespace cmrec
