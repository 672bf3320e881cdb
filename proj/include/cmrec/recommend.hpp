#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cmrec/features.hpp"
#include "cmrec/matrix.hpp"

namespace cmrec {

struct RecommendationResult {
  std::string query_case_id;
  std::vector<std::string> neighbor_ids;  // ascending distance
  std::map<std::string, double> scores;   // item -> s(q, j)
  std::vector<std::string> ranking;       // score descending, ties by item id
};

enum class PopularityMode { kExperimentBalanced, kFlat };

/// Scores every item as the mean over the query's k nearest neighbour
/// cases of the observed entry when the sparse history matrix has one,
/// falling back to the completed matrix otherwise. The completed matrix
/// must agree with the history matrix in shape and labels and be filled
/// wherever the fallback is needed.
RecommendationResult hybrid_recommend(const CaseFeatures& q, const PerformanceMatrix& observed,
                                      const std::vector<CaseFeatures>& history_features,
                                      const PerformanceMatrix& completed, std::size_t k,
                                      Metric metric, const FeatureSchema& schema);

/// Items ordered by mean performance: per-experiment means first, then the
/// average of those means (kExperimentBalanced), or a flat mean over all
/// observed entries (kFlat). Items without any observation rank last,
/// lexically. Throws DataError when nothing is observed at all.
std::vector<std::string> popularity_ranking(
    const PerformanceMatrix& observed, const ExperimentMap& em,
    PopularityMode mode = PopularityMode::kExperimentBalanced);

std::string popularity_item(const PerformanceMatrix& observed, const ExperimentMap& em,
                            PopularityMode mode = PopularityMode::kExperimentBalanced);

/// popularity over a completed matrix; rejects missing entries.
std::vector<std::string> mc_popularity_ranking(
    const PerformanceMatrix& completed, const ExperimentMap& em,
    PopularityMode mode = PopularityMode::kExperimentBalanced);

std::string mc_popularity_item(const PerformanceMatrix& completed, const ExperimentMap& em,
                               PopularityMode mode = PopularityMode::kExperimentBalanced);

/// Returns the configured id verbatim after checking it exists. Throws
/// DataError when unset or unknown.
std::string reference_item(const std::optional<std::string>& configured,
                           const PerformanceMatrix& m);

/// Uniform sample of list_length distinct items, deterministic per seed.
std::vector<std::string> random_recommendation(const std::vector<std::string>& item_ids,
                                               std::size_t list_length, std::uint64_t rng_seed);

/// Exact expectation of RR@k under a uniformly random ranking, per case,
/// aggregated experiment-balanced: mean within each experiment, then mean
/// across experiments.
double expected_random_rr(const std::vector<std::pair<std::string, std::size_t>>& relevance_counts,
                          const ExperimentMap& em, std::size_t n_items, std::size_t k);

/// The per-case expectation alone, exposed for the metrics CLI.
double expected_random_rr_single(std::size_t n_relevant, std::size_t n_items, std::size_t k);

}  // namespace cmrec
