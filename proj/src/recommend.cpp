#include "cmrec/recommend.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "cmrec/errors.hpp"
#include "cmrec/rng.hpp"

namespace cmrec {

namespace {

std::vector<std::string> rank_items(const std::map<std::string, double>& scores) {
  std::vector<std::pair<std::string, double>> flat(scores.begin(), scores.end());
  std::sort(flat.begin(), flat.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> out;
  out.reserve(flat.size());
  for (const auto& [id, s] : flat) out.push_back(id);
  return out;
}

// Two-level or flat mean of the present entries, one score per item that
// has any observation.
std::map<std::string, double> mean_scores(const PerformanceMatrix& m, const ExperimentMap& em,
                                          PopularityMode mode) {
  std::map<std::string, double> scores;
  for (std::size_t i = 0; i < m.n_items(); ++i) {
    if (mode == PopularityMode::kFlat) {
      double sum = 0.0;
      std::size_t count = 0;
      for (std::size_t c = 0; c < m.n_cases(); ++c) {
        if (m.present(i, c)) {
          sum += m.value(i, c);
          ++count;
        }
      }
      if (count > 0) scores[m.item_ids()[i]] = sum / static_cast<double>(count);
      continue;
    }
    double total = 0.0;
    std::size_t n_experiments = 0;
    for (const auto& exp_id : em.experiment_ids()) {
      double sum = 0.0;
      std::size_t count = 0;
      for (const auto& case_id : em.cases_of(exp_id)) {
        const auto c = m.case_index(case_id);
        if (!c) continue;
        if (m.present(i, *c)) {
          sum += m.value(i, *c);
          ++count;
        }
      }
      if (count > 0) {
        total += sum / static_cast<double>(count);
        ++n_experiments;
      }
    }
    if (n_experiments > 0) scores[m.item_ids()[i]] = total / static_cast<double>(n_experiments);
  }
  return scores;
}

std::vector<std::string> popularity_order(const PerformanceMatrix& m, const ExperimentMap& em,
                                          PopularityMode mode) {
  auto scores = mean_scores(m, em, mode);
  if (scores.empty()) throw DataError("popularity: matrix has no observed entries");
  auto ranking = rank_items(scores);
  std::vector<std::string> unscored;
  for (const auto& id : m.item_ids()) {
    if (!scores.count(id)) unscored.push_back(id);
  }
  std::sort(unscored.begin(), unscored.end());
  ranking.insert(ranking.end(), unscored.begin(), unscored.end());
  return ranking;
}

}  // namespace

RecommendationResult hybrid_recommend(const CaseFeatures& q, const PerformanceMatrix& observed,
                                      const std::vector<CaseFeatures>& history_features,
                                      const PerformanceMatrix& completed, std::size_t k,
                                      Metric metric, const FeatureSchema& schema) {
  if (observed.item_ids() != completed.item_ids() ||
      observed.case_ids() != completed.case_ids()) {
    throw DataError("hybrid_recommend: observed and completed matrices disagree in labels");
  }
  if (observed.n_cases() == 0) throw DataError("hybrid_recommend: empty history");

  std::unordered_map<std::string, const CaseFeatures*> by_id;
  for (const auto& f : history_features) by_id.emplace(f.case_id, &f);
  std::vector<CaseFeatures> candidates;
  candidates.reserve(observed.n_cases());
  for (const auto& case_id : observed.case_ids()) {
    auto it = by_id.find(case_id);
    if (it == by_id.end()) {
      throw DataError("hybrid_recommend: history case '" + case_id + "' has no features");
    }
    candidates.push_back(*it->second);
  }

  RecommendationResult result;
  result.query_case_id = q.case_id;
  auto neighbours = nearest_neighbors(q, candidates, k, metric, schema);
  for (const auto& [id, dist] : neighbours) result.neighbor_ids.push_back(id);

  for (std::size_t i = 0; i < observed.n_items(); ++i) {
    double sum = 0.0;
    for (const auto& neighbour_id : result.neighbor_ids) {
      const auto c = observed.case_index(neighbour_id);
      if (observed.present(i, *c)) {
        sum += observed.value(i, *c);
      } else if (completed.present(i, *c)) {
        sum += completed.value(i, *c);
      } else {
        throw DataError("hybrid_recommend: neither observed nor completed entry for item '" +
                        observed.item_ids()[i] + "', case '" + neighbour_id + "'");
      }
    }
    result.scores[observed.item_ids()[i]] =
        sum / static_cast<double>(result.neighbor_ids.size());
  }
  result.ranking = rank_items(result.scores);
  return result;
}

std::vector<std::string> popularity_ranking(const PerformanceMatrix& observed,
                                            const ExperimentMap& em, PopularityMode mode) {
  return popularity_order(observed, em, mode);
}

std::string popularity_item(const PerformanceMatrix& observed, const ExperimentMap& em,
                            PopularityMode mode) {
  return popularity_order(observed, em, mode).front();
}

std::vector<std::string> mc_popularity_ranking(const PerformanceMatrix& completed,
                                               const ExperimentMap& em, PopularityMode mode) {
  if (!completed.fully_observed()) {
    throw DataError("mc_popularity: completed matrix still has missing entries");
  }
  return popularity_order(completed, em, mode);
}

std::string mc_popularity_item(const PerformanceMatrix& completed, const ExperimentMap& em,
                               PopularityMode mode) {
  return mc_popularity_ranking(completed, em, mode).front();
}

std::string reference_item(const std::optional<std::string>& configured,
                           const PerformanceMatrix& m) {
  if (!configured) throw DataError("no reference item configured");
  if (!m.item_index(*configured)) {
    throw DataError("reference item '" + *configured + "' is not in the matrix");
  }
  return *configured;
}

std::vector<std::string> random_recommendation(const std::vector<std::string>& item_ids,
                                               std::size_t list_length, std::uint64_t rng_seed) {
  if (list_length == 0) throw DataError("random_recommendation: list_length must be >= 1");
  if (list_length > item_ids.size()) {
    throw DataError("random_recommendation: list_length exceeds the item count");
  }
  std::vector<std::string> pool = item_ids;
  Rng rng(rng_seed);
  // Partial Fisher-Yates: the first list_length slots become the sample.
  for (std::size_t i = 0; i < list_length; ++i) {
    const std::size_t j = i + rng.uniform_index(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(list_length);
  return pool;
}

double expected_random_rr_single(std::size_t n_relevant, std::size_t n_items, std::size_t k) {
  if (n_relevant > n_items) {
    throw DataError("expected_random_rr: more relevant items than items");
  }
  if (n_items == 0 || n_relevant == 0) return 0.0;
  const std::size_t limit = std::min(k, n_items);
  double expectation = 0.0;
  double p_none_before = 1.0;
  for (std::size_t r = 1; r <= limit; ++r) {
    const double remaining = static_cast<double>(n_items - (r - 1));
    const double hit = static_cast<double>(n_relevant) / remaining;
    expectation += p_none_before * hit / static_cast<double>(r);
    const double relevant_left = static_cast<double>(n_items - n_relevant);
    p_none_before *= (relevant_left - static_cast<double>(r - 1)) / remaining;
    if (p_none_before <= 0.0) break;  // fewer irrelevant items than ranks
  }
  return expectation;
}

double expected_random_rr(const std::vector<std::pair<std::string, std::size_t>>& relevance_counts,
                          const ExperimentMap& em, std::size_t n_items, std::size_t k) {
  std::map<std::string, std::pair<double, std::size_t>> per_experiment;
  for (const auto& [case_id, count] : relevance_counts) {
    const auto& exp_id = em.experiment_of(case_id);
    auto& [sum, n] = per_experiment[exp_id];
    sum += expected_random_rr_single(count, n_items, k);
    ++n;
  }
  if (per_experiment.empty()) throw DataError("expected_random_rr: no cases");
  double total = 0.0;
  for (const auto& [exp_id, agg] : per_experiment) {
    total += agg.first / static_cast<double>(agg.second);
  }
  return total / static_cast<double>(per_experiment.size());
}

}  // namespace cmrec
