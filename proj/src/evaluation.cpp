#include "cmrec/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "cmrec/errors.hpp"
#include "cmrec/stats.hpp"

namespace cmrec {

bool RelevanceSet::is_relevant(const std::string& item_id) const {
  for (const auto& [id, score] : relevant) {
    if (id == item_id) return true;
  }
  return false;
}

RelevanceSet relevant_items(const std::map<std::string, double>& ground_truth_column,
                            const std::string& case_id, double threshold) {
  if (ground_truth_column.empty()) {
    throw DataError("relevant_items: empty ground-truth column for case '" + case_id + "'");
  }
  if (threshold < 0.0) {
    throw DataError("relevant_items: negative threshold");
  }
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [id, score] : ground_truth_column) best = std::max(best, score);

  RelevanceSet rel;
  rel.case_id = case_id;
  rel.best_performance = best;
  for (const auto& [id, score] : ground_truth_column) {
    if (score >= best - threshold) rel.relevant.emplace_back(id, score);
  }
  std::sort(rel.relevant.begin(), rel.relevant.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return rel;
}

double rr_at_k(const std::vector<std::string>& ranking, const RelevanceSet& rel, std::size_t k) {
  if (k == 0) throw std::invalid_argument("rr_at_k: k must be >= 1");
  std::unordered_set<std::string> seen;
  for (const auto& id : ranking) {
    if (!seen.insert(id).second) {
      throw std::invalid_argument("rr_at_k: duplicate item '" + id + "' in ranking");
    }
  }
  const std::size_t limit = std::min(k, ranking.size());
  for (std::size_t pos = 0; pos < limit; ++pos) {
    if (rel.is_relevant(ranking[pos])) {
      return 1.0 / static_cast<double>(pos + 1);
    }
  }
  return 0.0;
}

double rr_per_experiment(const std::vector<std::pair<std::string, double>>& case_rrs,
                         const ExperimentMap& em, const std::string& experiment_id) {
  const auto cases = em.cases_of(experiment_id);
  if (cases.empty()) {
    throw DataError("rr_per_experiment: experiment '" + experiment_id + "' has no cases");
  }
  double sum = 0.0;
  for (const auto& case_id : cases) {
    std::size_t hits = 0;
    double value = 0.0;
    for (const auto& [id, rr] : case_rrs) {
      if (id == case_id) {
        value = rr;
        ++hits;
      }
    }
    if (hits != 1) {
      throw DataError("rr_per_experiment: sub-case '" + case_id + "' present " +
                      std::to_string(hits) + " times");
    }
    sum += value;
  }
  return sum / static_cast<double>(cases.size());
}

double mrr(const std::vector<double>& experiment_rrs) {
  if (experiment_rrs.empty()) throw DataError("mrr: no experiment values");
  return mean_of(experiment_rrs);
}

double regret(const std::map<std::string, double>& ground_truth_column,
              const std::string& chosen_item) {
  if (ground_truth_column.empty()) throw DataError("regret: empty ground-truth column");
  auto it = ground_truth_column.find(chosen_item);
  if (it == ground_truth_column.end()) {
    throw DataError("regret: unknown item '" + chosen_item + "'");
  }
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [id, score] : ground_truth_column) best = std::max(best, score);
  return best - it->second;
}

Interval confidence_interval(const std::vector<double>& samples, double level) {
  if (samples.size() < 2) {
    throw DataError("confidence_interval: needs at least 2 samples");
  }
  if (!(level > 0.0 && level < 1.0)) {
    throw DataError("confidence_interval: level must be in (0,1)");
  }
  const auto ms = mean_sd(samples);
  const double z = normal_quantile(0.5 + level / 2.0);
  const double half = z * ms.sd / std::sqrt(static_cast<double>(samples.size()));
  return {ms.mean, ms.mean - half, ms.mean + half};
}

}  // namespace cmrec
