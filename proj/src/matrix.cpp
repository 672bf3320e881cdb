#include "cmrec/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace cmrec {

namespace {

std::unordered_map<std::string, std::size_t> build_index(const std::vector<std::string>& ids) {
  std::unordered_map<std::string, std::size_t> idx;
  idx.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) idx.emplace(ids[i], i);
  return idx;
}

}  // namespace

PerformanceMatrix::PerformanceMatrix(std::vector<std::string> item_ids,
                                     std::vector<std::string> case_ids,
                                     std::vector<std::optional<double>> entries)
    : item_ids_(std::move(item_ids)), case_ids_(std::move(case_ids)) {
  if (entries.size() != item_ids_.size() * case_ids_.size()) {
    throw std::invalid_argument("PerformanceMatrix: entries size " +
                                std::to_string(entries.size()) + " does not match " +
                                std::to_string(item_ids_.size()) + "x" +
                                std::to_string(case_ids_.size()));
  }
  values_.resize(entries.size(), 0.0);
  mask_.resize(entries.size(), 0);
  for (std::size_t f = 0; f < entries.size(); ++f) {
    if (entries[f]) {
      values_[f] = *entries[f];
      mask_[f] = 1;
    }
  }
  item_index_ = build_index(item_ids_);
  case_index_ = build_index(case_ids_);
}

PerformanceMatrix PerformanceMatrix::constant(std::vector<std::string> item_ids,
                                              std::vector<std::string> case_ids, double value) {
  std::vector<std::optional<double>> entries(item_ids.size() * case_ids.size(), value);
  return PerformanceMatrix(std::move(item_ids), std::move(case_ids), std::move(entries));
}

std::optional<std::size_t> PerformanceMatrix::item_index(std::string_view id) const {
  auto it = item_index_.find(std::string(id));
  if (it == item_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> PerformanceMatrix::case_index(std::string_view id) const {
  auto it = case_index_.find(std::string(id));
  if (it == case_index_.end()) return std::nullopt;
  return it->second;
}

std::size_t PerformanceMatrix::observed_count() const {
  std::size_t n = 0;
  for (auto b : mask_) n += b;
  return n;
}

std::vector<double> PerformanceMatrix::column_observed(std::size_t c) const {
  std::vector<double> out;
  for (std::size_t i = 0; i < n_items(); ++i) {
    if (present(i, c)) out.push_back(value(i, c));
  }
  return out;
}

std::vector<std::optional<double>> PerformanceMatrix::entries() const {
  std::vector<std::optional<double>> out(values_.size());
  for (std::size_t f = 0; f < values_.size(); ++f) {
    if (mask_[f]) out[f] = values_[f];
  }
  return out;
}

ExperimentMap::ExperimentMap(std::vector<std::pair<std::string, std::string>> assignments)
    : assignments_(std::move(assignments)) {
  std::unordered_set<std::string> seen;
  for (const auto& [case_id, exp_id] : assignments_) {
    if (seen.insert(exp_id).second) experiment_ids_.push_back(exp_id);
  }
  case_to_pos_.reserve(assignments_.size());
  for (std::size_t i = 0; i < assignments_.size(); ++i) {
    if (!case_to_pos_.emplace(assignments_[i].first, i).second) {
      throw std::invalid_argument("ExperimentMap: duplicate case id '" + assignments_[i].first +
                                  "'");
    }
  }
}

ExperimentMap ExperimentMap::with_order(
    std::vector<std::pair<std::string, std::string>> assignments,
    std::vector<std::string> experiment_ids) {
  std::unordered_set<std::string> known(experiment_ids.begin(), experiment_ids.end());
  if (known.size() != experiment_ids.size()) {
    throw std::invalid_argument("ExperimentMap: duplicate experiment id");
  }
  for (const auto& [case_id, exp_id] : assignments) {
    if (!known.count(exp_id)) {
      throw std::invalid_argument("ExperimentMap: case '" + case_id +
                                  "' maps to unlisted experiment '" + exp_id + "'");
    }
  }
  ExperimentMap em(std::move(assignments));
  em.experiment_ids_ = std::move(experiment_ids);
  return em;
}

bool ExperimentMap::contains_experiment(std::string_view id) const {
  return std::find(experiment_ids_.begin(), experiment_ids_.end(), id) != experiment_ids_.end();
}

bool ExperimentMap::contains_case(std::string_view case_id) const {
  return case_to_pos_.count(std::string(case_id)) != 0;
}

const std::string& ExperimentMap::experiment_of(std::string_view case_id) const {
  auto it = case_to_pos_.find(std::string(case_id));
  if (it == case_to_pos_.end()) {
    throw std::invalid_argument("ExperimentMap: unknown case '" + std::string(case_id) + "'");
  }
  return assignments_[it->second].second;
}

std::vector<std::string> ExperimentMap::cases_of(std::string_view experiment_id) const {
  std::vector<std::string> out;
  for (const auto& [case_id, exp_id] : assignments_) {
    if (exp_id == experiment_id) out.push_back(case_id);
  }
  return out;
}

ExperimentMap ExperimentMap::without_experiment(std::string_view experiment_id) const {
  if (!contains_experiment(experiment_id)) {
    throw std::invalid_argument("ExperimentMap: unknown experiment '" +
                                std::string(experiment_id) + "'");
  }
  std::vector<std::pair<std::string, std::string>> kept;
  for (const auto& a : assignments_) {
    if (a.second != experiment_id) kept.push_back(a);
  }
  std::vector<std::string> exp_ids;
  for (const auto& e : experiment_ids_) {
    if (e != experiment_id) exp_ids.push_back(e);
  }
  return with_order(std::move(kept), std::move(exp_ids));
}

ExperimentMap ExperimentMap::restricted_to(const std::vector<std::string>& case_ids) const {
  std::vector<std::pair<std::string, std::string>> kept;
  kept.reserve(case_ids.size());
  for (const auto& id : case_ids) {
    auto it = case_to_pos_.find(id);
    if (it == case_to_pos_.end()) {
      throw std::invalid_argument("ExperimentMap: unknown case '" + id + "'");
    }
    kept.push_back(assignments_[it->second]);
  }
  return ExperimentMap(std::move(kept));
}

ValidationReport validate_matrix(const PerformanceMatrix& m) {
  std::vector<ValidationIssue> issues;
  if (m.n_items() == 0) issues.push_back({"matrix", "no items"});
  if (m.n_cases() == 0) issues.push_back({"matrix", "no cases"});

  auto check_dupes = [&issues](const std::vector<std::string>& ids, const char* kind) {
    std::unordered_set<std::string> seen;
    for (const auto& id : ids) {
      if (!seen.insert(id).second) {
        issues.push_back({std::string(kind) + " '" + id + "'", "duplicate id"});
      }
      if (id.empty()) {
        issues.push_back({std::string(kind), "empty id"});
      }
    }
  };
  check_dupes(m.item_ids(), "item");
  check_dupes(m.case_ids(), "case");

  for (std::size_t i = 0; i < m.n_items(); ++i) {
    for (std::size_t c = 0; c < m.n_cases(); ++c) {
      if (!m.present(i, c)) continue;
      const double v = m.value(i, c);
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        issues.push_back({"entry (" + m.item_ids()[i] + ", " + m.case_ids()[c] + ")",
                          "value " + std::to_string(v) + " outside [0,1]"});
      }
    }
  }
  return ValidationReport(std::move(issues));
}

std::pair<PerformanceMatrix, ExperimentMap> drop_experiment(const PerformanceMatrix& m,
                                                            const ExperimentMap& em,
                                                            std::string_view experiment_id) {
  if (!em.contains_experiment(experiment_id)) {
    throw std::invalid_argument("drop_experiment: unknown experiment '" +
                                std::string(experiment_id) + "'");
  }
  std::vector<std::size_t> kept_cols;
  std::vector<std::string> kept_ids;
  for (std::size_t c = 0; c < m.n_cases(); ++c) {
    const std::string& case_id = m.case_ids()[c];
    if (em.contains_case(case_id) && em.experiment_of(case_id) == experiment_id) continue;
    kept_cols.push_back(c);
    kept_ids.push_back(case_id);
  }
  std::vector<std::optional<double>> entries;
  entries.reserve(m.n_items() * kept_cols.size());
  for (std::size_t i = 0; i < m.n_items(); ++i) {
    for (std::size_t c : kept_cols) entries.push_back(m.entry(i, c));
  }
  PerformanceMatrix reduced(m.item_ids(), std::move(kept_ids), std::move(entries));
  return {std::move(reduced), em.without_experiment(experiment_id)};
}

double observed_fraction(const PerformanceMatrix& m) {
  const std::size_t total = m.n_items() * m.n_cases();
  if (total == 0) throw std::invalid_argument("observed_fraction: empty matrix");
  return static_cast<double>(m.observed_count()) / static_cast<double>(total);
}

}  // namespace cmrec
