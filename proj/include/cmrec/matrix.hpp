#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace cmrec {

/// Items-in-rows, cases-in-columns performance grid with explicit
/// missingness. Zero is a legal observed performance (failed or unstable
/// simulations) and is never conflated with an absent entry. Immutable
/// after construction; operations return new matrices.
class PerformanceMatrix {
 public:
  PerformanceMatrix(std::vector<std::string> item_ids, std::vector<std::string> case_ids,
                    std::vector<std::optional<double>> entries);

  /// Fully observed matrix with every entry set to `value`.
  static PerformanceMatrix constant(std::vector<std::string> item_ids,
                                    std::vector<std::string> case_ids, double value);

  std::size_t n_items() const { return item_ids_.size(); }
  std::size_t n_cases() const { return case_ids_.size(); }

  const std::vector<std::string>& item_ids() const { return item_ids_; }
  const std::vector<std::string>& case_ids() const { return case_ids_; }

  bool present(std::size_t item, std::size_t c) const { return mask_[flat(item, c)] != 0; }
  double value(std::size_t item, std::size_t c) const { return values_[flat(item, c)]; }

  std::optional<double> entry(std::size_t item, std::size_t c) const {
    const std::size_t f = flat(item, c);
    if (!mask_[f]) return std::nullopt;
    return values_[f];
  }

  std::optional<std::size_t> item_index(std::string_view id) const;
  std::optional<std::size_t> case_index(std::string_view id) const;

  std::size_t observed_count() const;
  bool fully_observed() const { return observed_count() == values_.size(); }

  /// Observed values of one case column, in item order.
  std::vector<double> column_observed(std::size_t c) const;

  /// Copy of the raw entries grid, row-major (item, case).
  std::vector<std::optional<double>> entries() const;

 private:
  std::size_t flat(std::size_t item, std::size_t c) const { return item * case_ids_.size() + c; }

  std::vector<std::string> item_ids_;
  std::vector<std::string> case_ids_;
  std::vector<double> values_;
  std::vector<std::uint8_t> mask_;
  std::unordered_map<std::string, std::size_t> item_index_;
  std::unordered_map<std::string, std::size_t> case_index_;
};

/// Case -> experiment grouping. Experiments are the holdout unit of the
/// cross-validation protocol; every case belongs to exactly one.
class ExperimentMap {
 public:
  /// Assignment order defines the case order; experiment order follows
  /// first appearance.
  explicit ExperimentMap(std::vector<std::pair<std::string, std::string>> assignments);

  /// Same, but with an explicit experiment order (which must cover every
  /// assigned experiment and hold no duplicates).
  static ExperimentMap with_order(std::vector<std::pair<std::string, std::string>> assignments,
                                  std::vector<std::string> experiment_ids);

  const std::vector<std::string>& experiment_ids() const { return experiment_ids_; }
  const std::vector<std::pair<std::string, std::string>>& assignments() const {
    return assignments_;
  }

  bool contains_experiment(std::string_view id) const;
  bool contains_case(std::string_view case_id) const;

  /// Throws std::invalid_argument for an unknown case.
  const std::string& experiment_of(std::string_view case_id) const;

  /// Sub-cases of one experiment, in assignment order.
  std::vector<std::string> cases_of(std::string_view experiment_id) const;

  std::size_t n_cases() const { return assignments_.size(); }

  /// Restriction to the cases not mapped to `experiment_id`.
  ExperimentMap without_experiment(std::string_view experiment_id) const;

  /// Restriction to the given cases (which must all be known).
  ExperimentMap restricted_to(const std::vector<std::string>& case_ids) const;

 private:
  std::vector<std::pair<std::string, std::string>> assignments_;
  std::vector<std::string> experiment_ids_;
  std::unordered_map<std::string, std::size_t> case_to_pos_;
};

struct ValidationIssue {
  std::string location;
  std::string message;
};

class ValidationReport {
 public:
  ValidationReport() = default;
  explicit ValidationReport(std::vector<ValidationIssue> issues) : issues_(std::move(issues)) {}

  bool ok() const { return issues_.empty(); }
  const std::vector<ValidationIssue>& issues() const { return issues_; }

 private:
  std::vector<ValidationIssue> issues_;
};

/// Reports all entries outside [0,1], duplicate ids, and dimension
/// mismatches. Never throws; failures live in the report.
ValidationReport validate_matrix(const PerformanceMatrix& m);

/// Removes every case column of `experiment_id`, preserving column order
/// and entry values. Throws std::invalid_argument for an unknown id.
std::pair<PerformanceMatrix, ExperimentMap> drop_experiment(const PerformanceMatrix& m,
                                                            const ExperimentMap& em,
                                                            std::string_view experiment_id);

/// count(present) / (n_items * n_cases). Throws on an empty matrix.
double observed_fraction(const PerformanceMatrix& m);

}  // namespace cmrec
