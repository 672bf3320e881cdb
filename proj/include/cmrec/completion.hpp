#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cmrec/matrix.hpp"

namespace cmrec {

/// Empirical CDF of one case column: average ranks for ties, rescaled by
/// n/(n+1) so images stay inside (0,1) and the probit transform is finite.
class Marginal {
 public:
  /// Requires at least one value; use fit_marginal for the two-value
  /// minimum the pipeline enforces per column.
  static Marginal from_observations(std::vector<double> values);

  /// Monotone non-decreasing; image inside (0,1). Exact observed values
  /// map to their average-rank image; other points use the count of
  /// observations at or below.
  double cdf(double v) const;

  /// Generalized inverse: the smallest observed value whose CDF image is
  /// at least p; the largest observed value when p exceeds every image.
  double quantile(double p) const;

  std::size_t n_observations() const { return n_; }

 private:
  Marginal() = default;

  std::vector<double> unique_;      // ascending distinct observed values
  std::vector<double> image_;       // average-rank CDF image per value
  std::vector<std::size_t> count_;  // cumulative observation count per value
  std::size_t n_ = 0;
};

struct CompletionConfig {
  enum class Method { kCopula, kSoftImpute };

  Method method = Method::kCopula;
  int rank = 10;
  int max_iterations = 200;
  double tolerance = 1e-4;
  /// Soft-impute shrinkage; unset means 0.1 x the largest singular value
  /// of the mean-filled matrix.
  std::optional<double> lambda;
  std::uint64_t rng_seed = 0;

  /// Throws DataError on an out-of-range field.
  void validate() const;
};

CompletionConfig::Method parse_completion_method(const std::string& name);
std::string completion_method_name(CompletionConfig::Method m);

/// Low-rank Gaussian copula model: latent Z = G H^T + noise tied to the
/// observed entries through per-column marginals.
struct CopulaModel {
  std::vector<std::string> item_ids;
  std::vector<std::string> case_ids;
  std::vector<Marginal> marginals;          // one per case column
  std::vector<std::uint8_t> column_pooled;  // 1 where the pooled marginal stands in
  Eigen::MatrixXd G;                        // n_items x rank
  Eigen::MatrixXd H;                        // n_cases x rank, posterior latent means
  double noise_variance = 1.0;
  int rank = 0;
  bool converged = false;
  int iterations = 0;
};

/// Throws DataError when fewer than two observations are available; such
/// columns borrow the pooled all-columns marginal upstream.
Marginal fit_marginal(const std::vector<double>& column);

/// EM fit of the latent factors on the observed entries. Deterministic
/// for a fixed seed. Non-convergence is reported via the flag, not an
/// error. Throws DataError for an empty matrix or one with no
/// observations.
CopulaModel fit_copula(const PerformanceMatrix& m, const CompletionConfig& cfg);

/// Fills every missing entry with F_j^-1(Phi(zhat_ij)) where zhat is the
/// conditional latent mean given the column's observed entries. Observed
/// entries pass through verbatim. Throws DataError when the matrix does
/// not match the model's shape and labels.
PerformanceMatrix impute(const PerformanceMatrix& m, const CopulaModel& model);

/// Iterative SVD completion: soft-threshold singular values by lambda,
/// restore observed entries, repeat; imputed entries clamped to [0,1].
PerformanceMatrix soft_impute(const PerformanceMatrix& m, const CompletionConfig& cfg);

/// Dispatches on cfg.method; the protocol and CLI use this entry point.
PerformanceMatrix complete(const PerformanceMatrix& m, const CompletionConfig& cfg);

}  // namespace cmrec
