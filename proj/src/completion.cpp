#include "cmrec/completion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cmrec/errors.hpp"
#include "cmrec/rng.hpp"
#include "cmrec/stats.hpp"

namespace cmrec {

Marginal Marginal::from_observations(std::vector<double> values) {
  if (values.empty()) throw DataError("marginal: no observations");
  std::sort(values.begin(), values.end());
  Marginal m;
  m.n_ = values.size();
  const double scale = 1.0 / (static_cast<double>(m.n_) + 1.0);
  std::size_t i = 0;
  while (i < values.size()) {
    std::size_t j = i;
    while (j + 1 < values.size() && values[j + 1] == values[i]) ++j;
    m.unique_.push_back(values[i]);
    // Average of 1-based ranks i+1 .. j+1, rescaled into (0,1).
    m.image_.push_back(0.5 * static_cast<double>(i + j + 2) * scale);
    m.count_.push_back(j + 1);
    i = j + 1;
  }
  return m;
}

double Marginal::cdf(double v) const {
  auto it = std::lower_bound(unique_.begin(), unique_.end(), v);
  const double scale = 1.0 / (static_cast<double>(n_) + 1.0);
  if (it != unique_.end() && *it == v) {
    return image_[static_cast<std::size_t>(it - unique_.begin())];
  }
  if (it == unique_.begin()) {
    // Below every observation: strictly under the smallest image.
    return 0.5 * scale;
  }
  // Between groups (or above all): the count at or below v.
  return static_cast<double>(count_[static_cast<std::size_t>(it - unique_.begin()) - 1]) * scale;
}

double Marginal::quantile(double p) const {
  auto it = std::lower_bound(image_.begin(), image_.end(), p);
  if (it == image_.end()) return unique_.back();
  return unique_[static_cast<std::size_t>(it - image_.begin())];
}

void CompletionConfig::validate() const {
  if (rank < 1) throw DataError("completion config: rank must be >= 1");
  if (max_iterations < 1) throw DataError("completion config: max_iterations must be >= 1");
  if (!(tolerance > 0.0)) throw DataError("completion config: tolerance must be > 0");
  if (lambda && *lambda < 0.0) throw DataError("completion config: lambda must be >= 0");
}

CompletionConfig::Method parse_completion_method(const std::string& name) {
  if (name == "copula") return CompletionConfig::Method::kCopula;
  if (name == "soft_impute") return CompletionConfig::Method::kSoftImpute;
  throw DataError("unknown completion method '" + name + "'");
}

std::string completion_method_name(CompletionConfig::Method m) {
  return m == CompletionConfig::Method::kCopula ? "copula" : "soft_impute";
}

Marginal fit_marginal(const std::vector<double>& column) {
  if (column.size() < 2) {
    throw DataError("marginal: column has fewer than 2 observations");
  }
  return Marginal::from_observations(column);
}

namespace {

struct LatentProblem {
  Eigen::MatrixXd z;                              // probit-transformed observed entries
  std::vector<std::vector<Eigen::Index>> obs_rows;  // observed row set per column
  std::size_t n_observed = 0;
};

std::vector<Marginal> column_marginals(const PerformanceMatrix& m,
                                       std::vector<std::uint8_t>* pooled_flags) {
  std::vector<double> all;
  for (std::size_t i = 0; i < m.n_items(); ++i) {
    for (std::size_t c = 0; c < m.n_cases(); ++c) {
      if (m.present(i, c)) all.push_back(m.value(i, c));
    }
  }
  if (all.empty()) throw DataError("completion: matrix has no observed entries");
  const Marginal pooled = Marginal::from_observations(all);

  std::vector<Marginal> out;
  out.reserve(m.n_cases());
  pooled_flags->assign(m.n_cases(), 0);
  for (std::size_t c = 0; c < m.n_cases(); ++c) {
    auto col = m.column_observed(c);
    if (col.size() < 2) {
      out.push_back(pooled);
      (*pooled_flags)[c] = 1;
    } else {
      out.push_back(fit_marginal(col));
    }
  }
  return out;
}

LatentProblem build_latent(const PerformanceMatrix& m, const std::vector<Marginal>& marginals) {
  LatentProblem p;
  const auto n = static_cast<Eigen::Index>(m.n_items());
  const auto mm = static_cast<Eigen::Index>(m.n_cases());
  p.z = Eigen::MatrixXd::Zero(n, mm);
  p.obs_rows.resize(m.n_cases());
  for (std::size_t c = 0; c < m.n_cases(); ++c) {
    for (std::size_t i = 0; i < m.n_items(); ++i) {
      if (!m.present(i, c)) continue;
      const double u = marginals[c].cdf(m.value(i, c));
      p.z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = normal_quantile(u);
      p.obs_rows[c].push_back(static_cast<Eigen::Index>(i));
      ++p.n_observed;
    }
  }
  return p;
}

// One E-step: posterior mean and second moment of each column's latent
// factor given its observed entries.
void e_step(const LatentProblem& p, const Eigen::MatrixXd& g, double sigma2,
            Eigen::MatrixXd* mu, std::vector<Eigen::MatrixXd>* second_moment) {
  const auto d = g.cols();
  const auto n_cols = p.z.cols();
  mu->resize(n_cols, d);
  if (second_moment) second_moment->assign(static_cast<std::size_t>(n_cols), Eigen::MatrixXd());
  for (Eigen::Index c = 0; c < n_cols; ++c) {
    const auto& rows = p.obs_rows[static_cast<std::size_t>(c)];
    Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()), d);
    Eigen::VectorXd zo(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      a.row(static_cast<Eigen::Index>(r)) = g.row(rows[r]);
      zo(static_cast<Eigen::Index>(r)) = p.z(rows[r], c);
    }
    Eigen::MatrixXd m_mat = sigma2 * Eigen::MatrixXd::Identity(d, d) + a.transpose() * a;
    Eigen::LDLT<Eigen::MatrixXd> solver(m_mat);
    const Eigen::VectorXd mean = solver.solve(a.transpose() * zo);
    mu->row(c) = mean.transpose();
    if (second_moment) {
      Eigen::MatrixXd cov = sigma2 * solver.solve(Eigen::MatrixXd::Identity(d, d));
      (*second_moment)[static_cast<std::size_t>(c)] = cov + mean * mean.transpose();
    }
  }
}

}  // namespace

CopulaModel fit_copula(const PerformanceMatrix& m, const CompletionConfig& cfg) {
  cfg.validate();
  if (cfg.method != CompletionConfig::Method::kCopula) {
    throw std::invalid_argument("fit_copula: config method is not copula");
  }
  if (m.n_items() == 0 || m.n_cases() == 0) throw DataError("completion: empty matrix");

  CopulaModel model;
  model.item_ids = m.item_ids();
  model.case_ids = m.case_ids();
  model.marginals = column_marginals(m, &model.column_pooled);

  const LatentProblem p = build_latent(m, model.marginals);
  const auto n = p.z.rows();
  const auto n_cols = p.z.cols();
  const auto d = static_cast<Eigen::Index>(
      std::min<std::size_t>(static_cast<std::size_t>(cfg.rank),
                            std::min(m.n_items(), m.n_cases())));
  model.rank = static_cast<int>(d);

  Rng rng(derive_seed(cfg.rng_seed, "copula-init"));
  Eigen::MatrixXd g(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) {
      g(i, k) = rng.normal() / std::sqrt(static_cast<double>(d));
    }
  }
  double sigma2 = 1.0;

  Eigen::MatrixXd mu;
  std::vector<Eigen::MatrixXd> smom;
  Eigen::MatrixXd zhat_prev;
  model.converged = false;
  int iter = 0;
  for (; iter < cfg.max_iterations; ++iter) {
    e_step(p, g, sigma2, &mu, &smom);

    // M-step: each item row from the columns where it is observed.
    Eigen::MatrixXd g_next = Eigen::MatrixXd::Zero(n, d);
    std::vector<Eigen::MatrixXd> s_sum(static_cast<std::size_t>(n));
    std::vector<Eigen::VectorXd> b_sum(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      s_sum[static_cast<std::size_t>(i)] = Eigen::MatrixXd::Zero(d, d);
      b_sum[static_cast<std::size_t>(i)] = Eigen::VectorXd::Zero(d);
    }
    for (Eigen::Index c = 0; c < n_cols; ++c) {
      const auto& rows = p.obs_rows[static_cast<std::size_t>(c)];
      const auto& s = smom[static_cast<std::size_t>(c)];
      for (Eigen::Index r : rows) {
        s_sum[static_cast<std::size_t>(r)] += s;
        b_sum[static_cast<std::size_t>(r)] += mu.row(c).transpose() * p.z(r, c);
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& s = s_sum[static_cast<std::size_t>(i)];
      if (s.isZero(0.0)) continue;  // item never observed: factor stays zero
      s.diagonal().array() += 1e-12;
      g_next.row(i) = Eigen::LDLT<Eigen::MatrixXd>(s).solve(b_sum[static_cast<std::size_t>(i)])
                          .transpose();
    }
    g = g_next;

    double resid = 0.0;
    for (Eigen::Index c = 0; c < n_cols; ++c) {
      const auto& rows = p.obs_rows[static_cast<std::size_t>(c)];
      const auto& s = smom[static_cast<std::size_t>(c)];
      for (Eigen::Index r : rows) {
        const double zij = p.z(r, c);
        const double pred = g.row(r).dot(mu.row(c));
        resid += zij * zij - 2.0 * zij * pred + g.row(r) * s * g.row(r).transpose();
      }
    }
    sigma2 = std::max(resid / static_cast<double>(std::max<std::size_t>(p.n_observed, 1)), 1e-6);

    Eigen::MatrixXd zhat = g * mu.transpose();
    if (iter > 0) {
      const double denom = std::max(zhat_prev.norm(), 1e-12);
      if ((zhat - zhat_prev).norm() / denom < cfg.tolerance) {
        model.converged = true;
        ++iter;
        break;
      }
    }
    zhat_prev = std::move(zhat);
  }
  model.iterations = iter;

  // Final E-step so the stored posterior means match the final factors.
  e_step(p, g, sigma2, &mu, nullptr);
  model.G = std::move(g);
  model.H = std::move(mu);
  model.noise_variance = sigma2;
  return model;
}

PerformanceMatrix impute(const PerformanceMatrix& m, const CopulaModel& model) {
  if (m.item_ids() != model.item_ids || m.case_ids() != model.case_ids) {
    throw DataError("impute: matrix does not match the fitted model's shape and labels");
  }
  const LatentProblem p = build_latent(m, model.marginals);
  Eigen::MatrixXd mu;
  e_step(p, model.G, model.noise_variance, &mu, nullptr);

  std::vector<std::optional<double>> entries = m.entries();
  for (std::size_t c = 0; c < m.n_cases(); ++c) {
    for (std::size_t i = 0; i < m.n_items(); ++i) {
      if (m.present(i, c)) continue;
      const double zhat = model.G.row(static_cast<Eigen::Index>(i))
                              .dot(mu.row(static_cast<Eigen::Index>(c)));
      const double u = normal_cdf(zhat);
      entries[i * m.n_cases() + c] = model.marginals[c].quantile(u);
    }
  }
  return PerformanceMatrix(m.item_ids(), m.case_ids(), std::move(entries));
}

PerformanceMatrix soft_impute(const PerformanceMatrix& m, const CompletionConfig& cfg) {
  cfg.validate();
  if (cfg.method != CompletionConfig::Method::kSoftImpute) {
    throw std::invalid_argument("soft_impute: config method is not soft_impute");
  }
  if (m.n_items() == 0 || m.n_cases() == 0) throw DataError("completion: empty matrix");

  const auto n = static_cast<Eigen::Index>(m.n_items());
  const auto mm = static_cast<Eigen::Index>(m.n_cases());

  double global_sum = 0.0;
  std::size_t global_count = 0;
  for (std::size_t i = 0; i < m.n_items(); ++i) {
    for (std::size_t c = 0; c < m.n_cases(); ++c) {
      if (m.present(i, c)) {
        global_sum += m.value(i, c);
        ++global_count;
      }
    }
  }
  if (global_count == 0) throw DataError("completion: matrix has no observed entries");
  const double global_mean = global_sum / static_cast<double>(global_count);

  Eigen::MatrixXd x(n, mm);
  for (std::size_t c = 0; c < m.n_cases(); ++c) {
    const auto col = m.column_observed(c);
    const double fill = col.empty() ? global_mean : mean_of(col);
    for (std::size_t i = 0; i < m.n_items(); ++i) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          m.present(i, c) ? m.value(i, c) : fill;
    }
  }

  double lambda;
  if (cfg.lambda) {
    lambda = *cfg.lambda;
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd0(x);
    lambda = 0.1 * svd0.singularValues()(0);
  }

  const auto keep = static_cast<Eigen::Index>(cfg.rank);
  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd sv = svd.singularValues();
    // Truncate to the target rank, then shrink what survives; without the
    // truncation a small lambda makes the update a near identity and the
    // solve stalls at its column-mean start.
    for (Eigen::Index k = 0; k < sv.size(); ++k) {
      sv(k) = k < keep ? std::max(sv(k) - lambda, 0.0) : 0.0;
    }
    Eigen::MatrixXd next = svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose();
    for (std::size_t i = 0; i < m.n_items(); ++i) {
      for (std::size_t c = 0; c < m.n_cases(); ++c) {
        if (m.present(i, c)) {
          next(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = m.value(i, c);
        }
      }
    }
    const double denom = std::max(x.norm(), 1e-12);
    const double change = (next - x).norm() / denom;
    x = std::move(next);
    if (change < cfg.tolerance) break;
  }

  std::vector<std::optional<double>> entries(m.n_items() * m.n_cases());
  for (std::size_t i = 0; i < m.n_items(); ++i) {
    for (std::size_t c = 0; c < m.n_cases(); ++c) {
      if (m.present(i, c)) {
        entries[i * m.n_cases() + c] = m.value(i, c);
      } else {
        entries[i * m.n_cases() + c] = std::clamp(
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)), 0.0, 1.0);
      }
    }
  }
  return PerformanceMatrix(m.item_ids(), m.case_ids(), std::move(entries));
}

PerformanceMatrix complete(const PerformanceMatrix& m, const CompletionConfig& cfg) {
  cfg.validate();
  if (cfg.method == CompletionConfig::Method::kSoftImpute) return soft_impute(m, cfg);
  return impute(m, fit_copula(m, cfg));
}

}  // namespace cmrec
