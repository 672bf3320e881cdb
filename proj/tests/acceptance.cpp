#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cmrec/bundle.hpp"
#include "cmrec/completion.hpp"
#include "cmrec/csv.hpp"
#include "cmrec/evaluation.hpp"
#include "cmrec/protocol.hpp"
#include "cmrec/recommend.hpp"
#include "cmrec/rng.hpp"
#include "cmrec/stability.hpp"
#include "oracles.hpp"

using namespace cmrec;

namespace {

// One acceptance criterion: accumulates sub-checks, then prints a single
// verdict line with the elapsed time and enforces the runtime budget.
class Gate {
 public:
  explicit Gate(std::string label)
      : label_(std::move(label)), start_(std::chrono::steady_clock::now()) {}

  bool check(bool cond) {
    CHECK(cond);
    ok_ = ok_ && cond;
    return cond;
  }

  void finish(double budget_seconds = 0.0) {
    const auto elapsed = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - start_)
                             .count();
    if (budget_seconds > 0.0) {
      const bool in_budget = elapsed < budget_seconds;
      CHECK(in_budget);
      ok_ = ok_ && in_budget;
    }
    std::printf("[ACCEPTANCE] %s: %s (%.1fs)\n", label_.c_str(), ok_ ? "PASS" : "FAIL",
                elapsed);
    std::fflush(stdout);
  }

 private:
  std::string label_;
  std::chrono::steady_clock::time_point start_;
  bool ok_ = true;
};

std::vector<std::string> make_ids(const std::string& prefix, std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(prefix + std::to_string(i));
  return ids;
}

std::vector<std::string> shuffled(std::vector<std::string> xs, Rng& rng) {
  for (std::size_t i = xs.size(); i > 1; --i) {
    std::swap(xs[i - 1], xs[rng.uniform_index(i)]);
  }
  return xs;
}

std::set<std::string> item_set(const RelevanceSet& rel) {
  std::set<std::string> out;
  for (const auto& [id, _] : rel.relevant) out.insert(id);
  return out;
}

std::set<std::string> brute_relevant(const std::map<std::string, double>& column,
                                     double threshold) {
  double best = -1.0;
  for (const auto& [_, v] : column) best = std::max(best, v);
  std::set<std::string> rel;
  for (const auto& [id, v] : column) {
    if (v >= best - threshold) rel.insert(id);
  }
  return rel;
}

double brute_rr_at_k(const std::vector<std::string>& ranking,
                     const std::set<std::string>& rel, std::size_t k) {
  for (std::size_t pos = 1; pos <= std::min(k, ranking.size()); ++pos) {
    if (rel.count(ranking[pos - 1])) return 1.0 / static_cast<double>(pos);
  }
  return 0.0;
}

// Expected RR@k of a uniformly random full ranking, by enumerating every
// permutation of n items with the first m taken as relevant.
double enumerate_expected_rr(std::size_t n, std::size_t m, std::size_t k) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double total = 0.0;
  std::size_t count = 0;
  do {
    double rr = 0.0;
    for (std::size_t pos = 1; pos <= std::min(k, n); ++pos) {
      if (perm[pos - 1] < m) {
        rr = 1.0 / static_cast<double>(pos);
        break;
      }
    }
    total += rr;
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total / static_cast<double>(count);
}

CompletionConfig copula_cfg(int rank, std::uint64_t seed, int iterations = 300,
                            double tolerance = 1e-5) {
  CompletionConfig cfg;
  cfg.method = CompletionConfig::Method::kCopula;
  cfg.rank = rank;
  cfg.max_iterations = iterations;
  cfg.tolerance = tolerance;
  cfg.rng_seed = seed;
  return cfg;
}

CompletionConfig soft_cfg(int rank, double lambda, std::uint64_t seed,
                          int iterations = 30000) {
  CompletionConfig cfg;
  cfg.method = CompletionConfig::Method::kSoftImpute;
  cfg.rank = rank;
  cfg.max_iterations = iterations;
  cfg.lambda = lambda;
  cfg.rng_seed = seed;
  return cfg;
}

// Two equally sized clusters with distinct best items. The compact shape
// keeps C7's identity sweep fast; C6 widens it because recovering the
// cluster optimum through 50% masking needs enough observed values per
// column for the marginals and enough cases per experiment to average
// over unlucky masks.
SynthConfig scenario6_config(std::uint64_t seed) {
  SynthConfig scfg;
  scfg.n_items = 10;
  scfg.n_cases = 24;
  scfg.n_experiments = 6;
  scfg.n_clusters = 2;
  scfg.latent_rank = 2;
  scfg.noise_sd = 0.02;
  scfg.cluster_separation = 4.0;
  scfg.rng_seed = seed;
  return scfg;
}

SynthConfig separation_config(std::uint64_t seed) {
  SynthConfig scfg = scenario6_config(seed);
  scfg.n_items = 40;
  scfg.n_cases = 60;
  return scfg;
}

struct HeldOut {
  PerformanceMatrix sparse;
  std::vector<std::pair<std::size_t, std::size_t>> positions;
  std::vector<double> truth;
};

// Random mask that always keeps one anchor entry per row and per column.
HeldOut hold_out(const std::vector<double>& truth, std::size_t n, std::size_t m,
                 double missing_fraction, Rng& rng) {
  std::vector<std::optional<double>> entries(n * m);
  HeldOut h{PerformanceMatrix({"x"}, {"y"}, {std::optional<double>(0.0)}), {}, {}};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < m; ++c) {
      const bool anchor = (i == c % n) || (c == i % m);
      if (anchor || rng.unit_double() >= missing_fraction) {
        entries[i * m + c] = truth[i * m + c];
      } else {
        h.positions.emplace_back(i, c);
        h.truth.push_back(truth[i * m + c]);
      }
    }
  }
  h.sparse = PerformanceMatrix(make_ids("i", n), make_ids("c", m), std::move(entries));
  return h;
}

std::vector<double> imputed_at(const PerformanceMatrix& completed,
                               const std::vector<std::pair<std::size_t, std::size_t>>& pos) {
  std::vector<double> out;
  for (const auto& [i, c] : pos) out.push_back(completed.value(i, c));
  return out;
}

const CVAggregate& aggregate_row(const CVReport& report, const std::string& method,
                                 std::optional<double> sparsity) {
  for (const auto& a : report.aggregates) {
    if (a.method == method && a.sparsity == sparsity) return a;
  }
  throw std::runtime_error("aggregate row not found: " + method);
}

}  // namespace

TEST_CASE("C1: metric oracle equivalence") {
  Gate gate("C1 metric oracle equivalence");
  Rng rng(101);

  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n_items = 1 + rng.uniform_index(8);
    const std::size_t n_cases = 1 + rng.uniform_index(5);
    const auto item_ids = make_ids("I", n_items);
    const auto case_ids = make_ids("q", n_cases);

    std::vector<std::pair<std::string, std::string>> assignment;
    const std::size_t n_exp = 1 + rng.uniform_index(std::min<std::size_t>(3, n_cases));
    for (std::size_t c = 0; c < n_cases; ++c) {
      assignment.emplace_back(case_ids[c],
                              "E" + std::to_string(c < n_exp ? c : rng.uniform_index(n_exp)));
    }
    const ExperimentMap em(assignment);

    const double threshold =
        trial % 3 == 0 ? 0.0 : (trial % 3 == 1 ? 0.05 : 0.3 * rng.unit_double());

    std::vector<std::pair<std::string, double>> rr1_cases;
    for (const auto& case_id : case_ids) {
      std::map<std::string, double> column;
      for (const auto& item : item_ids) {
        double v = rng.unit_double();
        if (rng.unit_double() < 0.3) v = std::round(v * 10.0) / 10.0;
        column[item] = v;
      }
      const auto rel = relevant_items(column, case_id, threshold);
      const auto brute = brute_relevant(column, threshold);
      gate.check(item_set(rel) == brute);

      const auto ranking = shuffled(item_ids, rng);
      const std::size_t k = 1 + rng.uniform_index(8);
      gate.check(rr_at_k(ranking, rel, k) == brute_rr_at_k(ranking, brute, k));
      rr1_cases.emplace_back(case_id, rr_at_k(ranking, rel, 1));

      const auto& chosen = item_ids[rng.uniform_index(n_items)];
      double best = -1.0;
      for (const auto& [_, v] : column) best = std::max(best, v);
      gate.check(regret(column, chosen) == best - column.at(chosen));
    }

    std::vector<double> exp_rrs;
    for (const auto& e : em.experiment_ids()) {
      const double lib = rr_per_experiment(rr1_cases, em, e);
      double sum = 0.0;
      for (const auto& case_id : em.cases_of(e)) {
        for (const auto& [id, rr] : rr1_cases) {
          if (id == case_id) sum += rr;
        }
      }
      gate.check(lib == sum / static_cast<double>(em.cases_of(e).size()));
      exp_rrs.push_back(lib);
    }
    double total = 0.0;
    for (double v : exp_rrs) total += v;
    gate.check(mrr(exp_rrs) == total / static_cast<double>(exp_rrs.size()));
  }

  for (std::size_t n = 1; n <= 6; ++n) {
    for (std::size_t m = 0; m <= n; ++m) {
      for (std::size_t k = 1; k <= n + 2; ++k) {
        const double lib = expected_random_rr_single(m, n, k);
        gate.check(std::abs(lib - enumerate_expected_rr(n, m, k)) <= 1e-12);
      }
    }
  }

  {
    const ExperimentMap em(
        {{"c1", "e1"}, {"c2", "e1"}, {"c3", "e1"}, {"c4", "e2"}});
    const std::vector<std::pair<std::string, std::size_t>> counts = {
        {"c1", 1}, {"c2", 2}, {"c3", 3}, {"c4", 2}};
    const double lib = expected_random_rr(counts, em, 5, 3);
    const double e1 = (enumerate_expected_rr(5, 1, 3) + enumerate_expected_rr(5, 2, 3) +
                       enumerate_expected_rr(5, 3, 3)) /
                      3.0;
    const double e2 = enumerate_expected_rr(5, 2, 3);
    gate.check(std::abs(lib - (e1 + e2) / 2.0) <= 1e-12);
  }

  gate.finish(10.0);
}

TEST_CASE("C2: relevance-set contract") {
  Gate gate("C2 relevance-set contract");
  Rng rng(202);

  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n_items = 1 + rng.uniform_index(12);
    std::map<std::string, double> column;
    for (std::size_t i = 0; i < n_items; ++i) {
      double v = rng.unit_double();
      if (rng.unit_double() < 0.4) v = std::round(v * 5.0) / 5.0;
      column["I" + std::to_string(i)] = v;
    }
    double best = -1.0;
    std::set<std::string> argmaxes;
    for (const auto& [id, v] : column) best = std::max(best, v);
    for (const auto& [id, v] : column) {
      if (v == best) argmaxes.insert(id);
    }

    const auto rel = relevant_items(column, "q", 0.05);
    gate.check(rel.best_performance == best);
    const auto rel_set = item_set(rel);
    gate.check(rel_set.count(*argmaxes.begin()) == 1);
    bool within = true, complete_set = true;
    for (const auto& [id, _] : rel.relevant) within = within && column.at(id) >= best - 0.05;
    for (const auto& [id, v] : column) {
      if (v >= best - 0.05) complete_set = complete_set && rel_set.count(id) == 1;
    }
    gate.check(within);
    gate.check(complete_set);

    const auto exact = relevant_items(column, "q", 0.0);
    gate.check(item_set(exact) == argmaxes);
  }
  gate.finish();
}

TEST_CASE("C3: copula monotone invariance") {
  Gate gate("C3 copula monotone invariance");

  SynthConfig scfg;
  scfg.n_items = 40;
  scfg.n_cases = 30;
  scfg.n_experiments = 5;
  scfg.n_clusters = 2;
  scfg.latent_rank = 2;
  scfg.noise_sd = 0.05;
  scfg.rng_seed = 303;
  const auto truth = generate_synthetic(scfg).bundle.matrix;
  const auto sparse = sparsify(truth, 0.5, 7);

  auto transform = [](std::size_t c, double x) {
    const double powers[] = {0.5, 1.0, 2.0, 3.0};
    const double a = 0.5 + 0.3 * static_cast<double>(c % 5);
    const double b = 0.1 * static_cast<double>(c % 7);
    return a * std::pow(x, powers[c % 4]) + b;
  };
  auto entries = sparse.entries();
  const std::size_t n_cases = sparse.n_cases();
  for (std::size_t i = 0; i < sparse.n_items(); ++i) {
    for (std::size_t c = 0; c < n_cases; ++c) {
      auto& e = entries[i * n_cases + c];
      if (e) e = transform(c, *e);
    }
  }
  const PerformanceMatrix mapped(sparse.item_ids(), sparse.case_ids(), std::move(entries));

  const auto cfg = copula_cfg(5, 11);
  const auto base = complete(sparse, cfg);
  const auto moved = complete(mapped, cfg);

  double min_rho = 1.0;
  std::size_t checked_columns = 0;
  for (std::size_t c = 0; c < n_cases; ++c) {
    std::vector<double> a, b;
    for (std::size_t i = 0; i < sparse.n_items(); ++i) {
      if (!sparse.present(i, c)) {
        a.push_back(base.value(i, c));
        b.push_back(moved.value(i, c));
      }
    }
    if (a.size() < 2) continue;
    ++checked_columns;
    gate.check(oracle::average_ranks(a) == oracle::average_ranks(b));
    min_rho = std::min(min_rho, oracle::spearman(a, b));
  }
  gate.check(checked_columns >= 25);
  gate.check(min_rho == 1.0);
  gate.finish(60.0);
}

TEST_CASE("C4: completion quality") {
  Gate gate("C4 completion quality");
  Rng rng(404);

  const std::size_t n = 40, m = 30;
  std::vector<double> u(n), v(m);
  for (auto& x : u) x = 0.3 + 0.7 * rng.unit_double();
  for (auto& x : v) x = 0.3 + 0.7 * rng.unit_double();
  std::vector<double> rank1(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < m; ++c) rank1[i * m + c] = u[i] * v[c];
  }
  auto held = hold_out(rank1, n, m, 0.5, rng);

  const auto soft = complete(held.sparse, soft_cfg(1, 1e-4, 11));
  const double soft_rmse = oracle::rmse_over(imputed_at(soft, held.positions), held.truth);
  MESSAGE("C4 rank-1 soft impute rmse = " << soft_rmse);
  gate.check(soft_rmse <= 1e-3);

  const auto cop = complete(held.sparse, copula_cfg(3, 13));
  const double cop_rho = oracle::spearman(imputed_at(cop, held.positions), held.truth);
  MESSAGE("C4 rank-1 copula spearman = " << cop_rho);
  gate.check(cop_rho > 0.95);

  std::vector<double> u2(n), v2(m);
  for (auto& x : u2) x = 0.3 + 0.7 * rng.unit_double();
  for (auto& x : v2) x = 0.3 + 0.7 * rng.unit_double();
  std::vector<double> rank2(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < m; ++c) {
      rank2[i * m + c] = 0.5 * (u[i] * v[c] + u2[i] * v2[c]);
    }
  }
  auto held2 = hold_out(rank2, n, m, 0.75, rng);

  std::vector<double> mean_fill;
  for (const auto& [i, c] : held2.positions) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t r = 0; r < n; ++r) {
      if (held2.sparse.present(r, c)) {
        sum += held2.sparse.value(r, c);
        ++count;
      }
    }
    (void)i;
    mean_fill.push_back(sum / static_cast<double>(count));
  }
  const double fill_rmse = oracle::rmse_over(mean_fill, held2.truth);

  const auto soft2 = complete(held2.sparse, soft_cfg(2, 1e-3, 17));
  const auto cop2 = complete(held2.sparse, copula_cfg(3, 19));
  const double soft2_rmse =
      oracle::rmse_over(imputed_at(soft2, held2.positions), held2.truth);
  const double cop2_rmse = oracle::rmse_over(imputed_at(cop2, held2.positions), held2.truth);
  MESSAGE("C4 rank-2 rmse: soft " << soft2_rmse << ", copula " << cop2_rmse << ", column mean "
                                  << fill_rmse);
  gate.check(soft2_rmse < fill_rmse);
  gate.check(cop2_rmse < fill_rmse);

  gate.finish();
}

TEST_CASE("C5: leakage audit and fault injection") {
  Gate gate("C5 leakage audit");

  SynthConfig scfg;
  scfg.n_items = 8;
  scfg.n_cases = 16;
  scfg.n_experiments = 4;
  scfg.rng_seed = 505;
  const auto bundle = generate_synthetic(scfg).bundle;

  CVConfig cfg;
  cfg.completion = copula_cfg(3, 0, 120);
  cfg.sparsity_levels = {0.5};
  cfg.n_realisations = 1;
  cfg.grid.metrics = {Metric::kEuclidean};
  cfg.grid.k_values = {1, 2};
  cfg.threads = 2;

  const auto clean = run_nested_cv(bundle.matrix, bundle.features, bundle.schema,
                                   bundle.experiments, cfg);
  gate.check(clean.leakage_audit_passed);
  for (const auto& e : bundle.experiments.experiment_ids()) {
    gate.check(leakage_audit(clean.trace, bundle.experiments, e));
  }

  cfg.inject_leakage_fault = true;
  const auto faulty = run_nested_cv(bundle.matrix, bundle.features, bundle.schema,
                                    bundle.experiments, cfg);
  gate.check(!faulty.leakage_audit_passed);

  gate.finish();
}

TEST_CASE("C6: cold-start separation scenario") {
  Gate gate("C6 cold-start separation");

  const auto synth = generate_synthetic(separation_config(606));
  const auto& bundle = synth.bundle;
  gate.check(synth.manifest.cluster_best_item.size() == 2);
  gate.check(synth.manifest.cluster_best_item[0] != synth.manifest.cluster_best_item[1]);

  // Brute-force per-case argmax oracle: by construction every case's
  // argmax is its cluster's designated best item.
  std::map<std::size_t, std::size_t> cluster_sizes;
  for (const auto& case_id : bundle.matrix.case_ids()) {
    const std::size_t c = *bundle.matrix.case_index(case_id);
    std::size_t best_i = 0;
    for (std::size_t i = 1; i < bundle.matrix.n_items(); ++i) {
      if (bundle.matrix.value(i, c) > bundle.matrix.value(best_i, c)) best_i = i;
    }
    const std::size_t cluster = synth.manifest.case_cluster.at(case_id);
    ++cluster_sizes[cluster];
    gate.check(bundle.matrix.item_ids()[best_i] ==
               synth.manifest.cluster_best_item[cluster]);
  }
  gate.check(cluster_sizes[0] == cluster_sizes[1]);

  CVConfig cfg;
  cfg.completion = copula_cfg(3, 0, 150, 1e-4);
  cfg.sparsity_levels = {0.5};
  cfg.n_realisations = 5;
  cfg.rng_seed = 909;
  cfg.grid.metrics = {Metric::kEuclidean, Metric::kCosine, Metric::kGower};
  cfg.grid.k_values = {1, 2, 3, 5};
  cfg.reference_item = bundle.reference_item;
  const auto report = run_nested_cv(bundle.matrix, bundle.features, bundle.schema,
                                    bundle.experiments, cfg);
  gate.check(report.leakage_audit_passed);
  gate.check(report.warnings.empty());

  const auto& rs = aggregate_row(report, "rs", 0.5);
  const auto& pop = aggregate_row(report, "pop", 0.5);
  MESSAGE("C6 rs mrr@1 = " << rs.mrr1.mean << ", pop mrr@1 = " << pop.mrr1.mean);
  gate.check(rs.mrr1.mean >= 0.9);
  gate.check(pop.mrr1.mean <= 0.5 + 0.1);
  gate.check(rs.mrr1.mean > pop.mrr1.mean);

  gate.finish(300.0);
}

TEST_CASE("C7: regret identities") {
  Gate gate("C7 regret identities");

  const auto synth = generate_synthetic(scenario6_config(606));
  const auto& bundle = synth.bundle;
  CVConfig cfg;
  cfg.completion = copula_cfg(5, 0, 150, 1e-4);
  cfg.sparsity_levels = {0.5};
  cfg.n_realisations = 20;
  cfg.rng_seed = 707;
  cfg.grid.metrics = {Metric::kEuclidean};
  cfg.grid.k_values = {1, 2, 3};
  const auto report = run_nested_cv(bundle.matrix, bundle.features, bundle.schema,
                                    bundle.experiments, cfg);

  gate.check(report.cells.size() == 120);
  for (const auto& cell : report.cells) {
    gate.check(cell.methods.at("oracle").regret == 0.0);
    gate.check(cell.methods.at("oracle").rr1 == 1.0);
  }

  const auto& rs = aggregate_row(report, "rs", 0.5);
  const auto& random = aggregate_row(report, "random", std::nullopt);
  MESSAGE("C7 rs regret CI [" << rs.regret.lo << ", " << rs.regret.hi << "], random ["
                              << random.regret.lo << ", " << random.regret.hi << "]");
  gate.check(rs.regret.hi < random.regret.lo);

  // A second, differently shaped bundle keeps the oracle honest.
  SynthConfig other;
  other.n_items = 7;
  other.n_cases = 12;
  other.n_experiments = 3;
  other.n_clusters = 3;
  other.noise_sd = 0.04;
  other.rng_seed = 717;
  const auto b2 = generate_synthetic(other).bundle;
  CVConfig cfg2;
  cfg2.completion = copula_cfg(3, 0, 120);
  cfg2.sparsity_levels = {0.25};
  cfg2.n_realisations = 1;
  cfg2.grid.metrics = {Metric::kEuclidean};
  cfg2.grid.k_values = {1};
  const auto r2 = run_nested_cv(b2.matrix, b2.features, b2.schema, b2.experiments, cfg2);
  gate.check(!r2.cells.empty());
  for (const auto& cell : r2.cells) {
    gate.check(cell.methods.at("oracle").regret == 0.0);
  }

  gate.finish();
}

TEST_CASE("C8: staggering detector") {
  Gate gate("C8 staggering detector");

  gate.check(!detect_staggering({0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8}));
  gate.check(detect_staggering({0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0}));
  // Exactly four consecutive directional changes, then flat: below the
  // five-change default.
  gate.check(!detect_staggering({0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0}));

  Rng rng(808);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t len = 2 + rng.uniform_index(39);
    Profile p(len);
    for (auto& x : p) x = rng.unit_double();
    const bool flag = detect_staggering(p);

    const double a = 0.1 + 4.9 * rng.unit_double();
    const double b = -3.0 + 6.0 * rng.unit_double();
    Profile affine(len), negated(len);
    for (std::size_t i = 0; i < len; ++i) {
      affine[i] = a * p[i] + b;
      negated[i] = -p[i];
    }
    Profile reversed(p.rbegin(), p.rend());
    gate.check(detect_staggering(affine) == flag);
    gate.check(detect_staggering(negated) == flag);
    gate.check(detect_staggering(reversed) == flag);
  }
  gate.finish();
}

TEST_CASE("C9: determinism") {
  Gate gate("C9 determinism");

  PerformanceMatrix big =
      PerformanceMatrix::constant(make_ids("i", 100), make_ids("c", 136), 1.0);
  const std::map<double, std::size_t> removed = {
      {0.25, 3400}, {0.5, 6800}, {0.75, 10200}, {0.9, 12240}};
  for (const auto& [s, expect] : removed) {
    gate.check(13600 - sparsify(big, s, 97).observed_count() == expect);
  }

  SynthConfig scfg;
  scfg.n_items = 6;
  scfg.n_cases = 12;
  scfg.n_experiments = 3;
  scfg.noise_sd = 0.02;
  scfg.rng_seed = 919;
  const auto bundle = generate_synthetic(scfg).bundle;
  CVConfig cfg;
  cfg.completion = copula_cfg(3, 0, 120);
  cfg.sparsity_levels = {0.25, 0.5};
  cfg.n_realisations = 2;
  cfg.rng_seed = 929;
  cfg.grid.metrics = {Metric::kEuclidean};
  cfg.grid.k_values = {1, 3};
  cfg.reference_item = bundle.reference_item;

  const auto work = std::filesystem::temp_directory_path() / "cmrec_acceptance_c9";
  std::filesystem::remove_all(work);
  cfg.threads = 1;
  const auto r1 = run_nested_cv(bundle.matrix, bundle.features, bundle.schema,
                                bundle.experiments, cfg);
  save_report(r1, cfg, (work / "a").string());
  cfg.threads = 4;
  const auto r2 = run_nested_cv(bundle.matrix, bundle.features, bundle.schema,
                                bundle.experiments, cfg);
  save_report(r2, cfg, (work / "b").string());
  const auto r3 = run_nested_cv(bundle.matrix, bundle.features, bundle.schema,
                                bundle.experiments, cfg);
  save_report(r3, cfg, (work / "c").string());

  for (const auto* name : {"cells.csv", "aggregate.csv", "per_experiment.csv"}) {
    const auto a = read_text_file((work / "a" / name).string());
    gate.check(a == read_text_file((work / "b" / name).string()));
    gate.check(a == read_text_file((work / "c" / name).string()));
  }
  // The manifest echoes the thread cap, so compare only the identically
  // configured pair there.
  gate.check(read_text_file((work / "b" / "manifest.json").string()) ==
             read_text_file((work / "c" / "manifest.json").string()));
  std::filesystem::remove_all(work);

  gate.finish();
}

TEST_CASE("C10: protocol shape parity") {
  Gate gate("C10 protocol shape parity");

  SynthConfig scfg;
  scfg.n_items = 6;
  scfg.n_cases = 16;
  scfg.n_experiments = 4;
  scfg.noise_sd = 0.02;
  scfg.rng_seed = 1010;
  const auto bundle = generate_synthetic(scfg).bundle;
  CVConfig cfg;
  cfg.completion = copula_cfg(3, 0, 120);
  cfg.sparsity_levels = {0.25, 0.75};
  cfg.n_realisations = 2;
  cfg.grid.metrics = {Metric::kEuclidean, Metric::kCosine};
  cfg.grid.k_values = {1, 2};
  cfg.reference_item = bundle.reference_item;
  const auto report = run_nested_cv(bundle.matrix, bundle.features, bundle.schema,
                                    bundle.experiments, cfg);

  std::vector<std::pair<std::optional<double>, std::string>> rows;
  for (const auto& a : report.aggregates) rows.emplace_back(a.sparsity, a.method);
  const std::vector<std::pair<std::optional<double>, std::string>> want = {
      {0.25, "pop"}, {0.25, "mc"}, {0.25, "rs"}, {0.75, "pop"}, {0.75, "mc"}, {0.75, "rs"},
      {std::nullopt, "reference"}, {std::nullopt, "random"}};
  gate.check(rows == want);

  gate.check(report.per_experiment.size() == 8);
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& s : report.per_experiment) {
    seen.insert({format_double(s.sparsity), s.experiment});
    gate.check((s.modal_metric == Metric::kEuclidean || s.modal_metric == Metric::kCosine));
    gate.check((s.modal_k == 1 || s.modal_k == 2));
    gate.check(s.rr1.lo <= s.rr1.mean);
    gate.check(s.rr1.mean <= s.rr1.hi);
    gate.check(s.rr3.lo <= s.rr3.mean);
    gate.check(s.rr3.mean <= s.rr3.hi);
  }
  gate.check(seen.size() == 8);

  for (const auto& cell : report.cells) {
    gate.check(cell.methods.at("oracle").regret == 0.0);
  }

  const auto work = std::filesystem::temp_directory_path() / "cmrec_acceptance_c10";
  std::filesystem::remove_all(work);
  save_report(report, cfg, work.string());
  const auto aggregate = read_text_file((work / "aggregate.csv").string());
  const auto per_exp = read_text_file((work / "per_experiment.csv").string());
  gate.check(aggregate.rfind(
                 "sparsity,method,mrr1,mrr1_lo,mrr1_hi,mrr3,mrr3_lo,mrr3_hi,"
                 "regret,regret_lo,regret_hi\n",
                 0) == 0);
  gate.check(std::count(aggregate.begin(), aggregate.end(), '\n') == 9);
  gate.check(per_exp.rfind(
                 "sparsity,experiment,chosen_metric,chosen_k,rr1,rr1_lo,rr1_hi,"
                 "rr3,rr3_lo,rr3_hi\n",
                 0) == 0);
  gate.check(std::count(per_exp.begin(), per_exp.end(), '\n') == 9);
  std::filesystem::remove_all(work);

  gate.finish();
}
