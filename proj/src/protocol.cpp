#include "cmrec/protocol.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstring>
#include <memory>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include "cmrec/errors.hpp"
#include "cmrec/rng.hpp"

namespace cmrec {

namespace {

// Two independently seeded splitmix lanes over the same word stream.
class ContentHasher {
 public:
  void word(std::uint64_t w) {
    a_ = detail::mix64(a_ ^ w);
    b_ = detail::mix64(b_ ^ ~w);
  }
  void str(std::string_view s) {
    word(s.size());
    std::uint64_t acc = 0;
    int n = 0;
    for (unsigned char c : s) {
      acc = (acc << 8) | c;
      if (++n == 8) {
        word(acc);
        acc = 0;
        n = 0;
      }
    }
    if (n) word(acc);
  }
  std::pair<std::uint64_t, std::uint64_t> digest() const { return {a_, b_}; }

 private:
  std::uint64_t a_ = 0x243f6a8885a308d3ull;
  std::uint64_t b_ = 0x13198a2e03707344ull;
};

std::uint64_t double_bits(double v) {
  std::uint64_t u = 0;
  std::memcpy(&u, &v, sizeof(u));
  return u;
}

bool better_config(const InnerCVRow& a, const InnerCVRow& b) {
  if (a.mrr3_val != b.mrr3_val) return a.mrr3_val > b.mrr3_val;
  if (a.k != b.k) return a.k < b.k;
  return static_cast<int>(a.metric) < static_cast<int>(b.metric);
}

InnerCVRow default_config(const HyperGrid& grid) {
  InnerCVRow best{grid.metrics.front(), grid.k_values.front(), 0.0};
  for (Metric m : grid.metrics) {
    for (std::size_t k : grid.k_values) {
      InnerCVRow row{m, k, 0.0};
      if (better_config(row, best)) best = row;
    }
  }
  return best;
}

std::map<std::string, double> full_column(const PerformanceMatrix& m, std::size_t c) {
  std::map<std::string, double> col;
  for (std::size_t i = 0; i < m.n_items(); ++i) {
    if (m.present(i, c)) col[m.item_ids()[i]] = m.value(i, c);
  }
  return col;
}

std::vector<CaseFeatures> features_for(const PerformanceMatrix& m,
                                       const std::map<std::string, const CaseFeatures*>& by_id) {
  std::vector<CaseFeatures> out;
  out.reserve(m.n_cases());
  for (const auto& c : m.case_ids()) {
    const auto it = by_id.find(c);
    if (it == by_id.end()) throw DataError("no features for case '" + c + "'");
    out.push_back(*it->second);
  }
  return out;
}

std::map<std::string, const CaseFeatures*> index_features(
    const std::vector<CaseFeatures>& features) {
  std::map<std::string, const CaseFeatures*> by_id;
  for (const auto& f : features) {
    if (!by_id.emplace(f.case_id, &f).second) {
      throw DataError("duplicate features for case '" + f.case_id + "'");
    }
  }
  return by_id;
}

// Completed-matrix cache. The fit seed derives from the matrix content
// hash, so identical training matrices reached along different paths of
// the protocol share one fit. Last write wins on a racing key; both
// writers hold identical results.
class FitCache {
 public:
  using Key = std::array<std::uint64_t, 7>;

  static Key key_of(std::pair<std::uint64_t, std::uint64_t> h, const CompletionConfig& cfg,
                    std::uint64_t seed_base) {
    return {h.first,
            h.second,
            static_cast<std::uint64_t>(cfg.method),
            (static_cast<std::uint64_t>(cfg.rank) << 32) |
                static_cast<std::uint64_t>(cfg.max_iterations),
            double_bits(cfg.tolerance),
            cfg.lambda ? double_bits(*cfg.lambda) : ~0ull,
            seed_base};
  }

  std::shared_ptr<const PerformanceMatrix> get_or_compute(const PerformanceMatrix& m,
                                                          const CompletionConfig& cfg,
                                                          std::uint64_t seed_base) {
    const auto h = matrix_content_hash(m);
    const Key key = key_of(h, cfg, seed_base);
    {
      std::lock_guard<std::mutex> lk(mu_);
      const auto it = cache_.find(key);
      if (it != cache_.end()) return it->second;
    }
    CompletionConfig fit_cfg = cfg;
    fit_cfg.rng_seed = derive_seed(seed_base, "fit", h.first, h.second);
    auto completed = std::make_shared<const PerformanceMatrix>(complete(m, fit_cfg));
    std::lock_guard<std::mutex> lk(mu_);
    cache_[key] = completed;
    return completed;
  }

 private:
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      std::uint64_t h = 0;
      for (std::uint64_t w : k) h = detail::mix64(h ^ w);
      return static_cast<std::size_t>(h);
    }
  };
  std::mutex mu_;
  std::unordered_map<Key, std::shared_ptr<const PerformanceMatrix>, KeyHash> cache_;
};

InnerCVResult inner_cv_impl(const PerformanceMatrix& train,
                            const std::vector<CaseFeatures>& features,
                            const FeatureSchema& schema, const ExperimentMap& em,
                            const HyperGrid& grid, const CompletionConfig& completion_cfg,
                            double relevance_threshold, std::set<std::string>* touched,
                            FitCache& cache, std::uint64_t seed_base) {
  grid.validate();
  completion_cfg.validate();
  if (em.experiment_ids().size() < 2) {
    throw DataError("inner cross-validation needs at least 2 experiments, got " +
                    std::to_string(em.experiment_ids().size()));
  }
  const auto by_id = index_features(features);

  std::vector<InnerCVRow> table;
  table.reserve(grid.size());
  for (Metric m : grid.metrics) {
    for (std::size_t k : grid.k_values) table.push_back({m, k, 0.0});
  }
  std::vector<std::size_t> counts(table.size(), 0);

  for (const auto& v : em.experiment_ids()) {
    auto [t_matrix, t_em] = drop_experiment(train, em, v);
    if (touched) {
      touched->insert(t_matrix.case_ids().begin(), t_matrix.case_ids().end());
    }
    if (t_matrix.observed_count() == 0) continue;
    const auto completed = cache.get_or_compute(t_matrix, completion_cfg, seed_base);
    const auto neighbour_features = features_for(t_matrix, by_id);

    // Validation ground truth is whatever survived sparsification in v's
    // columns; sub-cases with nothing observed cannot be scored.
    struct ValCase {
      const CaseFeatures* query;
      RelevanceSet rel;
    };
    std::vector<ValCase> val_cases;
    for (const auto& q : em.cases_of(v)) {
      const auto c = train.case_index(q);
      if (!c) continue;
      auto col = full_column(train, *c);
      if (col.empty()) continue;
      val_cases.push_back({by_id.at(q), relevant_items(col, q, relevance_threshold)});
    }
    if (val_cases.empty()) continue;

    for (std::size_t g = 0; g < table.size(); ++g) {
      double sum = 0.0;
      for (const auto& vc : val_cases) {
        const auto rec = hybrid_recommend(*vc.query, t_matrix, neighbour_features, *completed,
                                          table[g].k, table[g].metric, schema);
        sum += rr_at_k(rec.ranking, vc.rel, 3);
      }
      table[g].mrr3_val += sum / static_cast<double>(val_cases.size());
      ++counts[g];
    }
  }

  for (std::size_t g = 0; g < table.size(); ++g) {
    table[g].mrr3_val = counts[g] ? table[g].mrr3_val / static_cast<double>(counts[g]) : 0.0;
  }
  InnerCVRow best = table.front();
  for (const auto& row : table) {
    if (better_config(row, best)) best = row;
  }
  return {best.metric, best.k, std::move(table)};
}

struct CellTask {
  std::size_t sparsity_index;
  std::size_t realisation;
  std::size_t experiment_index;
};

Interval interval_of(const std::vector<double>& samples) {
  if (samples.size() >= 2) return confidence_interval(samples);
  const double m = samples.empty() ? 0.0 : samples.front();
  return {m, m, m};
}

}  // namespace

void HyperGrid::validate() const {
  if (metrics.empty() || k_values.empty()) {
    throw DataError("hyperparameter grid needs at least one metric and one k");
  }
  for (std::size_t k : k_values) {
    if (k == 0) throw DataError("hyperparameter grid holds k = 0");
  }
}

void CVConfig::validate() const {
  for (double s : sparsity_levels) {
    if (!(s >= 0.0 && s < 1.0)) {
      throw DataError("sparsity level " + std::to_string(s) + " outside [0,1)");
    }
  }
  if (sparsity_levels.empty()) throw DataError("no sparsity levels configured");
  if (n_realisations < 1) throw DataError("n_realisations must be at least 1");
  if (selection_metric != "mrr@3") {
    throw DataError("unsupported selection metric '" + selection_metric + "'");
  }
  if (!(relevance_threshold >= 0.0)) throw DataError("relevance threshold must be >= 0");
  completion.validate();
  grid.validate();
}

PerformanceMatrix sparsify(const PerformanceMatrix& m, double s, std::uint64_t seed) {
  if (!(s >= 0.0 && s < 1.0)) {
    throw DataError("sparsity " + std::to_string(s) + " outside [0,1)");
  }
  if (!m.fully_observed()) throw DataError("sparsify needs a fully observed matrix");
  const std::size_t total = m.n_items() * m.n_cases();
  const auto n_remove = static_cast<std::size_t>(std::llround(s * static_cast<double>(total)));
  auto values = m.entries();
  std::vector<std::size_t> idx(total);
  for (std::size_t i = 0; i < total; ++i) idx[i] = i;
  Rng rng(seed);
  for (std::size_t i = 0; i < n_remove; ++i) {
    const std::size_t j = i + rng.uniform_index(total - i);
    std::swap(idx[i], idx[j]);
    values[idx[i]].reset();
  }
  return PerformanceMatrix(m.item_ids(), m.case_ids(), std::move(values));
}

std::pair<std::uint64_t, std::uint64_t> matrix_content_hash(const PerformanceMatrix& m) {
  ContentHasher h;
  h.word(m.n_items());
  h.word(m.n_cases());
  for (const auto& id : m.item_ids()) h.str(id);
  for (const auto& id : m.case_ids()) h.str(id);
  for (std::size_t i = 0; i < m.n_items(); ++i) {
    for (std::size_t c = 0; c < m.n_cases(); ++c) {
      if (m.present(i, c)) {
        h.word(double_bits(m.value(i, c)));
      } else {
        h.word(0x6d697373696e6721ull);
      }
    }
  }
  return h.digest();
}

InnerCVResult inner_cv(const PerformanceMatrix& train, const std::vector<CaseFeatures>& features,
                       const FeatureSchema& schema, const ExperimentMap& em,
                       const HyperGrid& grid, const CompletionConfig& completion_cfg,
                       double relevance_threshold, std::set<std::string>* touched) {
  FitCache cache;
  return inner_cv_impl(train, features, schema, em, grid, completion_cfg, relevance_threshold,
                       touched, cache, completion_cfg.rng_seed);
}

bool leakage_audit(const AccessTrace& trace, const ExperimentMap& em,
                   const std::string& experiment_id) {
  const auto it = trace.touched_by_experiment.find(experiment_id);
  if (it == trace.touched_by_experiment.end()) return true;
  for (const auto& q : em.cases_of(experiment_id)) {
    if (it->second.count(q)) return false;
  }
  return true;
}

CVReport run_nested_cv(const PerformanceMatrix& ground_truth,
                       const std::vector<CaseFeatures>& features, const FeatureSchema& schema,
                       const ExperimentMap& em, const CVConfig& cfg) {
  cfg.validate();
  if (!ground_truth.fully_observed()) {
    throw DataError("the nested protocol needs a fully observed ground-truth matrix");
  }
  if (em.n_cases() != ground_truth.n_cases()) {
    throw DataError("experiment map covers " + std::to_string(em.n_cases()) + " cases, matrix has " +
                    std::to_string(ground_truth.n_cases()));
  }
  for (const auto& c : ground_truth.case_ids()) {
    if (!em.contains_case(c)) throw DataError("case '" + c + "' missing from the experiment map");
  }
  const auto by_id = index_features(features);
  for (const auto& c : ground_truth.case_ids()) {
    if (!by_id.count(c)) throw DataError("case '" + c + "' has no features");
  }
  if (cfg.reference_item) reference_item(cfg.reference_item, ground_truth);

  const auto& experiments = em.experiment_ids();
  std::vector<CellTask> tasks;
  for (std::size_t si = 0; si < cfg.sparsity_levels.size(); ++si) {
    for (std::size_t r = 0; r < cfg.n_realisations; ++r) {
      for (std::size_t e = 0; e < experiments.size(); ++e) tasks.push_back({si, r, e});
    }
  }

  FitCache cache;
  const std::uint64_t completion_base = derive_seed(cfg.rng_seed, "completion");
  std::vector<std::optional<CVCell>> cells(tasks.size());
  std::vector<std::string> warnings;
  AccessTrace trace;
  std::mutex report_mu;

  auto run_task = [&](std::size_t ti) {
    const CellTask& task = tasks[ti];
    const double s = cfg.sparsity_levels[task.sparsity_index];
    const std::string& test_exp = experiments[task.experiment_index];
    std::set<std::string> touched;
    try {
      const std::uint64_t mask_seed =
          derive_seed(cfg.rng_seed, "mask", task.sparsity_index, task.realisation);
      const PerformanceMatrix sparse_full = sparsify(ground_truth, s, mask_seed);

      PerformanceMatrix train = sparse_full;
      ExperimentMap train_em = em;
      if (!cfg.inject_leakage_fault) {
        std::tie(train, train_em) = drop_experiment(sparse_full, em, test_exp);
      }
      touched.insert(train.case_ids().begin(), train.case_ids().end());
      if (train.observed_count() == 0) {
        throw DataError("nothing observed in the training split");
      }

      InnerCVRow chosen = default_config(cfg.grid);
      if (train_em.experiment_ids().size() >= 2) {
        const auto inner =
            inner_cv_impl(train, features_for(train, by_id), schema, train_em, cfg.grid,
                          cfg.completion, cfg.relevance_threshold, &touched, cache,
                          completion_base);
        chosen = {inner.metric, inner.k, 0.0};
      }

      const auto completed = cache.get_or_compute(train, cfg.completion, completion_base);
      const auto neighbour_features = features_for(train, by_id);
      const auto pop_rank = popularity_ranking(train, train_em, cfg.popularity_mode);
      const auto mc_rank = mc_popularity_ranking(*completed, train_em, cfg.popularity_mode);

      std::map<std::string, std::vector<std::pair<std::string, double>>> rr1, rr3;
      std::map<std::string, std::vector<double>> regrets;
      auto score = [&](const std::string& method, const std::string& q,
                       const std::vector<std::string>& ranking,
                       const std::map<std::string, double>& col, const RelevanceSet& rel) {
        rr1[method].emplace_back(q, rr_at_k(ranking, rel, 1));
        rr3[method].emplace_back(q, rr_at_k(ranking, rel, 3));
        regrets[method].push_back(regret(col, ranking.front()));
      };

      for (const auto& q : em.cases_of(test_exp)) {
        const auto c = ground_truth.case_index(q);
        const auto col = full_column(ground_truth, *c);
        const auto rel = relevant_items(col, q, cfg.relevance_threshold);

        const auto rec = hybrid_recommend(*by_id.at(q), train, neighbour_features, *completed,
                                          chosen.k, chosen.metric, schema);
        score("rs", q, rec.ranking, col, rel);
        score("pop", q, pop_rank, col, rel);
        score("mc", q, mc_rank, col, rel);
        if (cfg.reference_item) {
          score("reference", q, {*cfg.reference_item}, col, rel);
        }
        const std::uint64_t rand_seed = derive_seed(
            cfg.rng_seed, "random", task.sparsity_index, task.realisation, test_exp, q);
        score("random", q,
              random_recommendation(ground_truth.item_ids(), ground_truth.n_items(), rand_seed),
              col, rel);
        score("oracle", q, {rel.relevant.front().first}, col, rel);
      }

      CVCell cell;
      cell.sparsity = s;
      cell.realisation = task.realisation;
      cell.experiment = test_exp;
      cell.chosen_metric = chosen.metric;
      cell.chosen_k = chosen.k;
      for (const auto& [method, case_rrs] : rr1) {
        MethodScore ms;
        ms.rr1 = rr_per_experiment(case_rrs, em, test_exp);
        ms.rr3 = rr_per_experiment(rr3.at(method), em, test_exp);
        const auto& rg = regrets.at(method);
        ms.regret = std::accumulate(rg.begin(), rg.end(), 0.0) / static_cast<double>(rg.size());
        cell.methods[method] = ms;
      }

      std::lock_guard<std::mutex> lk(report_mu);
      trace.touched_by_experiment[test_exp].insert(touched.begin(), touched.end());
      cells[ti] = std::move(cell);
    } catch (const std::exception& ex) {
      std::lock_guard<std::mutex> lk(report_mu);
      trace.touched_by_experiment[test_exp].insert(touched.begin(), touched.end());
      warnings.push_back("skipped sparsity " + std::to_string(s) + " realisation " +
                         std::to_string(task.realisation) + " experiment " + test_exp + ": " +
                         ex.what());
    }
  };

  std::size_t n_threads = cfg.threads ? cfg.threads : std::thread::hardware_concurrency();
  if (n_threads == 0) n_threads = 1;
  n_threads = std::min(n_threads, tasks.size());
  if (n_threads <= 1) {
    for (std::size_t ti = 0; ti < tasks.size(); ++ti) run_task(ti);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t ti = next.fetch_add(1); ti < tasks.size(); ti = next.fetch_add(1)) {
          run_task(ti);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  CVReport report;
  report.trace = std::move(trace);
  report.warnings = std::move(warnings);
  for (auto& c : cells) {
    if (c) report.cells.push_back(std::move(*c));
  }

  report.leakage_audit_passed = true;
  for (const auto& e : experiments) {
    if (!leakage_audit(report.trace, em, e)) report.leakage_audit_passed = false;
  }

  // Realisation-level samples: mean over the experiments of one
  // realisation, then intervals across realisations.
  auto aggregate = [&](const std::string& method, std::optional<std::size_t> si) {
    std::vector<double> s1, s3, sr;
    for (std::size_t i = 0; i < cfg.sparsity_levels.size(); ++i) {
      if (si && *si != i) continue;
      for (std::size_t r = 0; r < cfg.n_realisations; ++r) {
        double a1 = 0, a3 = 0, ar = 0;
        std::size_t n = 0;
        for (const auto& cell : report.cells) {
          if (cell.sparsity != cfg.sparsity_levels[i] || cell.realisation != r) continue;
          const auto it = cell.methods.find(method);
          if (it == cell.methods.end()) continue;
          a1 += it->second.rr1;
          a3 += it->second.rr3;
          ar += it->second.regret;
          ++n;
        }
        if (!n) continue;
        s1.push_back(a1 / static_cast<double>(n));
        s3.push_back(a3 / static_cast<double>(n));
        sr.push_back(ar / static_cast<double>(n));
      }
    }
    if (s1.empty()) return false;
    CVAggregate agg;
    agg.sparsity = si ? std::optional<double>(cfg.sparsity_levels[*si]) : std::nullopt;
    agg.method = method;
    agg.mrr1 = interval_of(s1);
    agg.mrr3 = interval_of(s3);
    agg.regret = interval_of(sr);
    report.aggregates.push_back(std::move(agg));
    return true;
  };
  for (std::size_t si = 0; si < cfg.sparsity_levels.size(); ++si) {
    for (const auto& method : {"pop", "mc", "rs"}) aggregate(method, si);
  }
  if (cfg.reference_item) aggregate("reference", std::nullopt);
  aggregate("random", std::nullopt);

  for (std::size_t si = 0; si < cfg.sparsity_levels.size(); ++si) {
    for (const auto& e : experiments) {
      std::map<std::pair<std::size_t, int>, std::size_t> votes;
      std::vector<double> s1, s3;
      for (const auto& cell : report.cells) {
        if (cell.sparsity != cfg.sparsity_levels[si] || cell.experiment != e) continue;
        ++votes[{cell.chosen_k, static_cast<int>(cell.chosen_metric)}];
        const auto it = cell.methods.find("rs");
        if (it != cell.methods.end()) {
          s1.push_back(it->second.rr1);
          s3.push_back(it->second.rr3);
        }
      }
      if (votes.empty()) continue;
      auto best = votes.begin();
      for (auto it = votes.begin(); it != votes.end(); ++it) {
        if (it->second > best->second) best = it;
      }
      ExperimentSummary summary;
      summary.sparsity = cfg.sparsity_levels[si];
      summary.experiment = e;
      summary.modal_k = best->first.first;
      summary.modal_metric = static_cast<Metric>(best->first.second);
      summary.rr1 = interval_of(s1);
      summary.rr3 = interval_of(s3);
      report.per_experiment.push_back(std::move(summary));
    }
  }

  return report;
}

}  // namespace cmrec
