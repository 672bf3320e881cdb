#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cmrec/bundle.hpp"
#include "cmrec/completion.hpp"
#include "cmrec/csv.hpp"
#include "cmrec/errors.hpp"
#include "cmrec/evaluation.hpp"
#include "cmrec/features.hpp"
#include "cmrec/protocol.hpp"
#include "cmrec/recommend.hpp"
#include "cmrec/stability.hpp"

namespace {

using nlohmann::json;

struct GlobalOpts {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> config_path;
  std::optional<std::size_t> threads;
};

cmrec::RunConfig base_run_config(const GlobalOpts& g) {
  cmrec::RunConfig rc;
  if (g.config_path) rc = cmrec::RunConfig::from_file(*g.config_path);
  if (g.seed) rc.cv.rng_seed = *g.seed;
  if (g.threads) rc.cv.threads = *g.threads;
  return rc;
}

cmrec::CaseFeatures parse_query_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw cmrec::DataError(std::string("query JSON parse failure: ") + e.what());
  }
  if (!j.is_object()) throw cmrec::DataError("query JSON must be an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "id" && key != "continuous" && key != "categorical") {
      throw cmrec::DataError("query JSON has unknown key '" + key + "'");
    }
  }
  cmrec::CaseFeatures q;
  q.case_id = j.value("id", std::string("query"));
  try {
    if (j.contains("continuous")) {
      for (const auto& [name, v] : j.at("continuous").items()) {
        q.continuous_values[name] = v.get<double>();
      }
    }
    if (j.contains("categorical")) {
      for (const auto& [name, v] : j.at("categorical").items()) {
        q.categorical_values[name] = v.get<std::string>();
      }
    }
  } catch (const json::exception& e) {
    throw cmrec::DataError(std::string("query JSON field failure: ") + e.what());
  }
  return q;
}

std::string format_interval(const cmrec::Interval& iv) {
  std::ostringstream os;
  os << cmrec::format_double(iv.mean) << " [" << cmrec::format_double(iv.lo) << ", "
     << cmrec::format_double(iv.hi) << "]";
  return os.str();
}

int cmd_synth(const cmrec::SynthConfig& cfg, const std::string& out_dir) {
  const auto result = cmrec::generate_synthetic(cfg);
  cmrec::save_bundle(result.bundle, out_dir);
  const auto manifest_path = std::filesystem::path(out_dir) / "synth_manifest.json";
  cmrec::write_text_file(manifest_path.string(),
                         cmrec::synth_manifest_json(cfg, result.manifest));
  std::cout << "wrote bundle (" << cfg.n_items << " items x " << cfg.n_cases << " cases, "
            << cfg.n_experiments << " experiments) to " << out_dir << "\n";
  return 0;
}

int cmd_evaluate(const cmrec::RunConfig& rc, const std::string& bundle_dir,
                 const std::string& out_dir) {
  const auto bundle = cmrec::load_bundle(bundle_dir);
  cmrec::CVConfig cfg = rc.cv;
  if (!cfg.reference_item) cfg.reference_item = bundle.reference_item;
  const auto report = cmrec::run_nested_cv(bundle.matrix, bundle.features, bundle.schema,
                                           bundle.experiments, cfg);
  cmrec::save_report(report, cfg, out_dir);
  std::cout << "cells: " << report.cells.size() << "\n";
  for (const auto& agg : report.aggregates) {
    std::cout << "  ";
    if (agg.sparsity) {
      std::cout << "s=" << cmrec::format_double(*agg.sparsity);
    } else {
      std::cout << "pooled";
    }
    std::cout << " " << agg.method << ": mrr@1 " << format_interval(agg.mrr1) << ", mrr@3 "
              << format_interval(agg.mrr3) << ", regret " << format_interval(agg.regret)
              << "\n";
  }
  std::cout << "leakage audit: " << (report.leakage_audit_passed ? "passed" : "FAILED") << "\n";
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "report written to " << out_dir << "\n";
  return 0;
}

int cmd_recommend(const cmrec::RunConfig& rc, const std::string& bundle_dir,
                  const std::string& query_path, cmrec::Metric metric, std::size_t k,
                  std::optional<std::size_t> list_length) {
  const auto bundle = cmrec::load_bundle(bundle_dir);
  const auto query = parse_query_json(cmrec::read_text_file(query_path));
  cmrec::PerformanceMatrix completed =
      bundle.matrix.fully_observed() ? bundle.matrix
                                     : cmrec::complete(bundle.matrix, rc.cv.completion);
  const auto result = cmrec::hybrid_recommend(query, bundle.matrix, bundle.features, completed,
                                              k, metric, bundle.schema);
  std::size_t limit = result.ranking.size();
  if (list_length) limit = std::min(limit, *list_length);
  std::cout << "rank,item_id,score\n";
  for (std::size_t r = 0; r < limit; ++r) {
    const auto& item = result.ranking[r];
    std::cout << (r + 1) << "," << item << "," << cmrec::format_double(result.scores.at(item))
              << "\n";
  }
  return 0;
}

int cmd_complete(const cmrec::RunConfig& rc, const std::string& in_path,
                 const std::string& out_path) {
  const auto m = cmrec::read_matrix_csv(cmrec::read_text_file(in_path));
  const auto completed = cmrec::complete(m, rc.cv.completion);
  cmrec::write_text_file(out_path, cmrec::write_matrix_csv(completed));
  std::cout << "wrote completed " << m.n_items() << "x" << m.n_cases() << " matrix ("
            << cmrec::completion_method_name(rc.cv.completion.method) << ") to " << out_path
            << "\n";
  return 0;
}

int cmd_detect_stagger(const std::string& in_path, std::size_t min_changes,
                       double amplitude_fraction) {
  const auto profiles = cmrec::read_profiles_csv(cmrec::read_text_file(in_path));
  std::cout << "profile,staggered\n";
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const bool flag = cmrec::detect_staggering(profiles[i], min_changes, amplitude_fraction);
    std::cout << (i + 1) << "," << (flag ? "true" : "false") << "\n";
  }
  return 0;
}

int cmd_metrics(const std::string& bundle_dir, const std::string& rankings_path,
                double threshold) {
  const auto bundle = cmrec::load_bundle(bundle_dir);
  const auto records = cmrec::parse_csv(cmrec::read_text_file(rankings_path));
  if (records.empty()) throw cmrec::DataError("rankings file is empty");

  std::vector<std::pair<std::string, double>> rr1_by_case, rr3_by_case, regret_by_case;
  std::vector<std::pair<std::string, std::size_t>> relevance_counts;
  std::set<std::string> seen;
  for (std::size_t row = 0; row < records.size(); ++row) {
    const auto& rec = records[row];
    if (rec.size() < 2) {
      throw cmrec::DataError("rankings row " + std::to_string(row + 1) +
                             ": need a case id and at least one item");
    }
    const std::string& case_id = rec[0];
    if (!bundle.matrix.case_index(case_id)) {
      throw cmrec::DataError("rankings row " + std::to_string(row + 1) + ": unknown case '" +
                             case_id + "'");
    }
    if (!seen.insert(case_id).second) {
      throw cmrec::DataError("rankings file lists case '" + case_id + "' twice");
    }
    std::vector<std::string> ranking(rec.begin() + 1, rec.end());
    std::set<std::string> unique_items;
    for (const auto& item : ranking) {
      if (!bundle.matrix.item_index(item)) {
        throw cmrec::DataError("rankings row " + std::to_string(row + 1) + ": unknown item '" +
                               item + "'");
      }
      if (!unique_items.insert(item).second) {
        throw cmrec::DataError("rankings row " + std::to_string(row + 1) + ": item '" + item +
                               "' repeated");
      }
    }
    std::map<std::string, double> column;
    const std::size_t c = *bundle.matrix.case_index(case_id);
    for (std::size_t i = 0; i < bundle.matrix.n_items(); ++i) {
      if (bundle.matrix.present(i, c)) {
        column[bundle.matrix.item_ids()[i]] = bundle.matrix.value(i, c);
      }
    }
    if (column.empty()) {
      throw cmrec::DataError("case '" + case_id + "' has no observed ground truth");
    }
    const auto rel = cmrec::relevant_items(column, case_id, threshold);
    rr1_by_case.emplace_back(case_id, cmrec::rr_at_k(ranking, rel, 1));
    rr3_by_case.emplace_back(case_id, cmrec::rr_at_k(ranking, rel, 3));
    regret_by_case.emplace_back(case_id, cmrec::regret(column, ranking.front()));
    relevance_counts.emplace_back(case_id, rel.relevant.size());
  }

  std::vector<std::string> experiments;
  for (const auto& e : bundle.experiments.experiment_ids()) {
    for (const auto& [case_id, _] : rr1_by_case) {
      if (bundle.experiments.experiment_of(case_id) == e) {
        experiments.push_back(e);
        break;
      }
    }
  }
  std::vector<double> rr1_exp, rr3_exp, regret_exp;
  for (const auto& e : experiments) {
    rr1_exp.push_back(cmrec::rr_per_experiment(rr1_by_case, bundle.experiments, e));
    rr3_exp.push_back(cmrec::rr_per_experiment(rr3_by_case, bundle.experiments, e));
    regret_exp.push_back(cmrec::rr_per_experiment(regret_by_case, bundle.experiments, e));
  }

  std::cout << "metric,value\n";
  std::cout << "n_cases," << rr1_by_case.size() << "\n";
  std::cout << "mrr@1," << cmrec::format_double(cmrec::mrr(rr1_exp)) << "\n";
  std::cout << "mrr@3," << cmrec::format_double(cmrec::mrr(rr3_exp)) << "\n";
  std::cout << "mean_regret," << cmrec::format_double(cmrec::mrr(regret_exp)) << "\n";
  for (std::size_t k : {std::size_t{1}, std::size_t{3}}) {
    const double e = cmrec::expected_random_rr(relevance_counts, bundle.experiments,
                                               bundle.matrix.n_items(), k);
    std::cout << "expected_random_rr@" << k << "," << cmrec::format_double(e) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"closure-model recommender toolkit"};
  app.require_subcommand(1);

  GlobalOpts g;
  std::uint64_t seed_val = 0;
  std::string config_val;
  std::size_t threads_val = 0;
  auto* seed_opt = app.add_option("--seed", seed_val, "master RNG seed override");
  auto* config_opt = app.add_option("--config", config_val, "run-config JSON path");
  auto* threads_opt = app.add_option("--threads", threads_val, "protocol thread cap (0 = auto)");

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset bundle");
  cmrec::SynthConfig scfg;
  std::string synth_out;
  synth->add_option("--out", synth_out, "output bundle directory")->required();
  synth->add_option("--items", scfg.n_items, "item count");
  synth->add_option("--cases", scfg.n_cases, "case count");
  synth->add_option("--experiments", scfg.n_experiments, "experiment count");
  synth->add_option("--clusters", scfg.n_clusters, "latent cluster count");
  synth->add_option("--rank", scfg.latent_rank, "latent factor rank");
  synth->add_option("--noise", scfg.noise_sd, "additive noise standard deviation");
  synth->add_option("--separation", scfg.cluster_separation, "feature cluster margin knob");
  synth->add_option("--categorical", scfg.n_categorical, "categorical feature count");
  synth->add_option("--continuous", scfg.n_continuous, "continuous feature count");
  synth->add_option("--sparsity", scfg.sparsity_preview, "fraction of entries hidden on disk");

  auto* evaluate = app.add_subcommand("evaluate", "run the nested CV protocol on a bundle");
  std::string eval_bundle, eval_out;
  std::vector<double> eval_sparsity;
  std::size_t eval_realisations = 0;
  bool eval_fault = false;
  evaluate->add_option("--bundle", eval_bundle, "bundle directory")->required();
  evaluate->add_option("--out", eval_out, "report output directory")->required();
  auto* sp_opt = evaluate->add_option("--sparsity", eval_sparsity, "sparsity levels")
                     ->delimiter(',');
  auto* re_opt = evaluate->add_option("--realisations", eval_realisations, "mask realisations");
  evaluate->add_flag("--inject-leakage-fault", eval_fault,
                     "skip dropping test columns (audit must fail)");

  auto* recommend = app.add_subcommand("recommend", "rank items for a query case");
  std::string rec_bundle, rec_query;
  std::string rec_metric = "euclidean";
  std::size_t rec_k = 3;
  std::size_t rec_len = 0;
  auto* len_opt = recommend->add_option("--list-length", rec_len, "truncate the ranking");
  recommend->add_option("--bundle", rec_bundle, "bundle directory")->required();
  recommend->add_option("--query", rec_query, "query-case JSON path")->required();
  recommend->add_option("--metric", rec_metric, "euclidean | cosine | gower");
  recommend->add_option("--k", rec_k, "neighbour count");

  auto* complete_cmd = app.add_subcommand("complete", "impute a sparse matrix CSV");
  std::string comp_in, comp_out;
  std::string comp_method;
  complete_cmd->add_option("--in", comp_in, "input matrix CSV")->required();
  complete_cmd->add_option("--out", comp_out, "output matrix CSV")->required();
  auto* method_opt = complete_cmd->add_option("--method", comp_method, "copula | soft_impute");

  auto* stagger = app.add_subcommand("detect-stagger", "flag staggering in profile rows");
  std::string stag_in;
  std::size_t stag_min = 5;
  double stag_amp = 0.01;
  stagger->add_option("--in", stag_in, "profiles CSV (one profile per row)")->required();
  stagger->add_option("--min-changes", stag_min, "consecutive directional changes required");
  stagger->add_option("--amplitude-fraction", stag_amp, "range fraction a swing must exceed");

  auto* metrics = app.add_subcommand("metrics", "score a rankings file against a bundle");
  std::string met_bundle, met_rankings;
  double met_threshold = cmrec::kDefaultRelevanceThreshold;
  metrics->add_option("--bundle", met_bundle, "bundle directory")->required();
  metrics->add_option("--rankings", met_rankings, "CSV: case_id,item,item,... per row")
      ->required();
  metrics->add_option("--threshold", met_threshold, "relevance threshold");

  for (auto* sub : {synth, evaluate, recommend, complete_cmd, stagger, metrics}) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    std::cerr << "run with --help for usage\n";
    return 1;
  }

  if (seed_opt->count() > 0) g.seed = seed_val;
  if (config_opt->count() > 0) g.config_path = config_val;
  if (threads_opt->count() > 0) g.threads = threads_val;

  try {
    if (app.got_subcommand(synth)) {
      if (g.seed) scfg.rng_seed = *g.seed;
      return cmd_synth(scfg, synth_out);
    }
    if (app.got_subcommand(evaluate)) {
      auto rc = base_run_config(g);
      if (sp_opt->count() > 0) rc.cv.sparsity_levels = eval_sparsity;
      if (re_opt->count() > 0) rc.cv.n_realisations = eval_realisations;
      if (eval_fault) rc.cv.inject_leakage_fault = true;
      rc.cv.validate();
      return cmd_evaluate(rc, eval_bundle, eval_out);
    }
    if (app.got_subcommand(recommend)) {
      auto rc = base_run_config(g);
      if (g.seed) rc.cv.completion.rng_seed = *g.seed;
      if (rec_k == 0) throw cmrec::DataError("--k must be positive");
      std::optional<std::size_t> limit;
      if (len_opt->count() > 0) limit = rec_len;
      return cmd_recommend(rc, rec_bundle, rec_query, cmrec::parse_metric(rec_metric), rec_k,
                           limit);
    }
    if (app.got_subcommand(complete_cmd)) {
      auto rc = base_run_config(g);
      if (method_opt->count() > 0) {
        rc.cv.completion.method = cmrec::parse_completion_method(comp_method);
      }
      if (g.seed) rc.cv.completion.rng_seed = *g.seed;
      return cmd_complete(rc, comp_in, comp_out);
    }
    if (app.got_subcommand(stagger)) {
      return cmd_detect_stagger(stag_in, stag_min, stag_amp);
    }
    if (app.got_subcommand(metrics)) {
      return cmd_metrics(met_bundle, met_rankings, met_threshold);
    }
    std::cerr << "usage error: no subcommand\n";
    return 1;
  } catch (const cmrec::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
