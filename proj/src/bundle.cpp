#include "cmrec/bundle.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <json.hpp>
#include <limits>
#include <set>
#include <sstream>

#include "cmrec/csv.hpp"
#include "cmrec/errors.hpp"
#include "cmrec/recommend.hpp"
#include "cmrec/rng.hpp"

namespace cmrec {

namespace {

using nlohmann::json;

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& ex) {
    throw DataError(what + ": " + ex.what());
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string padded_id(const char* prefix, std::size_t index, std::size_t count) {
  std::size_t digits = 1;
  for (std::size_t c = count; c >= 10; c /= 10) ++digits;
  std::string num = std::to_string(index);
  return prefix + std::string(digits - std::min(digits, num.size()), '0') + num;
}

json schema_to_json(const FeatureSchema& schema) {
  json cont = json::array();
  for (const auto& f : schema.continuous()) {
    cont.push_back({{"name", f.name}, {"min", f.min}, {"max", f.max}});
  }
  json cat = json::array();
  for (const auto& f : schema.categorical()) {
    cat.push_back({{"name", f.name}, {"options", f.options}});
  }
  return {{"continuous", cont}, {"categorical", cat}};
}

FeatureSchema schema_from_json(const json& j) {
  std::vector<ContinuousFeature> cont;
  for (const auto& f : j.at("continuous")) {
    cont.push_back({f.at("name").get<std::string>(), f.at("min").get<double>(),
                    f.at("max").get<double>()});
  }
  std::vector<CategoricalFeature> cat;
  for (const auto& f : j.at("categorical")) {
    cat.push_back(
        {f.at("name").get<std::string>(), f.at("options").get<std::vector<std::string>>()});
  }
  return FeatureSchema(std::move(cont), std::move(cat));
}

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!known.count(key)) throw DataError("unknown key '" + key + "' in " + where);
  }
}

std::string interval_cells(const Interval& iv) {
  return format_double(iv.mean) + "," + format_double(iv.lo) + "," + format_double(iv.hi);
}

json completion_to_json(const CompletionConfig& c) {
  json j{{"method", completion_method_name(c.method)},
         {"rank", c.rank},
         {"max_iterations", c.max_iterations},
         {"tolerance", c.tolerance},
         {"rng_seed", c.rng_seed}};
  j["lambda"] = c.lambda ? json(*c.lambda) : json(nullptr);
  return j;
}

}  // namespace

DatasetBundle load_bundle(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path base(dir);
  PerformanceMatrix matrix = load_matrix_csv((base / "matrix.csv").string());

  const auto validation = validate_matrix(matrix);
  if (!validation.ok()) {
    std::string msg = "invalid matrix in " + dir + ":";
    for (const auto& issue : validation.issues()) {
      msg += "\n  " + issue.location + ": " + issue.message;
    }
    throw DataError(msg);
  }

  const json meta =
      parse_json(read_text_file((base / "meta.json").string()), (base / "meta.json").string());
  FeatureSchema schema = [&] {
    try {
      return schema_from_json(meta.at("schema"));
    } catch (const json::exception& ex) {
      throw DataError("meta.json schema: " + std::string(ex.what()));
    }
  }();

  std::map<std::string, CaseFeatures> features_by_id;
  std::vector<std::pair<std::string, std::string>> assignments_by_matrix_order;
  std::map<std::string, std::string> experiment_of;
  try {
    for (const auto& entry : meta.at("cases")) {
      CaseFeatures f;
      f.case_id = entry.at("id").get<std::string>();
      if (entry.contains("continuous")) {
        for (const auto& [name, value] : entry.at("continuous").items()) {
          f.continuous_values[name] = value.get<double>();
        }
      }
      if (entry.contains("categorical")) {
        for (const auto& [name, value] : entry.at("categorical").items()) {
          f.categorical_values[name] = value.get<std::string>();
        }
      }
      experiment_of[f.case_id] = entry.at("experiment").get<std::string>();
      if (!features_by_id.emplace(f.case_id, std::move(f)).second) {
        throw DataError("meta.json lists case '" + entry.at("id").get<std::string>() +
                        "' twice");
      }
    }
  } catch (const json::exception& ex) {
    throw DataError("meta.json cases: " + std::string(ex.what()));
  }

  std::vector<std::string> missing, extra;
  for (const auto& c : matrix.case_ids()) {
    if (!features_by_id.count(c)) missing.push_back(c);
  }
  for (const auto& [id, f] : features_by_id) {
    (void)f;
    if (!matrix.case_index(id)) extra.push_back(id);
  }
  if (!missing.empty() || !extra.empty()) {
    std::string msg = "case ids disagree between matrix.csv and meta.json:";
    for (const auto& c : missing) msg += " matrix case '" + c + "' has no metadata;";
    for (const auto& c : extra) msg += " metadata case '" + c + "' is not in the matrix;";
    throw DataError(msg);
  }

  std::vector<CaseFeatures> features;
  features.reserve(matrix.n_cases());
  for (const auto& c : matrix.case_ids()) {
    features.push_back(features_by_id.at(c));
    assignments_by_matrix_order.emplace_back(c, experiment_of.at(c));
  }

  ExperimentMap experiments = [&] {
    try {
      if (meta.contains("experiments")) {
        return ExperimentMap::with_order(assignments_by_matrix_order,
                                         meta.at("experiments").get<std::vector<std::string>>());
      }
      return ExperimentMap(assignments_by_matrix_order);
    } catch (const json::exception& ex) {
      throw DataError("meta.json experiments: " + std::string(ex.what()));
    } catch (const std::invalid_argument& ex) {
      throw DataError("meta.json experiments: " + std::string(ex.what()));
    }
  }();

  std::optional<std::string> reference;
  if (meta.contains("reference_item") && !meta.at("reference_item").is_null()) {
    reference = meta.at("reference_item").get<std::string>();
    if (!matrix.item_index(*reference)) {
      throw DataError("reference item '" + *reference + "' is not in the matrix");
    }
  }

  // Encoding must work for every case; surfaces unlisted options and
  // missing values at load time rather than mid-run.
  for (const auto& f : features) encode_case(f, schema);

  return DatasetBundle{std::move(matrix), std::move(features), std::move(schema),
                       std::move(experiments), std::move(reference)};
}

void save_bundle(const DatasetBundle& bundle, const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path base(dir);
  std::error_code ec;
  fs::create_directories(base, ec);
  if (ec) throw DataError("cannot create directory '" + dir + "': " + ec.message());

  save_matrix_csv(bundle.matrix, (base / "matrix.csv").string());

  json cases = json::array();
  for (const auto& f : bundle.features) {
    json entry{{"id", f.case_id}, {"experiment", bundle.experiments.experiment_of(f.case_id)}};
    entry["continuous"] = json::object();
    for (const auto& [name, v] : f.continuous_values) entry["continuous"][name] = v;
    entry["categorical"] = json::object();
    for (const auto& [name, v] : f.categorical_values) entry["categorical"][name] = v;
    cases.push_back(std::move(entry));
  }
  json meta{{"schema", schema_to_json(bundle.schema)},
            {"experiments", bundle.experiments.experiment_ids()},
            {"cases", cases}};
  if (bundle.reference_item) meta["reference_item"] = *bundle.reference_item;
  write_text_file((base / "meta.json").string(), dump(meta));
}

void SynthConfig::validate() const {
  if (!n_items || !n_cases || !n_experiments || !n_clusters || !latent_rank) {
    throw DataError("synthetic config counts must be positive");
  }
  if (n_clusters > n_experiments) {
    throw DataError("cannot split " + std::to_string(n_experiments) + " experiments into " +
                    std::to_string(n_clusters) + " clusters");
  }
  if (n_experiments > n_cases) {
    throw DataError("more experiments than cases");
  }
  if (n_clusters > n_items) {
    throw DataError("each cluster needs its own best item; got " + std::to_string(n_items) +
                    " items for " + std::to_string(n_clusters) + " clusters");
  }
  if (latent_rank > std::min(n_items, n_cases)) {
    throw DataError("latent rank exceeds the matrix dimensions");
  }
  if (!(noise_sd >= 0.0)) throw DataError("noise_sd must be non-negative");
  if (!(cluster_separation > 0.0)) throw DataError("cluster_separation must be positive");
  if (n_categorical + n_continuous == 0) throw DataError("at least one feature is required");
  if (!(sparsity_preview >= 0.0 && sparsity_preview < 1.0)) {
    throw DataError("sparsity_preview outside [0,1)");
  }
}

SynthResult generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.rng_seed, "synth"));

  std::vector<std::string> item_ids, case_ids, experiment_ids;
  for (std::size_t i = 0; i < cfg.n_items; ++i) item_ids.push_back(padded_id("M", i, cfg.n_items));
  for (std::size_t c = 0; c < cfg.n_cases; ++c) case_ids.push_back(padded_id("C", c, cfg.n_cases));
  for (std::size_t e = 0; e < cfg.n_experiments; ++e) {
    experiment_ids.push_back(padded_id("E", e, cfg.n_experiments));
  }

  SynthManifest manifest;
  std::vector<std::size_t> case_cluster(cfg.n_cases);
  std::vector<std::pair<std::string, std::string>> assignments;
  for (std::size_t c = 0; c < cfg.n_cases; ++c) {
    const std::size_t e = c * cfg.n_experiments / cfg.n_cases;
    const std::size_t g = e * cfg.n_clusters / cfg.n_experiments;
    case_cluster[c] = g;
    assignments.emplace_back(case_ids[c], experiment_ids[e]);
    manifest.case_cluster[case_ids[c]] = g;
  }
  for (std::size_t e = 0; e < cfg.n_experiments; ++e) {
    manifest.experiment_cluster[experiment_ids[e]] = e * cfg.n_clusters / cfg.n_experiments;
  }
  ExperimentMap em = ExperimentMap::with_order(assignments, experiment_ids);

  std::vector<ContinuousFeature> cont;
  for (std::size_t a = 0; a < cfg.n_continuous; ++a) {
    cont.push_back({"x" + std::to_string(a), 0.0, 1.0});
  }
  std::vector<CategoricalFeature> cat;
  std::vector<std::string> options;
  // A valid schema needs two options even when one cluster uses just one.
  for (std::size_t g = 0; g < std::max<std::size_t>(cfg.n_clusters, 2); ++g) {
    options.push_back("g" + std::to_string(g));
  }
  for (std::size_t a = 0; a < cfg.n_categorical; ++a) {
    cat.push_back({"cat" + std::to_string(a), options});
  }
  FeatureSchema schema(std::move(cont), std::move(cat));

  // Per-axis cluster centres are a rotated lattice; the jitter half-width
  // keeps every within-cluster distance below every between-cluster one
  // for any positive separation.
  const double half_width =
      0.5 / (static_cast<double>(cfg.n_clusters) * (2.0 + cfg.cluster_separation));
  std::vector<CaseFeatures> features;
  for (std::size_t c = 0; c < cfg.n_cases; ++c) {
    CaseFeatures f;
    f.case_id = case_ids[c];
    const std::size_t g = case_cluster[c];
    for (std::size_t a = 0; a < cfg.n_continuous; ++a) {
      const double centre =
          (static_cast<double>((g + a) % cfg.n_clusters) + 0.5) / cfg.n_clusters;
      f.continuous_values["x" + std::to_string(a)] =
          centre + (2.0 * rng.unit_double() - 1.0) * half_width;
    }
    for (std::size_t a = 0; a < cfg.n_categorical; ++a) {
      f.categorical_values["cat" + std::to_string(a)] = options[g];
    }
    features.push_back(std::move(f));
  }

  // Latent factors: free-sign item loadings. With several clusters each
  // cluster owns a latent axis and its case loadings sit on that axis with
  // positive strength plus a small off-axis jitter, so the item order is
  // consistent across a cluster's columns and recoverable by a low-rank
  // fit. A single cluster keeps unstructured positive loadings, and the
  // positive slopes make the per-column squash order preserving.
  std::vector<std::vector<double>> U(cfg.n_items, std::vector<double>(cfg.latent_rank));
  std::vector<std::vector<double>> V(cfg.n_cases, std::vector<double>(cfg.latent_rank));
  for (auto& row : U) {
    for (auto& u : row) u = rng.normal() / std::sqrt(static_cast<double>(cfg.latent_rank));
  }
  for (std::size_t c = 0; c < cfg.n_cases; ++c) {
    if (cfg.n_clusters <= 1) {
      for (auto& v : V[c]) v = 0.2 + 0.8 * rng.unit_double();
      continue;
    }
    const std::size_t axis = case_cluster[c] % cfg.latent_rank;
    for (std::size_t k = 0; k < cfg.latent_rank; ++k) {
      V[c][k] = k == axis ? 0.2 + 0.8 * rng.unit_double()
                          : 0.05 * (2.0 * rng.unit_double() - 1.0);
    }
  }
  for (std::size_t c = 0; c < cfg.n_cases; ++c) {
    manifest.column_slopes.push_back(1.5 + 2.5 * rng.unit_double());
  }

  std::vector<double> noise(cfg.n_items * cfg.n_cases, 0.0);
  if (cfg.noise_sd > 0.0) {
    for (auto& n : noise) n = cfg.noise_sd * rng.normal();
  }
  std::vector<std::optional<double>> values(cfg.n_items * cfg.n_cases);
  auto fill_values = [&] {
    for (std::size_t i = 0; i < cfg.n_items; ++i) {
      for (std::size_t c = 0; c < cfg.n_cases; ++c) {
        double latent = 0.0;
        for (std::size_t k = 0; k < cfg.latent_rank; ++k) latent += U[i][k] * V[c][k];
        const double squashed = 1.0 / (1.0 + std::exp(-manifest.column_slopes[c] * latent));
        double p = 0.05 + 0.8 * squashed;
        if (cfg.noise_sd > 0.0) {
          p = std::clamp(p + noise[i * cfg.n_cases + c], 0.0, 0.9);
        }
        values[i * cfg.n_cases + c] = p;
      }
    }
  };
  fill_values();

  auto column_argmax = [&](std::size_t c) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < cfg.n_items; ++i) {
      if (*values[i * cfg.n_cases + c] > *values[best * cfg.n_cases + c]) best = i;
    }
    return best;
  };

  // Designate each cluster's best item as its most frequent natural
  // argmax, kept distinct across clusters. A single cluster keeps the
  // natural structure untouched; with several clusters the designated
  // item is imposed with a margin above the default relevance threshold.
  std::vector<std::size_t> cluster_best(cfg.n_clusters);
  std::set<std::size_t> taken;
  for (std::size_t g = 0; g < cfg.n_clusters; ++g) {
    std::vector<std::size_t> freq(cfg.n_items, 0);
    for (std::size_t c = 0; c < cfg.n_cases; ++c) {
      if (case_cluster[c] == g) ++freq[column_argmax(c)];
    }
    std::size_t best = cfg.n_items;
    for (std::size_t i = 0; i < cfg.n_items; ++i) {
      if (taken.count(i)) continue;
      if (best == cfg.n_items || freq[i] > freq[best]) best = i;
    }
    cluster_best[g] = best;
    taken.insert(best);
    manifest.cluster_best_item.push_back(item_ids[best]);
  }
  if (cfg.n_clusters > 1) {
    // Lift each designated item to the top of its cluster's axis so the
    // cluster optimum is part of the low-rank structure itself rather
    // than a pointwise exception; completion models can then restore it
    // from partial observations instead of fighting it.
    for (std::size_t g = 0; g < cfg.n_clusters; ++g) {
      const std::size_t axis = g % cfg.latent_rank;
      const std::size_t best = cluster_best[g];
      double top = std::numeric_limits<double>::lowest();
      for (std::size_t i = 0; i < cfg.n_items; ++i) {
        if (i != best) top = std::max(top, U[i][axis]);
      }
      U[best][axis] = std::max(U[best][axis], top + 0.8);
    }
    fill_values();
  }
  if (cfg.n_clusters > 1) {
    // The margin must clear the relevance threshold with room to spare:
    // it is what keeps the cluster optimum recoverable through sparse
    // neighbour averaging, so it cannot be of the same order as the
    // imputation noise.
    constexpr double kMargin = 0.12;
    constexpr double kCeiling = 0.98;
    for (std::size_t c = 0; c < cfg.n_cases; ++c) {
      const std::size_t best = cluster_best[case_cluster[c]];
      double other_max = 0.0;
      for (std::size_t i = 0; i < cfg.n_items; ++i) {
        if (i != best) other_max = std::max(other_max, *values[i * cfg.n_cases + c]);
      }
      if (other_max + kMargin > kCeiling && other_max > 0.0) {
        const double scale = (kCeiling - kMargin) / other_max;
        for (std::size_t i = 0; i < cfg.n_items; ++i) {
          if (i != best) *values[i * cfg.n_cases + c] *= scale;
        }
        other_max = kCeiling - kMargin;
      }
      auto& cell = values[best * cfg.n_cases + c];
      if (*cell < other_max + kMargin) cell = std::min(other_max + kMargin, kCeiling);
    }
  }

  PerformanceMatrix matrix(item_ids, case_ids, std::move(values));
  std::optional<std::string> reference = mc_popularity_item(matrix, em);
  if (cfg.sparsity_preview > 0.0) {
    matrix = sparsify(matrix, cfg.sparsity_preview, derive_seed(cfg.rng_seed, "preview"));
  }

  DatasetBundle bundle{std::move(matrix), std::move(features), std::move(schema), std::move(em),
                       std::move(reference)};
  return SynthResult{std::move(bundle), std::move(manifest)};
}

RunConfig RunConfig::from_json_text(const std::string& text) {
  const json j = parse_json(text, "run config");
  RunConfig rc;
  CVConfig& cv = rc.cv;
  reject_unknown_keys(j,
                      {"sparsity_levels", "n_realisations", "rng_seed", "completion", "grid",
                       "relevance_threshold", "selection_metric", "popularity_mode",
                       "reference_item", "threads"},
                      "run config");
  try {
    if (j.contains("sparsity_levels")) {
      cv.sparsity_levels = j.at("sparsity_levels").get<std::vector<double>>();
    }
    if (j.contains("n_realisations")) cv.n_realisations = j.at("n_realisations").get<std::size_t>();
    if (j.contains("rng_seed")) cv.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    if (j.contains("relevance_threshold")) {
      cv.relevance_threshold = j.at("relevance_threshold").get<double>();
    }
    if (j.contains("selection_metric")) {
      cv.selection_metric = j.at("selection_metric").get<std::string>();
    }
    if (j.contains("threads")) cv.threads = j.at("threads").get<std::size_t>();
    if (j.contains("reference_item") && !j.at("reference_item").is_null()) {
      cv.reference_item = j.at("reference_item").get<std::string>();
    }
    if (j.contains("popularity_mode")) {
      const auto mode = j.at("popularity_mode").get<std::string>();
      if (mode == "experiment_balanced") {
        cv.popularity_mode = PopularityMode::kExperimentBalanced;
      } else if (mode == "flat") {
        cv.popularity_mode = PopularityMode::kFlat;
      } else {
        throw DataError("unknown popularity_mode '" + mode + "'");
      }
    }
    if (j.contains("completion")) {
      const json& c = j.at("completion");
      reject_unknown_keys(
          c, {"method", "rank", "max_iterations", "tolerance", "lambda", "rng_seed"},
          "completion config");
      if (c.contains("method")) {
        cv.completion.method = parse_completion_method(c.at("method").get<std::string>());
      }
      if (c.contains("rank")) cv.completion.rank = c.at("rank").get<int>();
      if (c.contains("max_iterations")) {
        cv.completion.max_iterations = c.at("max_iterations").get<int>();
      }
      if (c.contains("tolerance")) cv.completion.tolerance = c.at("tolerance").get<double>();
      if (c.contains("lambda") && !c.at("lambda").is_null()) {
        cv.completion.lambda = c.at("lambda").get<double>();
      }
      if (c.contains("rng_seed")) cv.completion.rng_seed = c.at("rng_seed").get<std::uint64_t>();
    }
    if (j.contains("grid")) {
      const json& g = j.at("grid");
      reject_unknown_keys(g, {"metrics", "k_values"}, "grid config");
      if (g.contains("metrics")) {
        cv.grid.metrics.clear();
        for (const auto& name : g.at("metrics")) {
          cv.grid.metrics.push_back(parse_metric(name.get<std::string>()));
        }
      }
      if (g.contains("k_values")) {
        cv.grid.k_values = g.at("k_values").get<std::vector<std::size_t>>();
      }
    }
  } catch (const json::exception& ex) {
    throw DataError("run config: " + std::string(ex.what()));
  }
  cv.validate();
  return rc;
}

RunConfig RunConfig::from_file(const std::string& path) {
  return from_json_text(read_text_file(path));
}

void save_report(const CVReport& report, const CVConfig& cfg, const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path base(dir);
  std::error_code ec;
  fs::create_directories(base, ec);
  if (ec) throw DataError("cannot create directory '" + dir + "': " + ec.message());

  std::string cells = "sparsity,realisation,experiment,method,chosen_metric,chosen_k,rr1,rr3,regret\n";
  for (const auto& cell : report.cells) {
    for (const auto& [method, score] : cell.methods) {
      cells += format_double(cell.sparsity) + "," + std::to_string(cell.realisation) + "," +
               cell.experiment + "," + method + ",";
      if (method == "rs") {
        cells += metric_name(cell.chosen_metric) + "," + std::to_string(cell.chosen_k);
      } else {
        cells += ",";
      }
      cells += "," + format_double(score.rr1) + "," + format_double(score.rr3) + "," +
               format_double(score.regret) + "\n";
    }
  }
  write_text_file((base / "cells.csv").string(), cells);

  std::string agg =
      "sparsity,method,mrr1,mrr1_lo,mrr1_hi,mrr3,mrr3_lo,mrr3_hi,regret,regret_lo,regret_hi\n";
  for (const auto& a : report.aggregates) {
    agg += (a.sparsity ? format_double(*a.sparsity) : std::string()) + "," + a.method + "," +
           interval_cells(a.mrr1) + "," + interval_cells(a.mrr3) + "," +
           interval_cells(a.regret) + "\n";
  }
  write_text_file((base / "aggregate.csv").string(), agg);

  std::string per =
      "sparsity,experiment,chosen_metric,chosen_k,rr1,rr1_lo,rr1_hi,rr3,rr3_lo,rr3_hi\n";
  for (const auto& s : report.per_experiment) {
    per += format_double(s.sparsity) + "," + s.experiment + "," + metric_name(s.modal_metric) +
           "," + std::to_string(s.modal_k) + "," + interval_cells(s.rr1) + "," +
           interval_cells(s.rr3) + "\n";
  }
  write_text_file((base / "per_experiment.csv").string(), per);

  json grid{{"metrics", json::array()}, {"k_values", cfg.grid.k_values}};
  for (Metric m : cfg.grid.metrics) grid["metrics"].push_back(metric_name(m));
  json config{{"sparsity_levels", cfg.sparsity_levels},
              {"n_realisations", cfg.n_realisations},
              {"rng_seed", cfg.rng_seed},
              {"completion", completion_to_json(cfg.completion)},
              {"grid", grid},
              {"grid_size", cfg.grid.size()},
              {"relevance_threshold", cfg.relevance_threshold},
              {"selection_metric", cfg.selection_metric},
              {"popularity_mode", cfg.popularity_mode == PopularityMode::kFlat
                                      ? "flat"
                                      : "experiment_balanced"},
              {"threads", cfg.threads}};
  config["reference_item"] = cfg.reference_item ? json(*cfg.reference_item) : json(nullptr);
  json manifest{{"version", kVersion},
                {"config", config},
                {"leakage_audit_passed", report.leakage_audit_passed},
                {"n_cells", report.cells.size()},
                {"warnings", report.warnings}};
  write_text_file((base / "manifest.json").string(), dump(manifest));
}

std::string synth_manifest_json(const SynthConfig& cfg, const SynthManifest& manifest) {
  json config{{"n_items", cfg.n_items},
              {"n_cases", cfg.n_cases},
              {"n_experiments", cfg.n_experiments},
              {"n_clusters", cfg.n_clusters},
              {"latent_rank", cfg.latent_rank},
              {"noise_sd", cfg.noise_sd},
              {"cluster_separation", cfg.cluster_separation},
              {"n_categorical", cfg.n_categorical},
              {"n_continuous", cfg.n_continuous},
              {"sparsity_preview", cfg.sparsity_preview},
              {"rng_seed", cfg.rng_seed}};
  json j{{"version", kVersion},
         {"config", config},
         {"cluster_best_item", manifest.cluster_best_item},
         {"case_cluster", manifest.case_cluster},
         {"experiment_cluster", manifest.experiment_cluster},
         {"column_slopes", manifest.column_slopes}};
  return dump(j);
}

}  // namespace cmrec
