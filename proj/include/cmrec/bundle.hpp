#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cmrec/features.hpp"
#include "cmrec/matrix.hpp"
#include "cmrec/protocol.hpp"

namespace cmrec {

inline constexpr const char* kVersion = "0.1.0";

/// On-disk dataset: matrix.csv plus meta.json in one directory. Case ids
/// are consistent across the matrix, the feature table, and the
/// experiment map; features follow matrix column order.
struct DatasetBundle {
  PerformanceMatrix matrix;
  std::vector<CaseFeatures> features;
  FeatureSchema schema;
  ExperimentMap experiments;
  std::optional<std::string> reference_item;
};

/// Expects dir/matrix.csv and dir/meta.json. Cross-validates ids and
/// value ranges; DataError lists every offending id.
DatasetBundle load_bundle(const std::string& dir);

/// Writes dir/matrix.csv and dir/meta.json, creating dir if needed.
/// Loading the result reproduces the bundle exactly.
void save_bundle(const DatasetBundle& bundle, const std::string& dir);

struct SynthConfig {
  std::size_t n_items = 12;
  std::size_t n_cases = 24;
  std::size_t n_experiments = 6;
  std::size_t n_clusters = 2;
  std::size_t latent_rank = 2;
  double noise_sd = 0.0;
  /// Margin knob: any positive value keeps every within-cluster feature
  /// distance strictly below every between-cluster one.
  double cluster_separation = 4.0;
  std::size_t n_categorical = 1;
  std::size_t n_continuous = 2;
  /// Fraction of entries hidden in the saved matrix; ground truth stays
  /// recoverable through the manifest. 0 keeps the matrix fully observed.
  double sparsity_preview = 0.0;
  std::uint64_t rng_seed = 1;

  void validate() const;
};

/// What the generator promised: the designated argmax item per cluster
/// and the cluster of every case and experiment.
struct SynthManifest {
  std::vector<std::string> cluster_best_item;
  std::map<std::string, std::size_t> case_cluster;
  std::map<std::string, std::size_t> experiment_cluster;
  std::vector<double> column_slopes;
};

struct SynthResult {
  DatasetBundle bundle;
  SynthManifest manifest;
};

/// Clustered low-rank synthetic data. Cases partition into experiments,
/// experiments into clusters; features separate the clusters by
/// construction; performance is a per-column logistic squash of a
/// rank-latent_rank factor model plus optional noise. With one cluster
/// the best item emerges from the latent structure (argmax-preserving
/// squash); with several, each cluster's designated best item is imposed
/// with a margin above the default relevance threshold. Deterministic per
/// seed.
SynthResult generate_synthetic(const SynthConfig& cfg);

/// CVConfig plus the bundle-independent run knobs, parseable from a JSON
/// config file. Unknown keys are rejected.
struct RunConfig {
  CVConfig cv;

  static RunConfig from_json_text(const std::string& text);
  static RunConfig from_file(const std::string& path);
};

/// Writes cells.csv, aggregate.csv, per_experiment.csv, and manifest.json
/// into dir. Byte-stable for identical report and config.
void save_report(const CVReport& report, const CVConfig& cfg, const std::string& dir);

std::string synth_manifest_json(const SynthConfig& cfg, const SynthManifest& manifest);

}  // namespace cmrec
