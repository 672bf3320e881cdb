#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cmrec {

struct CategoricalFeature {
  std::string name;
  std::vector<std::string> options;
};

struct ContinuousFeature {
  std::string name;
  double min = 0.0;
  double max = 1.0;
};

/// Ordered mixed-feature schema. Order is load-bearing: it fixes the
/// encoded vector layout, continuous block first.
class FeatureSchema {
 public:
  FeatureSchema(std::vector<ContinuousFeature> continuous,
                std::vector<CategoricalFeature> categorical);

  const std::vector<ContinuousFeature>& continuous() const { return continuous_; }
  const std::vector<CategoricalFeature>& categorical() const { return categorical_; }

  std::size_t encoded_size() const;

 private:
  std::vector<ContinuousFeature> continuous_;
  std::vector<CategoricalFeature> categorical_;
};

/// Raw (pre-encoding) feature values of one case, in physical units.
struct CaseFeatures {
  std::string case_id;
  std::map<std::string, double> continuous_values;
  std::map<std::string, std::string> categorical_values;
};

struct EncodedComponent {
  std::string feature;
  std::string option;  // empty for a continuous scalar
};

struct EncodedVector {
  std::vector<double> values;
  std::vector<EncodedComponent> layout;
};

enum class Metric { kEuclidean, kCosine, kGower };

Metric parse_metric(std::string_view name);
std::string metric_name(Metric m);

/// [scaled continuous, schema order] ++ [one-hot blocks, schema order].
/// Continuous values are min-max scaled by the schema bounds; out-of-range
/// inputs clamp to [0,1] with a warning on stderr. Throws DataError for a
/// missing value or an unlisted option.
EncodedVector encode_case(const CaseFeatures& f, const FeatureSchema& s);

/// Euclidean or cosine distance between already-encoded vectors. Gower is
/// defined on raw features only and is rejected here.
double encoded_distance(const EncodedVector& a, const EncodedVector& b, Metric metric);

/// Case-level distance. Euclidean and cosine encode first; gower averages
/// per-feature distances over the raw mixed features.
double distance(const CaseFeatures& a, const CaseFeatures& b, Metric metric,
                const FeatureSchema& s);

/// The min(k, |candidates|) nearest candidates, ascending by distance,
/// ties broken by case_id lexical order. Throws std::invalid_argument for
/// k = 0 or an empty candidate list.
std::vector<std::pair<std::string, double>> nearest_neighbors(
    const CaseFeatures& q, const std::vector<CaseFeatures>& candidates, std::size_t k,
    Metric metric, const FeatureSchema& s);

}  // namespace cmrec
