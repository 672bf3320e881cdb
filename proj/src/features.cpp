#include "cmrec/features.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>
#include <unordered_set>

#include "cmrec/errors.hpp"

namespace cmrec {

FeatureSchema::FeatureSchema(std::vector<ContinuousFeature> continuous,
                             std::vector<CategoricalFeature> categorical)
    : continuous_(std::move(continuous)), categorical_(std::move(categorical)) {
  std::unordered_set<std::string> names;
  for (const auto& f : continuous_) {
    if (!names.insert(f.name).second) {
      throw DataError("schema: duplicate feature name '" + f.name + "'");
    }
    if (!(f.min < f.max)) {
      throw DataError("schema: feature '" + f.name + "' needs min < max");
    }
  }
  for (const auto& f : categorical_) {
    if (!names.insert(f.name).second) {
      throw DataError("schema: duplicate feature name '" + f.name + "'");
    }
    if (f.options.size() < 2) {
      throw DataError("schema: categorical '" + f.name + "' needs at least 2 options");
    }
    std::unordered_set<std::string> opts(f.options.begin(), f.options.end());
    if (opts.size() != f.options.size()) {
      throw DataError("schema: categorical '" + f.name + "' has duplicate options");
    }
  }
}

std::size_t FeatureSchema::encoded_size() const {
  std::size_t n = continuous_.size();
  for (const auto& f : categorical_) n += f.options.size();
  return n;
}

Metric parse_metric(std::string_view name) {
  if (name == "euclidean") return Metric::kEuclidean;
  if (name == "cosine") return Metric::kCosine;
  if (name == "gower") return Metric::kGower;
  throw DataError("unknown metric '" + std::string(name) + "'");
}

std::string metric_name(Metric m) {
  switch (m) {
    case Metric::kEuclidean: return "euclidean";
    case Metric::kCosine: return "cosine";
    case Metric::kGower: return "gower";
  }
  throw std::logic_error("metric_name: bad enum");
}

EncodedVector encode_case(const CaseFeatures& f, const FeatureSchema& s) {
  EncodedVector out;
  out.values.reserve(s.encoded_size());
  out.layout.reserve(s.encoded_size());
  for (const auto& cf : s.continuous()) {
    auto it = f.continuous_values.find(cf.name);
    if (it == f.continuous_values.end()) {
      throw DataError("case '" + f.case_id + "': missing continuous feature '" + cf.name + "'");
    }
    const double raw = it->second;
    if (!std::isfinite(raw)) {
      throw DataError("case '" + f.case_id + "': non-finite value for '" + cf.name + "'");
    }
    double scaled = (raw - cf.min) / (cf.max - cf.min);
    if (scaled < 0.0 || scaled > 1.0) {
      std::cerr << "warning: case '" << f.case_id << "' feature '" << cf.name << "' value " << raw
                << " outside schema range [" << cf.min << ", " << cf.max << "], clamping\n";
      scaled = std::clamp(scaled, 0.0, 1.0);
    }
    out.values.push_back(scaled);
    out.layout.push_back({cf.name, ""});
  }
  for (const auto& kf : s.categorical()) {
    auto it = f.categorical_values.find(kf.name);
    if (it == f.categorical_values.end()) {
      throw DataError("case '" + f.case_id + "': missing categorical feature '" + kf.name + "'");
    }
    const std::string& chosen = it->second;
    bool found = false;
    for (const auto& opt : kf.options) {
      const bool hit = (opt == chosen);
      out.values.push_back(hit ? 1.0 : 0.0);
      out.layout.push_back({kf.name, opt});
      found = found || hit;
    }
    if (!found) {
      throw DataError("case '" + f.case_id + "': option '" + chosen + "' not listed for '" +
                      kf.name + "'");
    }
  }
  return out;
}

namespace {

void require_same_layout(const EncodedVector& a, const EncodedVector& b) {
  if (a.values.size() != b.values.size()) {
    throw DataError("encoded vectors differ in length");
  }
}

double euclidean_of(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double cosine_of(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 && nb == 0.0) {
    throw DataError("cosine distance undefined for two zero vectors");
  }
  // One zero vector: no directional information, maximal orthogonality.
  if (na == 0.0 || nb == 0.0) return 1.0;
  const double c = 1.0 - dot / std::sqrt(na * nb);
  return std::clamp(c, 0.0, 2.0);
}

}  // namespace

double encoded_distance(const EncodedVector& a, const EncodedVector& b, Metric metric) {
  require_same_layout(a, b);
  switch (metric) {
    case Metric::kEuclidean: return euclidean_of(a.values, b.values);
    case Metric::kCosine: return cosine_of(a.values, b.values);
    case Metric::kGower:
      throw std::invalid_argument("gower distance needs raw features, not encoded vectors");
  }
  throw std::logic_error("encoded_distance: bad enum");
}

double distance(const CaseFeatures& a, const CaseFeatures& b, Metric metric,
                const FeatureSchema& s) {
  if (metric != Metric::kGower) {
    return encoded_distance(encode_case(a, s), encode_case(b, s), metric);
  }
  const std::size_t n_features = s.continuous().size() + s.categorical().size();
  if (n_features == 0) throw DataError("gower distance undefined for an empty schema");
  double total = 0.0;
  for (const auto& cf : s.continuous()) {
    auto ia = a.continuous_values.find(cf.name);
    auto ib = b.continuous_values.find(cf.name);
    if (ia == a.continuous_values.end() || ib == b.continuous_values.end()) {
      throw DataError("gower: missing continuous feature '" + cf.name + "'");
    }
    const double d = std::abs(ia->second - ib->second) / (cf.max - cf.min);
    total += std::clamp(d, 0.0, 1.0);
  }
  for (const auto& kf : s.categorical()) {
    auto ia = a.categorical_values.find(kf.name);
    auto ib = b.categorical_values.find(kf.name);
    if (ia == a.categorical_values.end() || ib == b.categorical_values.end()) {
      throw DataError("gower: missing categorical feature '" + kf.name + "'");
    }
    total += (ia->second == ib->second) ? 0.0 : 1.0;
  }
  return total / static_cast<double>(n_features);
}

std::vector<std::pair<std::string, double>> nearest_neighbors(
    const CaseFeatures& q, const std::vector<CaseFeatures>& candidates, std::size_t k,
    Metric metric, const FeatureSchema& s) {
  if (k == 0) throw std::invalid_argument("nearest_neighbors: k must be at least 1");
  if (candidates.empty()) throw std::invalid_argument("nearest_neighbors: no candidates");
  std::vector<std::pair<std::string, double>> all;
  all.reserve(candidates.size());
  for (const auto& c : candidates) {
    all.emplace_back(c.case_id, distance(q, c, metric, s));
  }
  std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) {
    if (x.second != y.second) return x.second < y.second;
    return x.first < y.first;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

}  // namespace cmrec
