#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "halrm/text/tfidf.hpp"

namespace halrm::store {
class VulnStore;
}

namespace halrm::clustering {

enum class FeatureKind { BagOfWords, Embedding };

std::string to_string(FeatureKind kind);

struct FeatureMatrix {
  std::vector<std::string> ids;
  std::vector<text::SparseVector> rows;
  std::size_t dimension = 0;
  FeatureKind kind = FeatureKind::BagOfWords;

  std::size_t size() const { return ids.size(); }
  // Throws ValidationError on a row/id count mismatch or non-finite entries.
  void validate() const;
};

using Document = std::pair<std::string, std::string>;  // (id, description)

FeatureMatrix featurize_bow(const std::vector<Document>& corpus,
                            text::TfidfOptions options = {});

// One {"id": ..., "vector": [...]} object per line. Blank lines are skipped.
FeatureMatrix load_embeddings(const std::filesystem::path& path);
FeatureMatrix parse_embeddings(std::istream& in);

// Cosine distance in [0, 2]; a zero row is at distance 1 from everything.
double cosine_distance(const text::SparseVector& a, const text::SparseVector& b);

// Condensed upper-triangular pairwise cosine distances.
class DistanceMatrix {
 public:
  explicit DistanceMatrix(const FeatureMatrix& m, unsigned threads = 0);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const {
    if (i == j) return 0.0;
    if (i > j) std::swap(i, j);
    return d_[i * n_ - i * (i + 1) / 2 + (j - i - 1)];
  }
  const std::vector<double>& condensed() const { return d_; }

 private:
  std::size_t n_;
  std::vector<double> d_;
};

// Linear-interpolated percentile (q in [0, 1]) over all pairwise distances.
double pairwise_percentile(const DistanceMatrix& d, double q);

constexpr std::size_t kDefaultMinSamples = 5;
constexpr double kDefaultXi = 0.05;
constexpr double kDefaultEpsPercentile = 0.10;

struct ClusterAssignment {
  std::vector<std::string> ids;
  std::vector<int> labels;  // aligned with ids, -1 is noise
  nlohmann::json params;

  std::optional<int> label_of(const std::string& id) const;
  std::map<std::string, int> as_map() const;
  std::size_t cluster_count() const;
  std::size_t noise_count() const;
};

// Labels are renumbered by first appearance in input order, so equal
// partitions of the same input compare equal.
std::vector<int> canonical_labels(const std::vector<int>& labels);

struct DbscanParams {
  double eps = 0.0;  // <= 0 selects the 10th-percentile pairwise distance
  std::size_t min_samples = kDefaultMinSamples;
};

ClusterAssignment cluster_dbscan(const FeatureMatrix& m, DbscanParams params = {});
std::vector<int> dbscan_labels(const DistanceMatrix& d, double eps, std::size_t min_samples);

struct OpticsParams {
  std::size_t min_samples = kDefaultMinSamples;
  double xi = kDefaultXi;
  // 0 falls back to min_samples.
  std::size_t min_cluster_size = 0;
};

struct OpticsResult {
  std::vector<std::size_t> ordering;
  std::vector<double> reachability;  // indexed by point, inf when undefined
  std::vector<double> core_distance;
  std::vector<std::ptrdiff_t> predecessor;
  std::vector<int> labels;
};

ClusterAssignment cluster_optics(const FeatureMatrix& m, OpticsParams params = {});
OpticsResult optics(const DistanceMatrix& d, const OpticsParams& params);

struct AssignReport {
  std::size_t updated = 0;  // records that now carry a non-noise label
  std::size_t cleared = 0;
  std::vector<std::string> unknown_ids;
};

AssignReport assign_clusters(store::VulnStore& store, const ClusterAssignment& assignment);

void write_assignment_csv(std::ostream& out, const ClusterAssignment& assignment);
void write_assignment_csv(const std::filesystem::path& path, const ClusterAssignment& assignment);
ClusterAssignment read_assignment_csv(std::istream& in);

}  // namespace halrm::clustering
