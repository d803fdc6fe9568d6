#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "halrm/core/errors.hpp"
#include "halrm/scoring/score.hpp"
#include "halrm/store/profiles.hpp"

namespace halrm::configurator {

using store::NodeProfile;

using ScoreMap = std::unordered_map<std::string, double>;
// Non-noise cluster labels only; an id absent from the map is a singleton.
using ClusterMap = std::unordered_map<std::string, int>;

ClusterMap clusters_from_records(const std::vector<store::VulnRecord>& records);

class UnscoredCve : public DataError {
 public:
  explicit UnscoredCve(const std::string& cve_id);
  const std::string& cve_id() const noexcept { return id_; }

 private:
  std::string id_;
};

struct ScoreTable {
  ScoreMap hal;
  ScoreMap lazarus;
  ScoreMap epss;
  std::vector<std::string> missing;  // records without any usable base score
};

ScoreTable build_score_table(const std::vector<store::VulnRecord>& records, const scoring::ScoringConfig& cfg);

// Lexicographic k-combinations of {0, ..., n-1}, produced one at a time.
class Combinations {
 public:
  Combinations(std::size_t n, std::size_t k);
  // Writes the next combination; false once all have been produced.
  bool next(std::vector<std::size_t>& out);
  std::uint64_t total() const { return total_; }

 private:
  std::size_t n_, k_;
  std::vector<std::size_t> cur_;
  bool started_ = false;
  bool done_ = false;
  std::uint64_t total_;
};

std::uint64_t binomial(std::size_t n, std::size_t k);

struct Configuration {
  std::vector<std::size_t> members;  // indices into the pool, ascending
  std::vector<std::string> names;    // node names, sorted
  double security_risk = 0.0;
  double resilience_risk = 0.0;

  friend bool operator==(const Configuration&, const Configuration&) = default;
};

// Streams every n-node configuration of the pool, risks left at zero.
// Throws ValidationError unless 1 <= n <= pool size.
void enumerate_configs(const std::vector<NodeProfile>& pool, std::size_t n,
                       const std::function<void(const Configuration&)>& visit);

// (a ∩ b) ∪ {v in a ∪ b whose cluster label occurs on both sides}; sorted.
std::vector<std::string> shared_vulns(const NodeProfile& a, const NodeProfile& b, const ClusterMap& clusters);

double security_risk(const std::vector<NodeProfile>& nodes, const ScoreMap& scores);
double resilience_risk(const std::vector<NodeProfile>& nodes, const ScoreMap& scores, const ClusterMap& clusters);

enum class Policy { ResilienceFirst, SecurityFirst };

std::string to_string(Policy p);
Policy parse_policy(const std::string& s);

// Strict total order: the policy's primary risk, the other risk, then names.
bool ranks_before(const Configuration& a, const Configuration& b, Policy policy);

struct RecommendOptions {
  unsigned threads = 0;  // 0 = hardware concurrency
  std::size_t keep = 0;  // 0 keeps the full ranking
};

struct Ranking {
  std::vector<Configuration> configs;  // best first
  std::size_t evaluated = 0;
  Policy policy = Policy::ResilienceFirst;

  const Configuration& top() const { return configs.front(); }
};

Ranking recommend(const std::vector<NodeProfile>& pool, std::size_t n, Policy policy, const ScoreMap& scores,
                  const ClusterMap& clusters, const RecommendOptions& options = {});

void write_ranking_table(std::ostream& out, const Ranking& ranking, std::size_t top_k);
nlohmann::json ranking_json(const Ranking& ranking, std::size_t top_k);

// Evaluation-report metrics for one configuration.
struct ReportMetrics {
  double security_lazarus = 0.0;  // Σ nodes Σ lazarus score
  double resilience_epss = 0.0;   // Σ pairs Σ shared lazarus score × epss
};

ReportMetrics report_metrics(const std::vector<NodeProfile>& nodes, const ScoreTable& table,
                             const ClusterMap& clusters);

struct Batch {
  std::string period;  // "YYYY-MM"
  std::vector<store::VulnRecord> records;
};

// First instant of the month after the period.
Timestamp period_end(const std::string& period);

struct SeriesRow {
  std::string period;
  Timestamp as_of{};
  std::size_t injected = 0;
  std::vector<std::string> nodes;
  double security_risk = 0.0;
  double resilience_risk = 0.0;
  ReportMetrics metrics;
  bool carried_forward = false;
};

struct SeriesOptions {
  std::size_t n = 4;
  Policy policy = Policy::ResilienceFirst;
  scoring::ScoringConfig scoring;  // `now` is replaced by each period's end
  // Recomputes cluster labels after each injection; by default the labels
  // stored on the records are used.
  std::function<ClusterMap(const std::vector<store::VulnRecord>&)> cluster;
  unsigned threads = 0;
};

std::vector<SeriesRow> evaluation_series(const std::vector<store::OsSpec>& pool_specs,
                                         std::vector<store::VulnRecord> base,
                                         const std::vector<Batch>& batches, const SeriesOptions& options);

void write_series_csv(std::ostream& out, const std::vector<SeriesRow>& rows);

}  // namespace halrm::configurator
