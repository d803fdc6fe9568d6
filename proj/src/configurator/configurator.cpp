#include "halrm/configurator/configurator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>
#include <unordered_set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "halrm/core/csv.hpp"

namespace halrm::configurator {

UnscoredCve::UnscoredCve(const std::string& cve_id)
    : DataError("no score available for " + cve_id), id_(cve_id) {}

ClusterMap clusters_from_records(const std::vector<store::VulnRecord>& records) {
  ClusterMap out;
  for (const auto& r : records) {
    if (r.cluster_label && *r.cluster_label >= 0) out.emplace(r.cve_id, *r.cluster_label);
  }
  return out;
}

ScoreTable build_score_table(const std::vector<store::VulnRecord>& records, const scoring::ScoringConfig& cfg) {
  ScoreTable t;
  for (const auto& r : records) {
    try {
      auto b = scoring::hal_score(r, cfg);
      t.hal.emplace(r.cve_id, b.final);
      t.lazarus.emplace(r.cve_id, b.lazarus);
      t.epss.emplace(r.cve_id, r.epss);
    } catch (const scoring::MissingBaseScore&) {
      t.missing.push_back(r.cve_id);
    }
  }
  return t;
}

std::uint64_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > std::numeric_limits<std::uint64_t>::max()) throw ValidationError("configuration count overflows");
  }
  return static_cast<std::uint64_t>(r);
}

Combinations::Combinations(std::size_t n, std::size_t k) : n_(n), k_(k), total_(binomial(n, k)) {
  if (k == 0 || k > n) throw ValidationError(fmt::format("need 1 <= n <= pool size, got n={} pool={}", k, n));
  cur_.resize(k);
}

bool Combinations::next(std::vector<std::size_t>& out) {
  if (done_) return false;
  if (!started_) {
    for (std::size_t i = 0; i < k_; ++i) cur_[i] = i;
    started_ = true;
  } else {
    std::size_t i = k_;
    while (i > 0 && cur_[i - 1] == n_ - k_ + (i - 1)) --i;
    if (i == 0) {
      done_ = true;
      return false;
    }
    ++cur_[i - 1];
    for (std::size_t j = i; j < k_; ++j) cur_[j] = cur_[j - 1] + 1;
  }
  out = cur_;
  return true;
}

namespace {

void check_distinct(const std::vector<NodeProfile>& pool) {
  std::unordered_set<std::string> seen;
  for (const auto& p : pool) {
    if (!seen.insert(p.name).second) throw ValidationError("duplicate node name in pool: " + p.name);
  }
}

Configuration make_config(const std::vector<NodeProfile>& pool, const std::vector<std::size_t>& idx) {
  Configuration c;
  c.members = idx;
  c.names.reserve(idx.size());
  for (auto i : idx) c.names.push_back(pool[i].name);
  std::sort(c.names.begin(), c.names.end());
  return c;
}

double lookup(const ScoreMap& scores, const std::string& id) {
  auto it = scores.find(id);
  if (it == scores.end()) throw UnscoredCve(id);
  return it->second;
}

std::optional<int> label_of(const ClusterMap& clusters, const std::string& id) {
  auto it = clusters.find(id);
  if (it == clusters.end() || it->second < 0) return std::nullopt;
  return it->second;
}

double node_sum(const NodeProfile& p, const ScoreMap& scores) {
  double s = 0.0;
  for (const auto& id : p.cve_ids) s += lookup(scores, id);
  return s;
}

double pair_sum(const NodeProfile& a, const NodeProfile& b, const ScoreMap& scores, const ClusterMap& clusters) {
  double s = 0.0;
  for (const auto& id : shared_vulns(a, b, clusters)) s += lookup(scores, id);
  return s;
}

}  // namespace

void enumerate_configs(const std::vector<NodeProfile>& pool, std::size_t n,
                       const std::function<void(const Configuration&)>& visit) {
  check_distinct(pool);
  Combinations combos(pool.size(), n);
  std::vector<std::size_t> idx;
  while (combos.next(idx)) visit(make_config(pool, idx));
}

std::vector<std::string> shared_vulns(const NodeProfile& a, const NodeProfile& b, const ClusterMap& clusters) {
  std::vector<std::string> common;
  std::set_intersection(a.cve_ids.begin(), a.cve_ids.end(), b.cve_ids.begin(), b.cve_ids.end(),
                        std::back_inserter(common));
  if (clusters.empty()) return common;

  std::unordered_set<int> la, lb;
  for (const auto& id : a.cve_ids)
    if (auto l = label_of(clusters, id)) la.insert(*l);
  for (const auto& id : b.cve_ids)
    if (auto l = label_of(clusters, id)) lb.insert(*l);
  std::unordered_set<int> both;
  for (int l : la)
    if (lb.count(l)) both.insert(l);
  if (both.empty()) return common;

  std::vector<std::string> grouped;
  auto collect = [&](const NodeProfile& p) {
    for (const auto& id : p.cve_ids) {
      auto l = label_of(clusters, id);
      if (l && both.count(*l)) grouped.push_back(id);
    }
  };
  collect(a);
  collect(b);
  std::sort(grouped.begin(), grouped.end());
  std::vector<std::string> out;
  std::set_union(common.begin(), common.end(), grouped.begin(), grouped.end(), std::back_inserter(out));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double security_risk(const std::vector<NodeProfile>& nodes, const ScoreMap& scores) {
  double s = 0.0;
  for (const auto& n : nodes) s += node_sum(n, scores);
  return s;
}

double resilience_risk(const std::vector<NodeProfile>& nodes, const ScoreMap& scores, const ClusterMap& clusters) {
  for (const auto& n : nodes)
    for (const auto& id : n.cve_ids) lookup(scores, id);
  double s = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t j = i + 1; j < nodes.size(); ++j) s += pair_sum(nodes[i], nodes[j], scores, clusters);
  return s;
}

std::string to_string(Policy p) { return p == Policy::ResilienceFirst ? "resilience" : "security"; }

Policy parse_policy(const std::string& s) {
  if (s == "resilience" || s == "resilience-first") return Policy::ResilienceFirst;
  if (s == "security" || s == "security-first") return Policy::SecurityFirst;
  throw ValidationError("unknown ranking policy: " + s);
}

bool ranks_before(const Configuration& a, const Configuration& b, Policy policy) {
  double pa = a.resilience_risk, sa = a.security_risk;
  double pb = b.resilience_risk, sb = b.security_risk;
  if (policy == Policy::SecurityFirst) {
    std::swap(pa, sa);
    std::swap(pb, sb);
  }
  if (pa != pb) return pa < pb;
  if (sa != sb) return sa < sb;
  return a.names < b.names;
}

Ranking recommend(const std::vector<NodeProfile>& pool, std::size_t n, Policy policy, const ScoreMap& scores,
                  const ClusterMap& clusters, const RecommendOptions& options) {
  check_distinct(pool);
  Combinations combos(pool.size(), n);

  // Risks decompose into per-node and per-pair terms, so those are computed
  // once and every configuration sums them in member order.
  const std::size_t p = pool.size();
  std::vector<double> node(p);
  for (std::size_t i = 0; i < p; ++i) node[i] = node_sum(pool[i], scores);
  std::vector<double> pair(p * p, 0.0);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) pair[i * p + j] = pair_sum(pool[i], pool[j], scores, clusters);

  auto evaluate = [&](const std::vector<std::size_t>& idx) {
    Configuration c = make_config(pool, idx);
    for (std::size_t a = 0; a < idx.size(); ++a) {
      c.security_risk += node[idx[a]];
      for (std::size_t b = a + 1; b < idx.size(); ++b) c.resilience_risk += pair[idx[a] * p + idx[b]];
    }
    return c;
  };

  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  const std::size_t total = static_cast<std::size_t>(combos.total());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, total / 256)));

  std::vector<Configuration> all(total);
  std::mutex mu;
  std::size_t next_seq = 0;
  constexpr std::size_t kChunk = 256;
  auto worker = [&] {
    std::vector<std::vector<std::size_t>> batch;
    for (;;) {
      std::size_t first;
      batch.clear();
      {
        std::lock_guard lock(mu);
        first = next_seq;
        std::vector<std::size_t> idx;
        while (batch.size() < kChunk && combos.next(idx)) batch.push_back(idx);
        next_seq += batch.size();
      }
      if (batch.empty()) return;
      for (std::size_t k = 0; k < batch.size(); ++k) all[first + k] = evaluate(batch[k]);
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool_threads;
    for (unsigned t = 0; t < threads; ++t) pool_threads.emplace_back(worker);
    for (auto& t : pool_threads) t.join();
  }

  auto cmp = [policy](const Configuration& a, const Configuration& b) { return ranks_before(a, b, policy); };
  Ranking r;
  r.policy = policy;
  r.evaluated = total;
  if (options.keep && options.keep < all.size()) {
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(options.keep), all.end(), cmp);
    all.resize(options.keep);
  } else {
    std::sort(all.begin(), all.end(), cmp);
  }
  r.configs = std::move(all);
  spdlog::debug("recommend: {} configurations of {} from {}", total, n, p);
  return r;
}

void write_ranking_table(std::ostream& out, const Ranking& ranking, std::size_t top_k) {
  std::size_t k = std::min(top_k ? top_k : ranking.configs.size(), ranking.configs.size());
  std::size_t width = 5;
  std::vector<std::string> joined;
  for (std::size_t i = 0; i < k; ++i) {
    std::string s;
    for (const auto& nm : ranking.configs[i].names) s += (s.empty() ? "" : ", ") + nm;
    width = std::max(width, s.size());
    joined.push_back(std::move(s));
  }
  out << fmt::format("{:>4}  {:<{}}  {:>12}  {:>12}\n", "rank", "nodes", width, "resilience", "security");
  for (std::size_t i = 0; i < k; ++i) {
    const auto& c = ranking.configs[i];
    out << fmt::format("{:>4}  {:<{}}  {:>12.3f}  {:>12.3f}\n", i + 1, joined[i], width, c.resilience_risk,
                       c.security_risk);
  }
}

nlohmann::json ranking_json(const Ranking& ranking, std::size_t top_k) {
  std::size_t k = std::min(top_k ? top_k : ranking.configs.size(), ranking.configs.size());
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t i = 0; i < k; ++i) {
    const auto& c = ranking.configs[i];
    arr.push_back({{"rank", i + 1},
                   {"nodes", c.names},
                   {"resilience_risk", c.resilience_risk},
                   {"security_risk", c.security_risk}});
  }
  return {{"policy", to_string(ranking.policy)}, {"evaluated", ranking.evaluated}, {"configurations", arr}};
}

ReportMetrics report_metrics(const std::vector<NodeProfile>& nodes, const ScoreTable& table,
                             const ClusterMap& clusters) {
  ReportMetrics m;
  m.security_lazarus = security_risk(nodes, table.lazarus);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      for (const auto& id : shared_vulns(nodes[i], nodes[j], clusters))
        m.resilience_epss += lookup(table.lazarus, id) * lookup(table.epss, id);
    }
  }
  return m;
}

Timestamp period_end(const std::string& period) {
  int y = 0;
  unsigned mo = 0;
  if (period.size() != 7 || period[4] != '-' || std::sscanf(period.c_str(), "%4d-%2u", &y, &mo) != 2 || mo < 1 ||
      mo > 12)
    throw ValidationError("period must be YYYY-MM: " + period);
  return mo == 12 ? make_timestamp(y + 1, 1, 1) : make_timestamp(y, mo + 1, 1);
}

std::vector<SeriesRow> evaluation_series(const std::vector<store::OsSpec>& pool_specs,
                                         std::vector<store::VulnRecord> base,
                                         const std::vector<Batch>& batches, const SeriesOptions& options) {
  for (std::size_t i = 1; i < batches.size(); ++i) {
    if (!(batches[i - 1].period < batches[i].period))
      throw ValidationError("batches must be ordered by period: " + batches[i].period);
  }
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < base.size(); ++i) index.emplace(base[i].cve_id, i);

  std::vector<SeriesRow> rows;
  for (const auto& batch : batches) {
    SeriesRow row;
    row.period = batch.period;
    row.as_of = period_end(batch.period);
    row.injected = batch.records.size();
    if (batch.records.empty() && !rows.empty()) {
      SeriesRow prev = rows.back();
      prev.period = row.period;
      prev.as_of = row.as_of;
      prev.injected = 0;
      prev.carried_forward = true;
      rows.push_back(std::move(prev));
      continue;
    }
    for (const auto& r : batch.records) {
      auto [it, fresh] = index.emplace(r.cve_id, base.size());
      if (fresh) {
        base.push_back(r);
      } else {
        base[it->second] = r;
      }
    }

    auto cfg = options.scoring;
    cfg.now = row.as_of;
    auto profiles = store::build_os_profiles(base, pool_specs);
    auto table = build_score_table(base, cfg);
    auto clusters = options.cluster ? options.cluster(base) : clusters_from_records(base);

    RecommendOptions ro;
    ro.threads = options.threads;
    ro.keep = 1;
    auto ranking = recommend(profiles, options.n, options.policy, table.hal, clusters, ro);
    const auto& top = ranking.top();
    std::vector<NodeProfile> chosen;
    for (auto i : top.members) chosen.push_back(profiles[i]);
    row.nodes = top.names;
    row.security_risk = top.security_risk;
    row.resilience_risk = top.resilience_risk;
    row.metrics = report_metrics(chosen, table, clusters);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_series_csv(std::ostream& out, const std::vector<SeriesRow>& rows) {
  csv::write_row(out, {"period", "as_of", "injected", "nodes", "security_risk", "resilience_risk",
                       "security_lazarus", "resilience_epss", "carried_forward"});
  for (const auto& r : rows) {
    std::string nodes;
    for (const auto& n : r.nodes) nodes += (nodes.empty() ? "" : ";") + n;
    csv::write_row(out, {r.period, format_timestamp(r.as_of), std::to_string(r.injected), nodes,
                         csv::format_double(r.security_risk), csv::format_double(r.resilience_risk),
                         csv::format_double(r.metrics.security_lazarus),
                         csv::format_double(r.metrics.resilience_epss), r.carried_forward ? "1" : "0"});
  }
}

}  // namespace halrm::configurator
