#include "support/oracles.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <tuple>

#include "halrm/clustering/clustering.hpp"

namespace halrm::test::oracles {

// Independent CVSS v3.1 route: weights as integer hundredths, the products of
// the impact and exploitability terms formed exactly on integer grids, long
// double only for the scope-changed power term.
double oracle_base(const std::string& vector) {
  std::map<std::string, std::string> m;
  std::string rest = vector.substr(vector.find('/') + 1);
  while (!rest.empty()) {
    auto slash = rest.find('/');
    auto part = rest.substr(0, slash);
    m[part.substr(0, part.find(':'))] = part.substr(part.find(':') + 1);
    rest = slash == std::string::npos ? "" : rest.substr(slash + 1);
  }
  const bool changed = m["S"] == "C";
  auto cia = [&](const std::string& k) -> long long {
    return m[k] == "H" ? 56 : m[k] == "L" ? 22 : 0;
  };
  long long av = m["AV"] == "N" ? 85 : m["AV"] == "A" ? 62 : m["AV"] == "L" ? 55 : 20;
  long long ac = m["AC"] == "L" ? 77 : 44;
  long long pr = m["PR"] == "N" ? 85 : m["PR"] == "L" ? (changed ? 68 : 62) : (changed ? 50 : 27);
  long long ui = m["UI"] == "N" ? 85 : 62;

  // iss scaled by 1e6
  long long iss = 1000000 - (100 - cia("C")) * (100 - cia("I")) * (100 - cia("A"));
  long double impact;
  if (!changed) {
    impact = static_cast<long double>(642 * iss) / 1e8L;
  } else {
    impact = static_cast<long double>(752 * (iss - 29000)) / 1e8L -
             3.25L * std::pow(static_cast<long double>(iss - 20000) / 1e6L, 15);
  }
  if (impact <= 0) return 0.0;
  long double expl = static_cast<long double>(822 * av * ac * pr * ui) / 1e10L;
  long double raw = changed ? std::min(1.08L * (impact + expl), 10.0L)
                            : std::min(impact + expl, 10.0L);
  long long scaled = std::llround(raw * 100000.0L);
  if (scaled % 10000 == 0) return static_cast<double>(scaled / 10000) / 10.0;
  return static_cast<double>(scaled / 10000 + 1) / 10.0;
}

double oracle_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (na == 0 || nb == 0) return 1.0;
  return std::clamp(1.0 - dot / std::sqrt(na * nb), 0.0, 2.0);
}

// Reference DBSCAN: core points, connected components of the core graph by
// union-find, then every border point joins the component with the smallest
// first core member among its core neighbours.
std::vector<int> oracle_dbscan(const std::vector<std::vector<double>>& pts, double eps, std::size_t min_samples) {
  const std::size_t n = pts.size();
  std::vector<std::vector<double>> dist(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) dist[i][j] = i == j ? 0.0 : oracle_cosine(pts[i], pts[j]);
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < n; ++j) c += dist[i][j] <= eps;
    core[i] = c >= min_samples;
  }
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    return parent[x] == x ? x : parent[x] = find(parent[x]);
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (core[i] && core[j] && dist[i][j] <= eps) parent[find(i)] = find(j);
  std::map<std::size_t, std::size_t> first_member;  // root -> smallest core index
  for (std::size_t i = 0; i < n; ++i)
    if (core[i]) first_member.emplace(find(i), i);
  std::vector<int> labels(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) {
      labels[i] = static_cast<int>(first_member[find(i)]);
      continue;
    }
    std::size_t best = n;
    for (std::size_t j = 0; j < n; ++j)
      if (core[j] && dist[i][j] <= eps) best = std::min(best, first_member[find(j)]);
    if (best != n) labels[i] = static_cast<int>(best);
  }
  return clustering::canonical_labels(labels);
}

// Membership-test version of the shared set, quadratic in the node sizes.
std::set<std::string> oracle_shared(const NodeProfile& a, const NodeProfile& b, const ClusterMap& clusters) {
  auto label = [&](const std::string& id) {
    auto it = clusters.find(id);
    return it == clusters.end() ? -1 : it->second;
  };
  auto in = [](const NodeProfile& p, const std::string& id) {
    return std::find(p.cve_ids.begin(), p.cve_ids.end(), id) != p.cve_ids.end();
  };
  auto has_label = [&](const NodeProfile& p, int l) {
    return std::any_of(p.cve_ids.begin(), p.cve_ids.end(), [&](const std::string& id) { return label(id) == l; });
  };
  std::set<std::string> out;
  std::vector<std::string> both = a.cve_ids;
  both.insert(both.end(), b.cve_ids.begin(), b.cve_ids.end());
  for (const auto& v : both) {
    int l = label(v);
    if ((in(a, v) && in(b, v)) || (l >= 0 && has_label(a, l) && has_label(b, l))) out.insert(v);
  }
  return out;
}

Eval oracle_eval(const std::vector<NodeProfile>& nodes, const std::map<std::string, double>& scores,
                 const ClusterMap& clusters) {
  Eval e;
  for (const auto& n : nodes) {
    e.names.push_back(n.name);
    for (const auto& id : n.cve_ids) e.security += scores.at(id);
  }
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t j = i + 1; j < nodes.size(); ++j)
      for (const auto& id : oracle_shared(nodes[i], nodes[j], clusters)) e.resilience += scores.at(id);
  std::sort(e.names.begin(), e.names.end());
  return e;
}

// Exhaustive evaluation over bitmasks with popcount n.
Eval oracle_best(const std::vector<NodeProfile>& pool, std::size_t n, Policy policy,
                 const std::map<std::string, double>& scores, const ClusterMap& clusters, std::size_t* count) {
  std::optional<Eval> best;
  std::size_t seen = 0;
  for (unsigned mask = 0; mask < (1u << pool.size()); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) != n) continue;
    ++seen;
    std::vector<NodeProfile> nodes;
    for (std::size_t i = 0; i < pool.size(); ++i)
      if (mask & (1u << i)) nodes.push_back(pool[i]);
    Eval e = oracle_eval(nodes, scores, clusters);
    auto key = [&](const Eval& x) {
      return policy == Policy::ResilienceFirst ? std::tie(x.resilience, x.security, x.names)
                                               : std::tie(x.security, x.resilience, x.names);
    };
    if (!best || key(e) < key(*best)) best = e;
  }
  if (count) *count = seen;
  return *best;
}

}  // namespace halrm::test::oracles
