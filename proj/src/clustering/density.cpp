#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>

#include "halrm/clustering/clustering.hpp"
#include "halrm/core/errors.hpp"

namespace halrm::clustering {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Rounds to 15 decimals the way numpy.around does, so that reachability
// ties resolve the same way regardless of summation noise.
double round15(double x) {
  if (!std::isfinite(x)) return x;
  return std::nearbyint(x * 1e15) / 1e15;
}

std::size_t region_end(const std::vector<bool>& steep, const std::vector<bool>& xward,
                       std::size_t start, std::size_t min_samples) {
  const std::size_t n = steep.size();
  std::size_t non_xward = 0;
  std::size_t end = start;
  for (std::size_t i = start; i < n; ++i) {
    if (steep[i]) {
      non_xward = 0;
      end = i;
    } else if (!xward[i]) {
      // Still heading the same way, just not steeply.
      if (++non_xward > min_samples) break;
    } else {
      return end;
    }
  }
  return end;
}

struct SteepDown {
  std::size_t start;
  std::size_t end;
  double mib;
};

void filter_steep_downs(std::vector<SteepDown>& sdas, double mib, double xi_complement,
                        const std::vector<double>& plot) {
  if (std::isinf(mib)) {
    sdas.clear();
    return;
  }
  std::erase_if(sdas, [&](const SteepDown& d) { return !(mib <= plot[d.start] * xi_complement); });
  for (auto& d : sdas) d.mib = std::max(d.mib, mib);
}

bool correct_predecessor(const std::vector<double>& plot, const std::vector<std::ptrdiff_t>& pred_plot,
                         const std::vector<std::size_t>& ordering, std::size_t& s, std::size_t& e) {
  while (s < e) {
    if (plot[s] > plot[e]) return true;
    const auto p_e = pred_plot[e];
    for (std::size_t i = s; i < e; ++i) {
      if (p_e == static_cast<std::ptrdiff_t>(ordering[i])) return true;
    }
    --e;
  }
  return false;
}

std::vector<std::pair<std::size_t, std::size_t>> xi_clusters(const OpticsResult& r, double xi,
                                                             std::size_t min_samples,
                                                             std::size_t min_cluster_size) {
  const std::size_t n = r.ordering.size();
  std::vector<double> plot(n + 1, kInf);
  std::vector<std::ptrdiff_t> pred_plot(n);
  for (std::size_t i = 0; i < n; ++i) {
    plot[i] = r.reachability[r.ordering[i]];
    pred_plot[i] = r.predecessor[r.ordering[i]];
  }
  const double xc = 1.0 - xi;
  std::vector<bool> steep_up(n), steep_down(n), down(n), up(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ratio = plot[i] / plot[i + 1];  // NaN for inf/inf compares false everywhere
    steep_up[i] = ratio <= xc;
    steep_down[i] = ratio >= 1.0 / xc;
    down[i] = ratio > 1.0;
    up[i] = ratio < 1.0;
  }

  std::vector<SteepDown> sdas;
  std::vector<std::pair<std::size_t, std::size_t>> clusters;
  std::size_t index = 0;
  double mib = 0.0;
  for (std::size_t steep = 0; steep < n; ++steep) {
    if (!(steep_up[steep] || steep_down[steep])) continue;
    if (steep < index) continue;
    mib = std::max(mib, *std::max_element(plot.begin() + static_cast<std::ptrdiff_t>(index),
                                          plot.begin() + static_cast<std::ptrdiff_t>(steep) + 1));
    if (steep_down[steep]) {
      filter_steep_downs(sdas, mib, xc, plot);
      const std::size_t d_end = region_end(steep_down, up, steep, min_samples);
      sdas.push_back({steep, d_end, 0.0});
      index = d_end + 1;
      mib = plot[index];
      continue;
    }

    filter_steep_downs(sdas, mib, xc, plot);
    const std::size_t u_start = steep;
    const std::size_t u_end = region_end(steep_up, down, u_start, min_samples);
    index = u_end + 1;
    mib = plot[index];

    std::vector<std::pair<std::size_t, std::size_t>> found;
    for (const auto& d : sdas) {
      std::size_t c_start = d.start;
      std::size_t c_end = u_end;
      if (plot[c_end + 1] * xc < d.mib) continue;

      const double d_max = plot[d.start];
      if (d_max * xc >= plot[c_end + 1]) {
        while (plot[c_start + 1] > plot[c_end + 1] && c_start < d.end) ++c_start;
      } else if (plot[c_end + 1] * xc >= d_max) {
        while (plot[c_end - 1] > d_max && c_end > u_start) --c_end;
      }
      if (!correct_predecessor(plot, pred_plot, r.ordering, c_start, c_end)) continue;
      if (c_end - c_start + 1 < min_cluster_size) continue;
      if (c_start > d.end) continue;
      if (c_end < u_start) continue;
      found.emplace_back(c_start, c_end);
    }
    // Smaller (inner) clusters first.
    clusters.insert(clusters.end(), found.rbegin(), found.rend());
  }
  return clusters;
}

nlohmann::json base_params(const FeatureMatrix& m) {
  return {{"metric", "cosine"}, {"features", to_string(m.kind)}, {"n", m.size()}};
}

}  // namespace

std::vector<int> canonical_labels(const std::vector<int>& labels) {
  std::map<int, int> rename;
  std::vector<int> out(labels.size(), -1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    auto [it, inserted] = rename.emplace(labels[i], static_cast<int>(rename.size()));
    out[i] = it->second;
  }
  return out;
}

std::vector<int> dbscan_labels(const DistanceMatrix& d, double eps, std::size_t min_samples) {
  if (!(eps > 0.0)) throw ValidationError("DBSCAN eps must be positive");
  if (min_samples < 1) throw ValidationError("DBSCAN min_samples must be at least 1");
  const std::size_t n = d.size();
  std::vector<std::vector<std::size_t>> neighbors(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (d(i, j) <= eps) neighbors[i].push_back(j);
    }
  }
  std::vector<int> labels(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != -1 || neighbors[i].size() < min_samples) continue;
    const int label = next++;
    labels[i] = label;
    std::deque<std::size_t> frontier{i};
    while (!frontier.empty()) {
      const std::size_t p = frontier.front();
      frontier.pop_front();
      if (neighbors[p].size() < min_samples) continue;
      for (std::size_t q : neighbors[p]) {
        if (labels[q] != -1) continue;
        labels[q] = label;
        frontier.push_back(q);
      }
    }
  }
  return labels;
}

ClusterAssignment cluster_dbscan(const FeatureMatrix& m, DbscanParams params) {
  m.validate();
  DistanceMatrix d(m);
  double eps = params.eps;
  if (eps <= 0.0) eps = std::max(pairwise_percentile(d, kDefaultEpsPercentile), 1e-9);
  ClusterAssignment a;
  a.ids = m.ids;
  a.labels = canonical_labels(dbscan_labels(d, eps, params.min_samples));
  a.params = base_params(m);
  a.params["algorithm"] = "dbscan";
  a.params["eps"] = eps;
  a.params["min_samples"] = params.min_samples;
  return a;
}

OpticsResult optics(const DistanceMatrix& d, const OpticsParams& params) {
  if (params.min_samples < 2) throw ValidationError("OPTICS min_samples must be at least 2");
  if (!(params.xi > 0.0 && params.xi < 1.0)) throw ValidationError("OPTICS xi must lie in (0, 1)");
  const std::size_t n = d.size();
  OpticsResult r;
  r.reachability.assign(n, kInf);
  r.core_distance.assign(n, kInf);
  r.predecessor.assign(n, -1);
  r.labels.assign(n, -1);

  // Core distance: distance to the min_samples-th nearest point, the point
  // itself included.
  std::vector<double> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (n < params.min_samples) break;
    for (std::size_t j = 0; j < n; ++j) row[j] = d(i, j);
    std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(params.min_samples - 1), row.end());
    r.core_distance[i] = round15(row[params.min_samples - 1]);
  }

  std::vector<bool> processed(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t point = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (processed[i]) continue;
      if (point == n || r.reachability[i] < r.reachability[point]) point = i;
    }
    processed[point] = true;
    r.ordering.push_back(point);
    if (std::isinf(r.core_distance[point])) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (processed[j]) continue;
      const double rd = round15(std::max(d(point, j), r.core_distance[point]));
      if (rd < r.reachability[j]) {
        r.reachability[j] = rd;
        r.predecessor[j] = static_cast<std::ptrdiff_t>(point);
      }
    }
  }

  const std::size_t min_cluster = params.min_cluster_size ? params.min_cluster_size : params.min_samples;
  const auto clusters = xi_clusters(r, params.xi, params.min_samples, min_cluster);
  std::vector<int> by_position(n, -1);
  int label = 0;
  for (const auto& [s, e] : clusters) {
    bool free = std::all_of(by_position.begin() + static_cast<std::ptrdiff_t>(s),
                            by_position.begin() + static_cast<std::ptrdiff_t>(e) + 1,
                            [](int l) { return l == -1; });
    if (!free) continue;
    std::fill(by_position.begin() + static_cast<std::ptrdiff_t>(s),
              by_position.begin() + static_cast<std::ptrdiff_t>(e) + 1, label++);
  }
  for (std::size_t i = 0; i < n; ++i) r.labels[r.ordering[i]] = by_position[i];
  return r;
}

ClusterAssignment cluster_optics(const FeatureMatrix& m, OpticsParams params) {
  m.validate();
  DistanceMatrix d(m);
  ClusterAssignment a;
  a.ids = m.ids;
  a.labels = canonical_labels(optics(d, params).labels);
  a.params = base_params(m);
  a.params["algorithm"] = "optics";
  a.params["min_samples"] = params.min_samples;
  a.params["xi"] = params.xi;
  a.params["min_cluster_size"] = params.min_cluster_size ? params.min_cluster_size : params.min_samples;
  return a;
}

}  // namespace halrm::clustering
