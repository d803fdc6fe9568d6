#pragma once

// Independent reference routes shared by the unit and acceptance tests.

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "halrm/configurator/configurator.hpp"

namespace halrm::test::oracles {

using configurator::ClusterMap;
using configurator::Policy;
using store::NodeProfile;

// CVSS v3.1 base score from a vector string.
double oracle_base(const std::string& vector);

double oracle_cosine(const std::vector<double>& a, const std::vector<double>& b);

// Canonically relabelled, noise -1.
std::vector<int> oracle_dbscan(const std::vector<std::vector<double>>& pts, double eps, std::size_t min_samples);

std::set<std::string> oracle_shared(const NodeProfile& a, const NodeProfile& b, const ClusterMap& clusters);

struct Eval {
  double security = 0, resilience = 0;
  std::vector<std::string> names;
};

Eval oracle_eval(const std::vector<NodeProfile>& nodes, const std::map<std::string, double>& scores,
                 const ClusterMap& clusters);

// Exhaustive search; `count` receives the number of configurations seen.
Eval oracle_best(const std::vector<NodeProfile>& pool, std::size_t n, Policy policy,
                 const std::map<std::string, double>& scores, const ClusterMap& clusters,
                 std::size_t* count = nullptr);

}  // namespace halrm::test::oracles
