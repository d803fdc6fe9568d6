#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "halrm/store/store.hpp"

namespace halrm::store {

struct OsSpec {
  std::string name;
  std::string cpe_pattern;
};

// One OS or software image and the CVEs affecting it.
struct NodeProfile {
  std::string name;
  std::string cpe_pattern;
  std::vector<std::string> cve_ids;  // sorted, unique

  friend bool operator==(const NodeProfile&, const NodeProfile&) = default;
};

// "vendor:product:version" of a CPE 2.3 formatted string or a CPE 2.2 URI,
// lower-cased, escapes removed. Empty when the string is not a CPE.
std::string cpe_key(std::string_view cpe);

// Case-insensitive prefix match of the pattern against cpe_key(cpe). The
// pattern may itself be a full CPE or a bare "vendor:product[:version]".
bool cpe_matches(std::string_view pattern, std::string_view cpe);

std::vector<NodeProfile> build_os_profiles(const std::vector<VulnRecord>& records,
                                           const std::vector<OsSpec>& specs);
std::vector<NodeProfile> build_os_profiles(const VulnStore& store,
                                           const std::vector<OsSpec>& specs);

}  // namespace halrm::store
