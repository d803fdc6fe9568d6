#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace halrm {

// CVE-YYYY-NNNN with four or more sequence digits.
bool is_cve_id(std::string_view id);

// Pulls every CVE id out of free text or a delimited list, upper-cased,
// in order of first appearance, without duplicates.
std::vector<std::string> extract_cve_ids(std::string_view text);

}  // namespace halrm
