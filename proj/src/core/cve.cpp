#include "halrm/core/cve.hpp"

#include <algorithm>
#include <cctype>

namespace halrm {

bool is_cve_id(std::string_view id) {
  if (id.size() < 13 || id.substr(0, 4) != "CVE-") return false;
  for (std::size_t i = 4; i < 8; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(id[i]))) return false;
  }
  if (id[8] != '-') return false;
  for (std::size_t i = 9; i < id.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(id[i]))) return false;
  }
  return id.size() - 9 >= 4;
}

std::vector<std::string> extract_cve_ids(std::string_view text) {
  std::vector<std::string> out;
  std::string upper(text);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  std::size_t pos = 0;
  while ((pos = upper.find("CVE-", pos)) != std::string::npos) {
    std::size_t end = pos + 4;
    while (end < upper.size() &&
           (std::isdigit(static_cast<unsigned char>(upper[end])) || upper[end] == '-')) {
      ++end;
    }
    std::string candidate = upper.substr(pos, end - pos);
    while (!candidate.empty() && candidate.back() == '-') candidate.pop_back();
    bool boundary = pos == 0 || !std::isalnum(static_cast<unsigned char>(upper[pos - 1]));
    if (boundary && is_cve_id(candidate) &&
        std::find(out.begin(), out.end(), candidate) == out.end()) {
      out.push_back(candidate);
    }
    pos = end;
  }
  return out;
}

}  // namespace halrm
