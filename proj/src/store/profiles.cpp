#include "halrm/store/profiles.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>

namespace halrm::store {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Splits on unescaped ':' and drops the escaping backslashes.
std::vector<std::string> split_cpe(std::string_view s) {
  std::vector<std::string> parts(1);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      parts.back().push_back(s[++i]);
    } else if (s[i] == ':') {
      parts.emplace_back();
    } else {
      parts.back().push_back(s[i]);
    }
  }
  return parts;
}

std::string normalize_pattern(std::string_view pattern) {
  std::string p = lower(pattern);
  if (p.rfind("cpe:", 0) == 0) {
    auto parts = split_cpe(p);
    // cpe:2.3:part:vendor:product:version... or cpe:/part:vendor:product:version
    std::size_t first = parts.size() > 1 && parts[1] == "2.3" ? 3 : 2;
    std::string out;
    for (std::size_t i = first; i < parts.size() && i < first + 3; ++i) {
      if (parts[i] == "*" || parts[i].empty()) break;
      if (!out.empty()) out += ':';
      out += parts[i];
    }
    return out;
  }
  return p;
}

}  // namespace

std::string cpe_key(std::string_view cpe) {
  std::string c = lower(cpe);
  if (c.rfind("cpe:", 0) != 0) return {};
  auto parts = split_cpe(c);
  std::size_t first = parts.size() > 1 && parts[1] == "2.3" ? 3 : 2;
  if (parts.size() < first + 2) return {};
  std::string out = parts[first] + ":" + parts[first + 1];
  if (parts.size() > first + 2) out += ":" + parts[first + 2];
  return out;
}

bool cpe_matches(std::string_view pattern, std::string_view cpe) {
  std::string key = cpe_key(cpe);
  std::string p = normalize_pattern(pattern);
  if (key.empty() || p.empty()) return false;
  return key.compare(0, p.size(), p) == 0;
}

std::vector<NodeProfile> build_os_profiles(const std::vector<VulnRecord>& records,
                                           const std::vector<OsSpec>& specs) {
  std::vector<NodeProfile> out;
  out.reserve(specs.size());
  for (const auto& spec : specs) {
    NodeProfile p{spec.name, spec.cpe_pattern, {}};
    for (const auto& r : records) {
      bool hit = std::any_of(r.affected_cpes.begin(), r.affected_cpes.end(),
                             [&](const std::string& c) { return cpe_matches(spec.cpe_pattern, c); });
      if (hit) p.cve_ids.push_back(r.cve_id);
    }
    std::sort(p.cve_ids.begin(), p.cve_ids.end());
    p.cve_ids.erase(std::unique(p.cve_ids.begin(), p.cve_ids.end()), p.cve_ids.end());
    if (p.cve_ids.empty()) {
      spdlog::warn("profile '{}': pattern '{}' matches no stored CVE", spec.name,
                   spec.cpe_pattern);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<NodeProfile> build_os_profiles(const VulnStore& store,
                                           const std::vector<OsSpec>& specs) {
  return build_os_profiles(store.snapshot(), specs);
}

}  // namespace halrm::store
