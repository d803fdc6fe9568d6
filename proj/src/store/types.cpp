#include "halrm/store/types.hpp"

#include <array>
#include <cmath>
#include <map>

#include "halrm/core/cve.hpp"
#include "halrm/core/errors.hpp"

namespace halrm::store {
namespace {

constexpr std::array<char, 4> kAv{'N', 'A', 'L', 'P'};
constexpr std::array<char, 2> kAc{'L', 'H'};
constexpr std::array<char, 3> kPr{'N', 'L', 'H'};
constexpr std::array<char, 2> kUi{'N', 'R'};
constexpr std::array<char, 2> kS{'U', 'C'};
constexpr std::array<char, 3> kCia{'N', 'L', 'H'};

template <typename E, std::size_t N>
E decode(const std::array<char, N>& codes, std::string_view key, std::string_view value) {
  if (value.size() == 1) {
    for (std::size_t i = 0; i < N; ++i) {
      if (codes[i] == value[0]) return static_cast<E>(i);
    }
  }
  throw ValidationError("invalid CVSS value '" + std::string(value) + "' for metric " +
                        std::string(key));
}

template <typename E, std::size_t N>
char encode(const std::array<char, N>& codes, E e) {
  return codes[static_cast<std::size_t>(e)];
}

}  // namespace

std::string MetricVector::to_string() const {
  std::string s = "CVSS:3.1";
  auto add = [&](const char* key, char code) {
    s += '/';
    s += key;
    s += ':';
    s += code;
  };
  add("AV", encode(kAv, attack_vector));
  add("AC", encode(kAc, attack_complexity));
  add("PR", encode(kPr, privileges_required));
  add("UI", encode(kUi, user_interaction));
  add("S", encode(kS, scope));
  add("C", encode(kCia, confidentiality));
  add("I", encode(kCia, integrity));
  add("A", encode(kCia, availability));
  return s;
}

MetricVector MetricVector::parse(std::string_view vector) {
  std::string_view rest = vector;
  if (rest.substr(0, 5) == "CVSS:") {
    auto slash = rest.find('/');
    auto version = rest.substr(5, slash == std::string_view::npos ? rest.npos : slash - 5);
    if (version != "3.0" && version != "3.1") {
      throw ValidationError("unsupported CVSS version in '" + std::string(vector) + "'");
    }
    rest = slash == std::string_view::npos ? std::string_view{} : rest.substr(slash + 1);
  }
  std::map<std::string, std::string, std::less<>> seen;
  while (!rest.empty()) {
    auto slash = rest.find('/');
    auto part = rest.substr(0, slash);
    rest = slash == std::string_view::npos ? std::string_view{} : rest.substr(slash + 1);
    auto colon = part.find(':');
    if (colon == std::string_view::npos) {
      throw ValidationError("malformed CVSS component '" + std::string(part) + "'");
    }
    std::string key(part.substr(0, colon));
    if (!seen.emplace(key, std::string(part.substr(colon + 1))).second) {
      throw ValidationError("duplicate CVSS metric " + key);
    }
  }
  auto get = [&](const char* key) -> std::string_view {
    auto it = seen.find(key);
    if (it == seen.end()) {
      throw ValidationError("CVSS vector '" + std::string(vector) + "' lacks metric " + key);
    }
    return it->second;
  };
  MetricVector m;
  m.attack_vector = decode<AttackVector>(kAv, "AV", get("AV"));
  m.attack_complexity = decode<AttackComplexity>(kAc, "AC", get("AC"));
  m.privileges_required = decode<PrivilegesRequired>(kPr, "PR", get("PR"));
  m.user_interaction = decode<UserInteraction>(kUi, "UI", get("UI"));
  m.scope = decode<Scope>(kS, "S", get("S"));
  m.confidentiality = decode<Impact>(kCia, "C", get("C"));
  m.integrity = decode<Impact>(kCia, "I", get("I"));
  m.availability = decode<Impact>(kCia, "A", get("A"));
  return m;
}

std::string_view to_string(Status s) { return s == Status::Analyzed ? "Analyzed" : "Received"; }

std::string_view to_string(Provenance p) {
  return p == Provenance::Predicted ? "Predicted" : "NvdAssessed";
}

std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::Nvd: return "nvd";
    case Origin::Osv: return "osv";
    case Origin::Fixture: return "fixture";
  }
  return "nvd";
}

Status parse_status(std::string_view s) {
  if (s == "Analyzed") return Status::Analyzed;
  if (s == "Received") return Status::Received;
  throw ValidationError("unknown status '" + std::string(s) + "'");
}

Provenance parse_provenance(std::string_view s) {
  if (s == "NvdAssessed") return Provenance::NvdAssessed;
  if (s == "Predicted") return Provenance::Predicted;
  throw ValidationError("unknown score provenance '" + std::string(s) + "'");
}

Origin parse_origin(std::string_view s) {
  if (s == "nvd") return Origin::Nvd;
  if (s == "osv") return Origin::Osv;
  if (s == "fixture") return Origin::Fixture;
  throw ValidationError("unknown record origin '" + std::string(s) + "'");
}

bool VulnRecord::is_cve() const { return is_cve_id(cve_id); }

void validate(const VulnRecord& r) {
  auto fail = [&](const std::string& why) {
    throw ValidationError(r.cve_id.empty() ? why : r.cve_id + ": " + why);
  };
  if (!r.is_cve()) {
    bool native_ok = r.origin == Origin::Osv && !r.cve_id.empty() &&
                     r.cve_id.find_first_of(" \t\r\n/") == std::string::npos;
    if (!native_ok) fail("malformed CVE id '" + r.cve_id + "'");
  }
  auto in_range = [](double v, double lo, double hi) { return std::isfinite(v) && v >= lo && v <= hi; };
  if (!in_range(r.epss, 0.0, 1.0)) fail("epss must lie in [0,1]");
  if (r.pulse_count < 0) fail("pulse_count must be non-negative");
  if (r.published_date > r.last_modified) fail("published_date is after last_modified");
  if (r.cvss_v3_score && !in_range(*r.cvss_v3_score, 0.0, 10.0)) fail("cvss_v3_score outside [0,10]");
  if (r.cvss_v2_score && !in_range(*r.cvss_v2_score, 0.0, 10.0)) fail("cvss_v2_score outside [0,10]");
  bool predicted = r.score_provenance == Provenance::Predicted;
  if (r.cvss_v3_score && r.status != Status::Analyzed && !predicted) {
    fail("a v3 score requires status Analyzed or a predicted provenance");
  }
  if (predicted && !r.cvss_v3_score) fail("predicted provenance without a score");
  if (r.status == Status::Analyzed && !r.cvss_v3_score && !r.cvss_v2_score) {
    fail("status Analyzed without any base score");
  }
}

void to_json(nlohmann::json& j, const MetricVector& m) { j = m.to_string(); }

void from_json(const nlohmann::json& j, MetricVector& m) {
  m = MetricVector::parse(j.get<std::string>());
}

void to_json(nlohmann::json& j, const VulnRecord& r) {
  j = nlohmann::json{{"cve_id", r.cve_id},
                     {"description", r.description},
                     {"published_date", format_timestamp(r.published_date)},
                     {"last_modified", format_timestamp(r.last_modified)},
                     {"status", to_string(r.status)},
                     {"patched", r.patched},
                     {"exploited", r.exploited},
                     {"epss", r.epss},
                     {"pulse_count", r.pulse_count},
                     {"affected_cpes", r.affected_cpes},
                     {"score_provenance", to_string(r.score_provenance)},
                     {"origin", to_string(r.origin)}};
  j["cvss_v3_vector"] = r.cvss_v3_metrics ? nlohmann::json(r.cvss_v3_metrics->to_string()) : nlohmann::json(nullptr);
  j["cvss_v3_score"] = r.cvss_v3_score ? nlohmann::json(*r.cvss_v3_score) : nlohmann::json(nullptr);
  j["cvss_v2_score"] = r.cvss_v2_score ? nlohmann::json(*r.cvss_v2_score) : nlohmann::json(nullptr);
  j["cluster_label"] = r.cluster_label ? nlohmann::json(*r.cluster_label) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, VulnRecord& r) {
  r = VulnRecord{};
  r.cve_id = j.at("cve_id").get<std::string>();
  r.description = j.value("description", "");
  r.published_date = require_timestamp(j.at("published_date").get<std::string>());
  r.last_modified = j.contains("last_modified")
                        ? require_timestamp(j.at("last_modified").get<std::string>())
                        : r.published_date;
  r.status = parse_status(j.value("status", "Received"));
  auto opt_double = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
  };
  if (j.contains("cvss_v3_vector") && !j.at("cvss_v3_vector").is_null()) {
    r.cvss_v3_metrics = MetricVector::parse(j.at("cvss_v3_vector").get<std::string>());
  }
  r.cvss_v3_score = opt_double("cvss_v3_score");
  r.cvss_v2_score = opt_double("cvss_v2_score");
  r.patched = j.value("patched", false);
  r.exploited = j.value("exploited", false);
  r.epss = j.value("epss", 0.0);
  r.pulse_count = j.value("pulse_count", 0);
  r.affected_cpes = j.value("affected_cpes", std::vector<std::string>{});
  if (j.contains("cluster_label") && !j.at("cluster_label").is_null()) {
    r.cluster_label = j.at("cluster_label").get<int>();
  }
  r.score_provenance = parse_provenance(j.value("score_provenance", "NvdAssessed"));
  r.origin = parse_origin(j.value("origin", "nvd"));
}

void to_json(nlohmann::json& j, const ExploitRecord& e) {
  j = nlohmann::json{{"exploit_id", e.exploit_id}, {"title", e.title},
                     {"url", e.url},               {"local_path", e.local_path},
                     {"codes", e.codes},           {"verified", e.verified},
                     {"file_type", e.file_type}};
}

void from_json(const nlohmann::json& j, ExploitRecord& e) {
  e.exploit_id = j.at("exploit_id").get<std::string>();
  e.title = j.value("title", "");
  e.url = j.value("url", "");
  e.local_path = j.value("local_path", "");
  e.codes = j.value("codes", std::vector<std::string>{});
  e.verified = j.value("verified", false);
  e.file_type = j.value("file_type", "");
}

void to_json(nlohmann::json& j, const PulseRef& p) {
  j = nlohmann::json{{"pulse_id", p.pulse_id},
                     {"cve_ids", p.cve_ids},
                     {"created", format_timestamp(p.created)},
                     {"tags", p.tags}};
}

void from_json(const nlohmann::json& j, PulseRef& p) {
  p.pulse_id = j.at("pulse_id").get<std::string>();
  p.cve_ids = j.value("cve_ids", std::vector<std::string>{});
  p.created = j.contains("created") ? require_timestamp(j.at("created").get<std::string>())
                                    : Timestamp{};
  p.tags = j.value("tags", std::vector<std::string>{});
}

}  // namespace halrm::store
