#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "halrm/core/time.hpp"

namespace halrm::store {

enum class AttackVector { Network, Adjacent, Local, Physical };
enum class AttackComplexity { Low, High };
enum class PrivilegesRequired { None, Low, High };
enum class UserInteraction { None, Required };
enum class Scope { Unchanged, Changed };
enum class Impact { None, Low, High };

// CVSS v3.1 base metric group.
struct MetricVector {
  AttackVector attack_vector = AttackVector::Network;
  AttackComplexity attack_complexity = AttackComplexity::Low;
  PrivilegesRequired privileges_required = PrivilegesRequired::None;
  UserInteraction user_interaction = UserInteraction::None;
  Scope scope = Scope::Unchanged;
  Impact confidentiality = Impact::None;
  Impact integrity = Impact::None;
  Impact availability = Impact::None;

  // Canonical "CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H".
  std::string to_string() const;

  // Accepts the "CVSS:3.0/" or "CVSS:3.1/" prefix (or none) and metrics in
  // any order. Every base metric must appear exactly once; temporal and
  // environmental metrics are ignored. Throws ValidationError.
  static MetricVector parse(std::string_view vector);

  friend bool operator==(const MetricVector&, const MetricVector&) = default;
};

enum class Status { Received, Analyzed };
enum class Provenance { NvdAssessed, Predicted };
enum class Origin { Nvd, Osv, Fixture };

std::string_view to_string(Status s);
std::string_view to_string(Provenance p);
std::string_view to_string(Origin o);
Status parse_status(std::string_view s);
Provenance parse_provenance(std::string_view s);
Origin parse_origin(std::string_view s);

struct VulnRecord {
  std::string cve_id;
  std::string description;
  Timestamp published_date{};
  Timestamp last_modified{};
  Status status = Status::Received;
  std::optional<MetricVector> cvss_v3_metrics;
  std::optional<double> cvss_v3_score;
  std::optional<double> cvss_v2_score;
  bool patched = false;
  bool exploited = false;
  double epss = 0.0;
  int pulse_count = 0;
  std::vector<std::string> affected_cpes;
  std::optional<int> cluster_label;
  Provenance score_provenance = Provenance::NvdAssessed;
  // Which feed produced the core fields. OSV records without a CVE alias keep
  // their native id and are accepted only with Origin::Osv.
  Origin origin = Origin::Nvd;

  bool is_cve() const;

  friend bool operator==(const VulnRecord&, const VulnRecord&) = default;
};

// Throws ValidationError naming the first violated invariant.
void validate(const VulnRecord& r);

struct ExploitRecord {
  std::string exploit_id;
  std::string title;
  std::string url;
  std::string local_path;
  std::vector<std::string> codes;
  bool verified = false;
  std::string file_type;

  friend bool operator==(const ExploitRecord&, const ExploitRecord&) = default;
};

struct PulseRef {
  std::string pulse_id;
  std::vector<std::string> cve_ids;
  Timestamp created{};
  std::vector<std::string> tags;

  friend bool operator==(const PulseRef&, const PulseRef&) = default;
};

void to_json(nlohmann::json& j, const MetricVector& m);
void from_json(const nlohmann::json& j, MetricVector& m);
void to_json(nlohmann::json& j, const VulnRecord& r);
void from_json(const nlohmann::json& j, VulnRecord& r);
void to_json(nlohmann::json& j, const ExploitRecord& e);
void from_json(const nlohmann::json& j, ExploitRecord& e);
void to_json(nlohmann::json& j, const PulseRef& p);
void from_json(const nlohmann::json& j, PulseRef& p);

}  // namespace halrm::store
