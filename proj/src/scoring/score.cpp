#include "halrm/scoring/score.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>

#include "halrm/scoring/cvss.hpp"

namespace halrm::scoring {

void ScoringConfig::validate() const {
  if (!(oldness_threshold.count() > 0.0)) {
    throw ValidationError("oldness_threshold must be positive");
  }
}

MissingBaseScore::MissingBaseScore(const std::string& cve_id)
    : DataError(cve_id + " has no base score (status Received, not yet predicted); train a model "
                         "and run `halrm predict` before assessing it"),
      id_(cve_id) {}

std::string_view to_string(BaseSource s) {
  switch (s) {
    case BaseSource::AssessedV3: return "assessed_v3";
    case BaseSource::Predicted: return "predicted";
    case BaseSource::Metrics: return "v3_metrics";
    case BaseSource::AssessedV2: return "assessed_v2";
  }
  return "assessed_v3";
}

BaseScore resolve_base(const store::VulnRecord& v) {
  if (v.cvss_v3_score) {
    return {*v.cvss_v3_score, v.score_provenance == store::Provenance::Predicted
                                  ? BaseSource::Predicted
                                  : BaseSource::AssessedV3};
  }
  if (v.cvss_v3_metrics) return {cvss_v31_base(*v.cvss_v3_metrics), BaseSource::Metrics};
  if (v.cvss_v2_score) return {*v.cvss_v2_score, BaseSource::AssessedV2};
  throw MissingBaseScore(v.cve_id);
}

double oldness(Timestamp published, const ScoringConfig& cfg) {
  if (published > cfg.now) {
    spdlog::warn("publication date {} is after the evaluation instant {}; oldness clamped to 1.0",
                 format_timestamp(published), format_timestamp(cfg.now));
    return 1.0;
  }
  const Days age = cfg.now - published;
  return std::max(1.0 - 0.25 * (age / cfg.oldness_threshold), kOldnessFloor);
}

namespace {

struct Factors {
  BaseScore base;
  double oldness;
  double patched;
  double exploited;
};

Factors factors(const store::VulnRecord& v, const ScoringConfig& cfg) {
  return {resolve_base(v), oldness(v.published_date, cfg), v.patched ? kPatchedFactor : 1.0,
          v.exploited ? kExploitedFactor : 1.0};
}

}  // namespace

LazarusScore lazarus_score(const store::VulnRecord& v, const ScoringConfig& cfg) {
  const auto f = factors(v, cfg);
  const double wp = f.base.value * f.oldness * f.exploited;
  return {wp * f.patched, wp};
}

double pulse_term(int pulse_count) { return std::log10(static_cast<double>(std::max(1, pulse_count))); }

ScoreBreakdown hal_score(const store::VulnRecord& v, const ScoringConfig& cfg) {
  const auto f = factors(v, cfg);
  ScoreBreakdown b;
  b.cve_id = v.cve_id;
  b.base = f.base.value;
  b.base_source = f.base.source;
  b.oldness_factor = f.oldness;
  b.patched_factor = f.patched;
  b.exploited_factor = f.exploited;
  b.lazarus_wp = f.base.value * f.oldness * f.exploited;
  b.lazarus = b.lazarus_wp * f.patched;
  b.epss = v.epss;
  b.pulse_term = pulse_term(v.pulse_count);
  // lazarus*(1-epss) + lazarus_wp*epss, arranged so an unpatched record
  // collapses to exactly lazarus and the result is monotone in epss.
  const double mixed = b.lazarus + (b.lazarus_wp - b.lazarus) * b.epss;
  b.final = std::min(kScoreCap, mixed + b.pulse_term);
  return b;
}

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::None: return "None";
    case Severity::Low: return "Low";
    case Severity::Medium: return "Medium";
    case Severity::High: return "High";
    case Severity::Critical: return "Critical";
  }
  return "None";
}

Severity severity_band(double score) {
  if (score <= 0.0) return Severity::None;
  if (score < 4.0) return Severity::Low;
  if (score < 7.0) return Severity::Medium;
  if (score < 9.0) return Severity::High;
  return Severity::Critical;
}

void to_json(nlohmann::json& j, const ScoreBreakdown& b) {
  j = nlohmann::json{{"cve_id", b.cve_id},
                     {"base", b.base},
                     {"base_source", to_string(b.base_source)},
                     {"oldness_factor", b.oldness_factor},
                     {"patched_factor", b.patched_factor},
                     {"exploited_factor", b.exploited_factor},
                     {"lazarus", b.lazarus},
                     {"lazarus_wp", b.lazarus_wp},
                     {"epss", b.epss},
                     {"pulse_term", b.pulse_term},
                     {"final", b.final},
                     {"severity", to_string(severity_band(b.final))}};
}

}  // namespace halrm::scoring
