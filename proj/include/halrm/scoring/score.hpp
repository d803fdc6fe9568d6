#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <string_view>

#include "halrm/core/errors.hpp"
#include "halrm/core/time.hpp"
#include "halrm/store/types.hpp"

namespace halrm::scoring {

inline constexpr double kScoreCap = 10.0;
inline constexpr double kPatchedFactor = 0.5;
inline constexpr double kExploitedFactor = 1.25;
inline constexpr double kOldnessFloor = 0.75;

struct ScoringConfig {
  // Age at which the oldness factor bottoms out.
  Days oldness_threshold{365.0};
  // Evaluation instant; equations never read the wall clock.
  Timestamp now{};

  void validate() const;
};

// Thrown when a record has neither an assessed nor a predicted base score.
class MissingBaseScore : public DataError {
 public:
  explicit MissingBaseScore(const std::string& cve_id);
  const std::string& cve_id() const noexcept { return id_; }

 private:
  std::string id_;
};

enum class BaseSource { AssessedV3, Predicted, Metrics, AssessedV2 };
std::string_view to_string(BaseSource s);

struct BaseScore {
  double value = 0.0;
  BaseSource source = BaseSource::AssessedV3;
};

// Picks the stored v3 score, else recomputes from the v3 metrics, else falls
// back to the v2 score. Throws MissingBaseScore otherwise.
BaseScore resolve_base(const store::VulnRecord& v);

// max(1 - 0.25 * age / threshold, 0.75). A publication date after cfg.now
// logs a warning and yields 1.0.
double oldness(Timestamp published, const ScoringConfig& cfg);

struct LazarusScore {
  double score = 0.0;     // with the record's patched flag
  double score_wp = 0.0;  // as if no patch were available
};

LazarusScore lazarus_score(const store::VulnRecord& v, const ScoringConfig& cfg);

struct ScoreBreakdown {
  std::string cve_id;
  double base = 0.0;
  BaseSource base_source = BaseSource::AssessedV3;
  double oldness_factor = 1.0;
  double patched_factor = 1.0;
  double exploited_factor = 1.0;
  double lazarus = 0.0;
  double lazarus_wp = 0.0;
  double epss = 0.0;
  double pulse_term = 0.0;
  double final = 0.0;

  friend bool operator==(const ScoreBreakdown&, const ScoreBreakdown&) = default;
};

// min(10, lazarus * (1 - epss) + lazarus_wp * epss + log10(max(1, pulses))).
ScoreBreakdown hal_score(const store::VulnRecord& v, const ScoringConfig& cfg);

double pulse_term(int pulse_count);

enum class Severity { None, Low, Medium, High, Critical };
std::string_view to_string(Severity s);

// Qualitative rating: 0 None, (0, 4) Low, [4, 7) Medium, [7, 9) High, [9, 10] Critical.
Severity severity_band(double score);

void to_json(nlohmann::json& j, const ScoreBreakdown& b);

}  // namespace halrm::scoring
