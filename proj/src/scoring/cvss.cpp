#include "halrm/scoring/cvss.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace halrm::scoring {
using namespace halrm::store;

namespace {

double weight(AttackVector v) {
  switch (v) {
    case AttackVector::Network: return 0.85;
    case AttackVector::Adjacent: return 0.62;
    case AttackVector::Local: return 0.55;
    case AttackVector::Physical: return 0.2;
  }
  return 0.0;
}

double weight(AttackComplexity v) { return v == AttackComplexity::Low ? 0.77 : 0.44; }

double weight(PrivilegesRequired v, Scope s) {
  switch (v) {
    case PrivilegesRequired::None: return 0.85;
    case PrivilegesRequired::Low: return s == Scope::Changed ? 0.68 : 0.62;
    case PrivilegesRequired::High: return s == Scope::Changed ? 0.5 : 0.27;
  }
  return 0.0;
}

double weight(UserInteraction v) { return v == UserInteraction::None ? 0.85 : 0.62; }

double weight(Impact v) {
  switch (v) {
    case Impact::High: return 0.56;
    case Impact::Low: return 0.22;
    case Impact::None: return 0.0;
  }
  return 0.0;
}

}  // namespace

double roundup(double x) {
  auto scaled = static_cast<std::int64_t>(std::llround(x * 100000.0));
  if (scaled % 10000 == 0) return static_cast<double>(scaled) / 100000.0;
  return static_cast<double>(scaled / 10000 + 1) / 10.0;
}

double impact_subscore(const MetricVector& m) {
  double iss = 1.0 - (1.0 - weight(m.confidentiality)) * (1.0 - weight(m.integrity)) *
                         (1.0 - weight(m.availability));
  if (m.scope == Scope::Unchanged) return 6.42 * iss;
  return 7.52 * (iss - 0.029) - 3.25 * std::pow(iss - 0.02, 15);
}

double exploitability_subscore(const MetricVector& m) {
  return 8.22 * weight(m.attack_vector) * weight(m.attack_complexity) *
         weight(m.privileges_required, m.scope) * weight(m.user_interaction);
}

double cvss_v31_base(const MetricVector& m) {
  const double impact = impact_subscore(m);
  if (impact <= 0.0) return 0.0;
  const double exploitability = exploitability_subscore(m);
  if (m.scope == Scope::Unchanged) return roundup(std::min(impact + exploitability, 10.0));
  return roundup(std::min(1.08 * (impact + exploitability), 10.0));
}

}  // namespace halrm::scoring
