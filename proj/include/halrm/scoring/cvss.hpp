#pragma once

#include "halrm/store/types.hpp"

namespace halrm::scoring {

// CVSS v3.1 "Roundup": smallest one-decimal number >= x, computed on an
// integer grid so that e.g. 4.000000000000001 rounds to 4.0 and not 4.1.
double roundup(double x);

// CVSS v3.1 base score in [0, 10].
double cvss_v31_base(const store::MetricVector& m);

// Sub-scores, exposed for explain output and tests.
double impact_subscore(const store::MetricVector& m);
double exploitability_subscore(const store::MetricVector& m);

}  // namespace halrm::scoring
