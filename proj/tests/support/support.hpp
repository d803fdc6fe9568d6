#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "halrm/store/types.hpp"

namespace halrm::test {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

std::string cve(int year, int seq);

store::MetricVector random_metrics(Rng& rng);

// Analyzed record with an assessed v3 score.
store::VulnRecord scored_record(const std::string& id, double base, Timestamp published);

// CVE-2017-11882: base 7.8 (AV:L/AC:L/PR:N/UI:R/S:U/C:H/I:H/A:H), patched,
// exploited, EPSS 0.9799, published 2017-11-20.
store::VulnRecord cve_2017_11882(int pulses);

// A "now" far enough past 2017 that the oldness factor sits on its floor.
Timestamp worked_example_now();

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& p);

}  // namespace halrm::test
