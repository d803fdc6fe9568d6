#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "halrm/core/time.hpp"
#include "halrm/store/profiles.hpp"
#include "halrm/store/types.hpp"

namespace halrm::synth {

// Draws built directly on mt19937_64 output so a seed yields the same data
// with every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::size_t below(std::size_t n);
  bool chance(double p) { return uniform() < p; }
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }

 private:
  std::mt19937_64 engine_;
};

struct DeskOptions {
  std::uint64_t seed = 7;
  std::size_t records = 500;
  double received_fraction = 0.1;
  // Include CVE-2014-0157, CVE-2015-3988 and CVE-2016-4428.
  bool include_lazarus_triple = true;
  Timestamp as_of = make_timestamp(2023, 1, 1);
};

struct DeskDataset {
  std::vector<store::VulnRecord> records;  // ordered by id
  std::vector<store::OsSpec> os_pool;
};

// Templated CVE corpus over a pool of eight operating systems. Descriptions
// come from a handful of weakness families whose wording tracks their CVSS
// vectors, so text predicts score without determining it.
DeskDataset desk_dataset(const DeskOptions& options = {});

// The three OpenStack Horizon XSS records, affecting OpenSUSE 13, Solaris
// 11.2 and Debian 8.0 respectively.
std::vector<store::VulnRecord> lazarus_triple();

struct KeywordOptions {
  std::uint64_t seed = 3;
  std::size_t records = 300;
  std::size_t classes = 5;
};

// Rows whose score is a function of exactly one keyword; everything else in
// the description is filler shared by all classes.
std::vector<store::VulnRecord> keyword_dataset(const KeywordOptions& options = {});
std::vector<std::string> keyword_vocabulary();

struct UniverseRow {
  std::string os;
  std::size_t cves;
};

// OS list with per-OS CVE counts of the evaluation universe (24 rows, one
// name listed twice).
const std::vector<UniverseRow>& universe_table();

// CVE universe in which every OS family has exactly its table count of CVEs,
// some of them shared across families. CPEs are family level.
DeskDataset universe_dataset(std::uint64_t seed = 1);

// Sixteen distinct OSs from the universe, in table order.
std::vector<store::OsSpec> universe_pool16();

}  // namespace halrm::synth
