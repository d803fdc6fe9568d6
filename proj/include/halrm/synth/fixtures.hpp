#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "halrm/scraper/sources.hpp"
#include "halrm/synth/generator.hpp"

namespace halrm::synth {

// Everything one offline harvesting cycle should see.
struct FixtureSet {
  std::vector<store::VulnRecord> nvd;
  std::vector<nlohmann::json> osv;
  std::vector<store::ExploitRecord> exploits;
  std::map<std::string, int> pulses;  // CVE id -> distinct pulses
  std::vector<std::pair<std::string, double>> epss;
  std::vector<std::string> epss_bad_rows;  // raw lines the feed parser must reject
  std::size_t page_size = scraper::kNvdPageSize;
  std::uint64_t seed = 1;
};

struct FixtureCounts {
  std::size_t nvd = 0;
  std::size_t nvd_pages = 0;
  std::size_t exploitdb = 0;
  std::size_t otx_with_pulses = 0;
  std::size_t osv = 0;
  std::size_t osv_native = 0;  // entries without a CVE alias
  std::size_t epss = 0;
  std::size_t epss_rejected = 0;

  nlohmann::json to_json() const;
  static FixtureCounts from_json(const nlohmann::json& j);
};

// NVD 2.0 "cve" object for a record; nvd_to_record() inverts it.
nlohmann::json nvd_cve_json(const store::VulnRecord& r);
std::string nvd_page_json(const std::vector<store::VulnRecord>& records, std::size_t start, std::size_t total);
std::string exploitdb_csv(const std::vector<store::ExploitRecord>& exploits);
// Indicator response carrying `count` distinct pulses drawn from a shared pool.
std::string otx_indicator_json(const std::string& cve_id, int count, std::uint64_t seed);
nlohmann::json osv_entry(const std::string& id, const std::vector<std::string>& aliases, Timestamp modified,
                         const std::string& details);

// Layout: <dir>/{nvd,otx,osv,epss}/manifest.json plus payloads, the ExploitDB
// mirror in <dir>/exploitdb, and <dir>/counts.json. Directory must be empty or
// absent.
FixtureCounts write_fixture_set(const std::filesystem::path& dir, const FixtureSet& set,
                                const scraper::Endpoints& endpoints = {});

// The desk dataset split across the five sources: NVD carries the core
// fields, ExploitDB the exploited flags, OTX the pulse counts, the EPSS feed
// the probabilities, and OSV a few aliases plus native non-CVE entries.
FixtureSet desk_fixture_set(const DeskDataset& desk, std::uint64_t seed = 11);

}  // namespace halrm::synth
