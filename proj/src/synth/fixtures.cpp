#include "halrm/synth/fixtures.hpp"

#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "halrm/core/csv.hpp"
#include "halrm/core/cve.hpp"
#include "halrm/core/errors.hpp"
#include "halrm/scraper/archive.hpp"

namespace halrm::synth {

using nlohmann::json;

namespace fs = std::filesystem;

namespace {

std::string nvd_time(Timestamp t) { return format_nvd_timestamp(t); }

void write_file(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + p.string());
  out << content;
}

std::string pulse_id(std::uint64_t n) { return fmt::format("{:024x}", n * 0x9E3779B97F4A7C15ULL); }

}  // namespace

json FixtureCounts::to_json() const {
  return {{"nvd", nvd},         {"nvd_pages", nvd_pages},     {"exploitdb", exploitdb},
          {"otx_with_pulses", otx_with_pulses}, {"osv", osv}, {"osv_native", osv_native},
          {"epss", epss},       {"epss_rejected", epss_rejected}};
}

FixtureCounts FixtureCounts::from_json(const json& j) {
  FixtureCounts c;
  c.nvd = j.at("nvd");
  c.nvd_pages = j.at("nvd_pages");
  c.exploitdb = j.at("exploitdb");
  c.otx_with_pulses = j.at("otx_with_pulses");
  c.osv = j.at("osv");
  c.osv_native = j.at("osv_native");
  c.epss = j.at("epss");
  c.epss_rejected = j.at("epss_rejected");
  return c;
}

json nvd_cve_json(const store::VulnRecord& r) {
  json cve = {{"id", r.cve_id},
              {"sourceIdentifier", "cve@mitre.org"},
              {"published", nvd_time(r.published_date)},
              {"lastModified", nvd_time(r.last_modified)},
              {"vulnStatus", r.status == store::Status::Analyzed ? "Analyzed" : "Received"},
              {"descriptions", json::array({{{"lang", "en"}, {"value", r.description}}})}};
  json metrics = json::object();
  if (r.cvss_v3_score && r.cvss_v3_metrics) {
    metrics["cvssMetricV31"] = json::array({{{"source", "nvd@nist.gov"},
                                             {"type", "Primary"},
                                             {"cvssData",
                                              {{"version", "3.1"},
                                               {"vectorString", r.cvss_v3_metrics->to_string()},
                                               {"baseScore", *r.cvss_v3_score}}}}});
  }
  if (r.cvss_v2_score) {
    metrics["cvssMetricV2"] = json::array(
        {{{"source", "nvd@nist.gov"}, {"type", "Primary"}, {"cvssData", {{"version", "2.0"}, {"baseScore", *r.cvss_v2_score}}}}});
  }
  cve["metrics"] = metrics;
  json refs = json::array();
  refs.push_back({{"url", "https://example.org/advisories/" + r.cve_id}, {"tags", json::array({"Vendor Advisory"})}});
  if (r.patched) refs.push_back({{"url", "https://example.org/patches/" + r.cve_id}, {"tags", json::array({"Patch"})}});
  cve["references"] = refs;
  if (!r.affected_cpes.empty()) {
    json matches = json::array();
    for (const auto& c : r.affected_cpes) matches.push_back({{"vulnerable", true}, {"criteria", c}});
    cve["configurations"] =
        json::array({{{"nodes", json::array({{{"operator", "OR"}, {"negate", false}, {"cpeMatch", matches}}})}}});
  }
  return cve;
}

std::string nvd_page_json(const std::vector<store::VulnRecord>& records, std::size_t start, std::size_t total) {
  json vulns = json::array();
  for (const auto& r : records) vulns.push_back({{"cve", nvd_cve_json(r)}});
  json page = {{"resultsPerPage", records.size()},
               {"startIndex", start},
               {"totalResults", total},
               {"format", "NVD_CVE"},
               {"version", "2.0"},
               {"timestamp", "2023-01-01T00:00:00.000"},
               {"vulnerabilities", vulns}};
  return page.dump();
}

std::string exploitdb_csv(const std::vector<store::ExploitRecord>& exploits) {
  std::ostringstream out;
  csv::write_row(out, {"id", "file", "description", "date_published", "author", "type", "platform", "port",
                       "date_added", "date_updated", "verified", "codes", "tags", "aliases", "screenshot_url",
                       "application_url", "source_url"});
  for (const auto& e : exploits) {
    std::string codes;
    for (const auto& c : e.codes) codes += (codes.empty() ? "" : ";") + c;
    std::string file = fs::path(e.local_path).filename().string();
    file = "exploits/linux/remote/" + file;
    csv::write_row(out, {e.exploit_id, file, e.title, "2020-01-01", "fixture", "remote", "linux", "", "2020-01-01",
                         "2020-01-01", e.verified ? "1" : "0", codes, "", "", "", "", ""});
  }
  return out.str();
}

std::string otx_indicator_json(const std::string& cve_id, int count, std::uint64_t seed) {
  // Distinct pool positions, so pulses repeat across CVEs but never within one.
  Rng rng(seed ^ std::hash<std::string>{}(cve_id));
  std::vector<std::uint64_t> pool(400);
  if (count < 0 || static_cast<std::size_t>(count) > pool.size())
    throw ValidationError(fmt::format("{}: pulse count {} outside the fixture pool", cve_id, count));
  std::iota(pool.begin(), pool.end(), 1);
  json pulses = json::array();
  for (int i = 0; i < count; ++i) {
    std::size_t j = static_cast<std::size_t>(i) + rng.below(pool.size() - static_cast<std::size_t>(i));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    pulses.push_back({{"id", pulse_id(pool[static_cast<std::size_t>(i)])},
                      {"name", fmt::format("Campaign {}", pool[static_cast<std::size_t>(i)])},
                      {"created", "2022-06-01T00:00:00.000000"},
                      {"tags", json::array({"exploit", cve_id})}});
  }
  json body = {{"indicator", cve_id},
               {"type", "CVE"},
               {"pulse_info", {{"count", count}, {"pulses", pulses}}}};
  return body.dump();
}

json osv_entry(const std::string& id, const std::vector<std::string>& aliases, Timestamp modified,
               const std::string& details) {
  json j = {{"schema_version", "1.6.0"},
            {"id", id},
            {"modified", format_timestamp(modified)},
            {"published", format_timestamp(modified)},
            {"details", details},
            {"affected", json::array({{{"package", {{"ecosystem", "PyPI"}, {"name", "fixturepkg"}}}}})}};
  if (!aliases.empty()) j["aliases"] = aliases;
  return j;
}

FixtureCounts write_fixture_set(const fs::path& dir, const FixtureSet& set, const scraper::Endpoints& ep) {
  if (fs::exists(dir) && !fs::is_empty(dir)) throw ValidationError("fixture directory is not empty: " + dir.string());
  if (set.page_size == 0) throw ValidationError("page size must be positive");
  FixtureCounts counts;

  // NVD: bulk pages, plus an empty answer for any later delta window.
  json nvd_manifest = json::array();
  const std::size_t total = set.nvd.size();
  std::size_t pages = total == 0 ? 1 : (total + set.page_size - 1) / set.page_size;
  for (std::size_t p = 0; p < pages; ++p) {
    std::size_t start = p * set.page_size;
    std::vector<store::VulnRecord> slice(set.nvd.begin() + static_cast<std::ptrdiff_t>(start),
                                         set.nvd.begin() + static_cast<std::ptrdiff_t>(std::min(total, start + set.page_size)));
    auto name = fmt::format("page{:04}.json", p);
    write_file(dir / "nvd" / name, nvd_page_json(slice, start, total));
    nvd_manifest.push_back({{"url", fmt::format("{}?resultsPerPage={}&startIndex={}", ep.nvd, set.page_size, start)},
                            {"file", name}});
  }
  write_file(dir / "nvd" / "empty.json", nvd_page_json({}, 0, 0));
  nvd_manifest.push_back(
      {{"url", fmt::format("{}?resultsPerPage={}&startIndex=0&lastModStartDate=*&lastModEndDate=*", ep.nvd,
                           set.page_size)},
       {"file", "empty.json"}});
  write_file(dir / "nvd" / "manifest.json", nvd_manifest.dump(1));
  counts.nvd = total;
  counts.nvd_pages = pages;

  write_file(dir / "exploitdb" / "files_exploits.csv", exploitdb_csv(set.exploits));
  counts.exploitdb = set.exploits.size();

  json otx_manifest = json::array();
  for (const auto& [cve, n] : set.pulses) {
    if (n <= 0) continue;
    otx_manifest.push_back({{"url", ep.otx + cve + "/general"}, {"body", otx_indicator_json(cve, n, set.seed)}});
    ++counts.otx_with_pulses;
  }
  otx_manifest.push_back({{"url", ep.otx + "*"}, {"status", 404}, {"body", "{\"detail\":\"not found\"}"}});
  write_file(dir / "otx" / "manifest.json", otx_manifest.dump(1));

  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& e : set.osv) {
    files.emplace_back(e.at("id").get<std::string>() + ".json", e.dump());
    bool has_cve = is_cve_id(e.at("id").get<std::string>());
    for (const auto& a : e.value("aliases", json::array())) has_cve = has_cve || is_cve_id(a.get<std::string>());
    if (!has_cve) ++counts.osv_native;
  }
  write_file(dir / "osv" / "all.zip", scraper::make_zip(files));
  write_file(dir / "osv" / "modified_id.csv", "");
  json osv_manifest = json::array({{{"url", ep.osv_bulk}, {"file", "all.zip"}},
                                   {{"url", ep.osv_modified}, {"file", "modified_id.csv"}},
                                   {{"url", ep.osv_api + "*"}, {"status", 404}, {"body", "{}"}}});
  write_file(dir / "osv" / "manifest.json", osv_manifest.dump(1));
  counts.osv = set.osv.size();

  std::ostringstream feed;
  feed << "#model_version:v2023.03.01,score_date:2023-01-01T00:00:00+0000\n";
  feed << "cve,epss,percentile\n";
  for (const auto& [cve, p] : set.epss) feed << cve << ',' << csv::format_double(p) << ",0.5\n";
  for (const auto& line : set.epss_bad_rows) feed << line << '\n';
  write_file(dir / "epss" / "epss_scores-current.csv.gz", scraper::gzip(feed.str()));
  write_file(dir / "epss" / "manifest.json",
             json::array({{{"url", ep.epss}, {"file", "epss_scores-current.csv.gz"}}}).dump(1));
  counts.epss = set.epss.size();
  counts.epss_rejected = set.epss_bad_rows.size();

  write_file(dir / "counts.json", counts.to_json().dump(1));
  return counts;
}

FixtureSet desk_fixture_set(const DeskDataset& desk, std::uint64_t seed) {
  FixtureSet set;
  set.seed = seed;
  Rng rng(seed);
  std::size_t edb = 40000;
  for (const auto& r : desk.records) {
    store::VulnRecord n = r;
    n.origin = store::Origin::Nvd;
    n.exploited = false;
    n.epss = 0.0;
    n.pulse_count = 0;
    n.cluster_label.reset();
    set.nvd.push_back(n);

    if (r.exploited) {
      store::ExploitRecord e;
      e.exploit_id = std::to_string(++edb);
      e.title = "Exploit for " + r.cve_id;
      e.local_path = e.exploit_id + (rng.chance(0.5) ? ".py" : ".txt");
      e.codes = {r.cve_id, "OSVDB-" + std::to_string(edb)};
      e.verified = rng.chance(0.5);
      set.exploits.push_back(std::move(e));
    }
    if (r.pulse_count > 0) set.pulses[r.cve_id] = r.pulse_count;
    set.epss.emplace_back(r.cve_id, r.epss);
  }
  // Exploits naming no stored CVE stay pending in the link index.
  for (int i = 0; i < 10; ++i) {
    store::ExploitRecord e;
    e.exploit_id = std::to_string(++edb);
    e.title = "Unrelated proof of concept " + std::to_string(i);
    e.local_path = e.exploit_id + ".c";
    if (i % 2 == 0) e.codes = {fmt::format("CVE-2099-{:04}", 1000 + i)};
    set.exploits.push_back(std::move(e));
  }
  for (int i = 0; i < 20; ++i) set.epss.emplace_back(fmt::format("CVE-2099-{:04}", 2000 + i), 0.01 * i);
  set.epss_bad_rows = {"CVE-2099-3000,1.5,0.9", "CVE-2099-3001,abc,0.1"};

  const Timestamp when = make_timestamp(2022, 12, 1);
  for (std::size_t i = 0; i < desk.records.size() && set.osv.size() < 25; i += 19) {
    const auto& r = desk.records[i];
    set.osv.push_back(osv_entry(fmt::format("GHSA-fx{:02}-{:04x}-aaaa", set.osv.size(), i), {r.cve_id}, when,
                                r.description));
  }
  for (int i = 0; i < 15; ++i) {
    set.osv.push_back(osv_entry(fmt::format("PYSEC-2022-{}", 100 + i), {}, when,
                                "Improper input validation in fixturepkg allows crafted archives to escape the target "
                                "directory."));
  }
  return set;
}

}  // namespace halrm::synth
