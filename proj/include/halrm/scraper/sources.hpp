#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <istream>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "halrm/scraper/rate.hpp"
#include "halrm/scraper/transport.hpp"
#include "halrm/store/store.hpp"

namespace halrm::scraper {

enum class Source { Nvd, ExploitDb, Otx, Osv, Epss };

inline constexpr Source kAllSources[] = {Source::Nvd, Source::ExploitDb, Source::Otx, Source::Osv, Source::Epss};

std::string to_string(Source s);
Source parse_source(const std::string& s);

// Per-source sync state, stored in the vulnstore under the source name and
// committed in the same transaction as the data it describes.
struct SourceCursor {
  Source source = Source::Nvd;
  std::optional<Timestamp> watermark;
  std::size_t page_offset = 0;
  // NVD: end of the lastModified window being paged through.
  std::optional<Timestamp> window_end;
  std::optional<Timestamp> last_run;
  int consecutive_failures = 0;
  // Source-specific state: ExploitDB row digests, OTX queue position.
  nlohmann::json extra = nlohmann::json::object();
};

void to_json(nlohmann::json& j, const SourceCursor& c);
void from_json(const nlohmann::json& j, SourceCursor& c);

SourceCursor load_cursor(const store::VulnStore& store, Source source);

struct Credentials {
  std::optional<std::string> nvd_key;
  std::optional<std::string> otx_key;

  // HALRM_NVD_API_KEY and HALRM_OTX_API_KEY.
  static Credentials from_env();
};

struct Endpoints {
  std::string nvd = "https://services.nvd.nist.gov/rest/json/cves/2.0";
  std::string otx = "https://otx.alienvault.com/api/v1/indicators/cve/";
  std::string osv_bulk = "https://osv-vulnerabilities.storage.googleapis.com/all.zip";
  std::string osv_modified = "https://osv-vulnerabilities.storage.googleapis.com/modified_id.csv";
  std::string osv_api = "https://api.osv.dev/v1/vulns/";
  // URL or local path; gzip is detected from the content.
  std::string epss = "https://epss.cyentia.com/epss_scores-current.csv.gz";
};

struct Backoff {
  int max_retries = 5;
  Millis base{2000};
};

// Everything a fetch needs. Budgets are shared so that concurrent workers and
// successive cycles draw from the same window.
struct ScraperContext {
  store::VulnStore& store;
  Transport& transport;
  Clock& clock;
  Credentials credentials;
  Endpoints endpoints;
  std::filesystem::path exploitdb_mirror;
  Backoff backoff;
  std::size_t nvd_page_size = kNvdPageSize;
  std::size_t otx_commit_every = 100;
  std::size_t osv_commit_every = 5000;
  std::shared_ptr<RateBudget> nvd_budget;
  std::shared_ptr<RateBudget> otx_budget;

  ScraperContext(store::VulnStore& s, Transport& t, Clock& c, Credentials creds = {});
};

struct FetchResult {
  std::size_t entries = 0;      // records, exploits, pulse queries or EPSS rows ingested
  std::size_t requests = 0;
  std::size_t quarantined = 0;
  std::size_t rejected = 0;
  std::size_t deferred = 0;     // work left for a later cycle by the rate budget
};

// Parsers, free of I/O.

// NVD longest lastModified range accepted by the API.
inline constexpr int kNvdMaxWindowDays = 120;

struct NvdPage {
  std::size_t start_index = 0;
  std::size_t results_per_page = 0;
  std::size_t total_results = 0;
  std::vector<store::VulnRecord> records;
  std::size_t skipped = 0;  // rejected CVEs and records failing validation
};

// Throws DataError when the body is not an NVD 2.0 CVE response.
NvdPage parse_nvd_page(std::string_view body);
store::VulnRecord nvd_to_record(const nlohmann::json& cve);

// searchsploit's files_exploits.csv.
std::vector<store::ExploitRecord> parse_exploitdb_csv(std::istream& in, const std::filesystem::path& mirror = {});

// One PulseRef per distinct pulse of a CVE indicator response.
std::vector<store::PulseRef> parse_otx_indicator(const std::string& cve_id, std::string_view body);

// Maps an OSV entry. A CVE alias becomes the record id; otherwise the native
// id is kept and the record is marked as non-CVE by its OSV origin.
store::VulnRecord osv_to_record(const nlohmann::json& entry);

struct EpssFeed {
  std::vector<std::pair<std::string, double>> scores;
  std::size_t rejected = 0;
  std::string score_date;
};

EpssFeed parse_epss_csv(std::string_view text);

// Fetchers. Each commits its data page by page together with its cursor.

FetchResult fetch_nvd(ScraperContext& ctx);
FetchResult fetch_exploitdb(ScraperContext& ctx);
// Queries the ids in order, resuming after the cursor position, while the OTX
// budget has room; the remainder is deferred.
FetchResult fetch_otx(ScraperContext& ctx, std::vector<std::string> cve_ids);
enum class OsvMode { Bulk, Incremental };
FetchResult fetch_osv(ScraperContext& ctx, OsvMode mode);
FetchResult fetch_epss(ScraperContext& ctx);

struct CycleRow {
  Source source = Source::Nvd;
  double seconds = 0.0;
  FetchResult result;
  bool ok = true;
  std::string error;
};

struct CycleReport {
  Timestamp started{};
  std::vector<CycleRow> rows;

  bool ok() const;
  const CycleRow* row(Source s) const;
  nlohmann::json to_json(bool timings = true) const;
  void write_table(std::ostream& out, bool timings = true) const;
};

struct CycleOptions {
  std::vector<Source> sources{std::begin(kAllSources), std::end(kAllSources)};
  bool concurrent = true;
};

// One harvesting pass. NVD, ExploitDB, OSV and EPSS run side by side; OTX runs
// afterwards over every stored CVE id. A failing source is recorded in its
// cursor and never stops the others.
CycleReport run_cycle(ScraperContext& ctx, const CycleOptions& options = {});

// Hourly cadence on an injected clock.
class CycleScheduler {
 public:
  explicit CycleScheduler(Millis interval = std::chrono::hours(1)) : interval_(interval) {}

  bool due(Instant now) const { return !last_ || now - *last_ >= interval_; }
  Instant next_due(Instant now) const { return last_ ? *last_ + interval_ : now; }
  void mark(Instant now) { last_ = now; }

 private:
  Millis interval_;
  std::optional<Instant> last_;
};

// Runs cycles whenever due until `cycles` have run (0 = forever).
void run_daemon(ScraperContext& ctx, const CycleOptions& options, std::size_t cycles,
                const std::function<void(const CycleReport&)>& on_cycle = {});

}  // namespace halrm::scraper
