#include "halrm/scraper/sources.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>
#include <zlib.h>

#include "halrm/core/csv.hpp"
#include "halrm/core/cve.hpp"
#include "halrm/core/errors.hpp"
#include "halrm/scoring/cvss.hpp"
#include "halrm/scraper/archive.hpp"

namespace halrm::scraper {

using nlohmann::json;

std::string to_string(Source s) {
  switch (s) {
    case Source::Nvd: return "nvd";
    case Source::ExploitDb: return "exploitdb";
    case Source::Otx: return "otx";
    case Source::Osv: return "osv";
    case Source::Epss: return "epss";
  }
  return "?";
}

Source parse_source(const std::string& s) {
  for (Source src : kAllSources)
    if (to_string(src) == s) return src;
  throw ValidationError("unknown source: " + s);
}

namespace {

json opt_time(const std::optional<Timestamp>& t) { return t ? json(format_timestamp(*t)) : json(nullptr); }

std::optional<Timestamp> read_time(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return require_timestamp(j.at(key).get<std::string>());
}

}  // namespace

void to_json(json& j, const SourceCursor& c) {
  j = {{"source", to_string(c.source)},
       {"watermark", opt_time(c.watermark)},
       {"page_offset", c.page_offset},
       {"window_end", opt_time(c.window_end)},
       {"last_run", opt_time(c.last_run)},
       {"consecutive_failures", c.consecutive_failures},
       {"extra", c.extra}};
}

void from_json(const json& j, SourceCursor& c) {
  c.source = parse_source(j.at("source").get<std::string>());
  c.watermark = read_time(j, "watermark");
  c.page_offset = j.value("page_offset", std::size_t{0});
  c.window_end = read_time(j, "window_end");
  c.last_run = read_time(j, "last_run");
  c.consecutive_failures = j.value("consecutive_failures", 0);
  c.extra = j.value("extra", json::object());
}

SourceCursor load_cursor(const store::VulnStore& store, Source source) {
  if (auto j = store.cursor(to_string(source))) return j->get<SourceCursor>();
  SourceCursor c;
  c.source = source;
  return c;
}

Credentials Credentials::from_env() {
  Credentials c;
  if (const char* k = std::getenv("HALRM_NVD_API_KEY"); k && *k) c.nvd_key = k;
  if (const char* k = std::getenv("HALRM_OTX_API_KEY"); k && *k) c.otx_key = k;
  return c;
}

ScraperContext::ScraperContext(store::VulnStore& s, Transport& t, Clock& c, Credentials creds)
    : store(s),
      transport(t),
      clock(c),
      credentials(std::move(creds)),
      nvd_budget(std::make_shared<RateBudget>(credentials.nvd_key ? 50 : 5, std::chrono::seconds(30))),
      otx_budget(std::make_shared<RateBudget>(10000, std::chrono::seconds(3600))) {}

namespace {

void commit_cursor(store::VulnStore& store, store::Transaction tx, const SourceCursor& cur) {
  tx.cursors[to_string(cur.source)] = cur;
  store.commit(tx);
}

HttpResponse request(ScraperContext& ctx, RateBudget* budget, const HttpRequest& req, FetchResult& res,
                     bool allow_404 = false) {
  for (int attempt = 0;; ++attempt) {
    if (budget) budget->acquire(ctx.clock);
    ++res.requests;
    HttpResponse r = ctx.transport.get(req);
    if (r.status == 200 || (allow_404 && r.status == 404)) return r;
    bool transient = r.status == 403 || r.status == 429 || r.status == 503;
    if (!transient || attempt >= ctx.backoff.max_retries)
      throw NetworkError(fmt::format("{} returned HTTP {}", req.url, r.status), r.status);
    Millis wait = ctx.backoff.base * (1LL << attempt);
    spdlog::warn("{}: HTTP {}, retrying in {} ms", req.url, r.status, wait.count());
    ctx.clock.sleep_for(wait);
  }
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Timestamp required_time(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) throw DataError(std::string("missing ") + key);
  auto t = parse_timestamp(j.at(key).get<std::string>());
  if (!t) throw DataError(std::string("bad ") + key + ": " + j.at(key).get<std::string>());
  return *t;
}

const json* primary_metric(const json& metrics, const char* key) {
  if (!metrics.contains(key) || !metrics.at(key).is_array() || metrics.at(key).empty()) return nullptr;
  for (const auto& m : metrics.at(key))
    if (m.value("type", "") == "Primary") return &m;
  return &metrics.at(key).front();
}

}  // namespace

store::VulnRecord nvd_to_record(const json& cve) {
  store::VulnRecord r;
  r.cve_id = cve.at("id").get<std::string>();
  r.origin = store::Origin::Nvd;
  if (cve.contains("descriptions")) {
    for (const auto& d : cve.at("descriptions")) {
      if (d.value("lang", "") == "en") {
        r.description = d.value("value", "");
        break;
      }
    }
  }
  r.published_date = required_time(cve, "published");
  r.last_modified = cve.contains("lastModified") ? required_time(cve, "lastModified") : r.published_date;

  if (cve.contains("metrics")) {
    const auto& metrics = cve.at("metrics");
    const json* v3 = primary_metric(metrics, "cvssMetricV31");
    if (!v3) v3 = primary_metric(metrics, "cvssMetricV30");
    if (v3) {
      const auto& data = v3->at("cvssData");
      r.cvss_v3_metrics = store::MetricVector::parse(data.at("vectorString").get<std::string>());
      r.cvss_v3_score = data.at("baseScore").get<double>();
    }
    if (const json* v2 = primary_metric(metrics, "cvssMetricV2"))
      r.cvss_v2_score = v2->at("cvssData").at("baseScore").get<double>();
  }
  r.status = r.cvss_v3_score || r.cvss_v2_score ? store::Status::Analyzed : store::Status::Received;

  if (cve.contains("references")) {
    for (const auto& ref : cve.at("references")) {
      if (!ref.contains("tags")) continue;
      for (const auto& t : ref.at("tags"))
        if (t == "Patch") r.patched = true;
    }
  }
  if (cve.contains("configurations")) {
    std::set<std::string> seen;
    for (const auto& conf : cve.at("configurations")) {
      for (const auto& node : conf.value("nodes", json::array())) {
        for (const auto& m : node.value("cpeMatch", json::array())) {
          if (!m.value("vulnerable", false)) continue;
          auto c = m.value("criteria", "");
          if (!c.empty() && seen.insert(c).second) r.affected_cpes.push_back(c);
        }
      }
    }
  }
  store::validate(r);
  return r;
}

NvdPage parse_nvd_page(std::string_view body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw DataError(std::string("NVD response is not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("totalResults") || !j.contains("vulnerabilities") ||
      !j.at("vulnerabilities").is_array())
    throw DataError("NVD response lacks totalResults or vulnerabilities");
  NvdPage p;
  try {
    p.total_results = j.at("totalResults").get<std::size_t>();
    p.start_index = j.value("startIndex", std::size_t{0});
    p.results_per_page = j.at("vulnerabilities").size();
  } catch (const json::exception& e) {
    throw DataError(std::string("NVD paging fields: ") + e.what());
  }
  for (const auto& v : j.at("vulnerabilities")) {
    try {
      const auto& cve = v.at("cve");
      if (cve.value("vulnStatus", "") == "Rejected") {
        ++p.skipped;
        continue;
      }
      p.records.push_back(nvd_to_record(cve));
    } catch (const std::exception& e) {
      ++p.skipped;
      spdlog::warn("nvd: skipping entry: {}", e.what());
    }
  }
  return p;
}

std::vector<store::ExploitRecord> parse_exploitdb_csv(std::istream& in, const std::filesystem::path& mirror) {
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header) return {};
  auto col = [&](const char* name) -> std::optional<std::size_t> {
    auto it = std::find(header->begin(), header->end(), name);
    if (it == header->end()) return std::nullopt;
    return static_cast<std::size_t>(it - header->begin());
  };
  auto id_col = col("id");
  auto file_col = col("file");
  auto desc_col = col("description");
  if (!id_col || !file_col || !desc_col) throw DataError("ExploitDB index lacks id, file or description columns");
  auto codes_col = col("codes");
  auto verified_col = col("verified");

  std::vector<store::ExploitRecord> out;
  while (auto row = reader.next()) {
    if (row->size() == 1 && (*row)[0].empty()) continue;
    auto field = [&](std::optional<std::size_t> c) -> std::string {
      return c && *c < row->size() ? (*row)[*c] : std::string();
    };
    store::ExploitRecord e;
    e.exploit_id = field(id_col);
    if (e.exploit_id.empty()) throw DataError(fmt::format("ExploitDB index line {}: empty id", reader.line()));
    e.title = field(desc_col);
    e.url = "https://www.exploit-db.com/exploits/" + e.exploit_id;
    std::string file = field(file_col);
    e.local_path = mirror.empty() ? file : (mirror / file).string();
    std::string codes = field(codes_col);
    std::size_t pos = 0;
    while (pos <= codes.size() && !codes.empty()) {
      auto semi = codes.find(';', pos);
      std::string c = codes.substr(pos, semi == std::string::npos ? std::string::npos : semi - pos);
      if (!c.empty()) e.codes.push_back(c);
      if (semi == std::string::npos) break;
      pos = semi + 1;
    }
    e.verified = field(verified_col) == "1";
    auto ext = std::filesystem::path(file).extension().string();
    e.file_type = ext.empty() ? "" : ext.substr(1);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<store::PulseRef> parse_otx_indicator(const std::string& cve_id, std::string_view body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw DataError(std::string("OTX response is not JSON: ") + e.what());
  }
  std::vector<store::PulseRef> out;
  if (!j.is_object() || !j.contains("pulse_info")) return out;
  const auto& pulses = j.at("pulse_info").value("pulses", json::array());
  std::set<std::string> seen;
  for (const auto& p : pulses) {
    store::PulseRef ref;
    ref.pulse_id = p.value("id", "");
    if (ref.pulse_id.empty() || !seen.insert(ref.pulse_id).second) continue;
    ref.cve_ids = {cve_id};
    if (auto t = parse_timestamp(p.value("created", ""))) ref.created = *t;
    for (const auto& t : p.value("tags", json::array()))
      if (t.is_string()) ref.tags.push_back(t.get<std::string>());
    out.push_back(std::move(ref));
  }
  return out;
}

store::VulnRecord osv_to_record(const json& entry) {
  store::VulnRecord r;
  std::string id = entry.at("id").get<std::string>();
  r.cve_id = id;
  if (!is_cve_id(id)) {
    for (const auto& a : entry.value("aliases", json::array())) {
      if (a.is_string() && is_cve_id(a.get<std::string>())) {
        r.cve_id = a.get<std::string>();
        break;
      }
    }
  }
  r.origin = store::Origin::Osv;
  r.description = entry.value("details", "");
  if (r.description.empty()) r.description = entry.value("summary", "");
  r.last_modified = required_time(entry, "modified");
  r.published_date = entry.contains("published") ? required_time(entry, "published") : r.last_modified;
  for (const auto& s : entry.value("severity", json::array())) {
    if (s.value("type", "") != "CVSS_V3") continue;
    r.cvss_v3_metrics = store::MetricVector::parse(s.value("score", ""));
    r.cvss_v3_score = scoring::cvss_v31_base(*r.cvss_v3_metrics);
    r.status = store::Status::Analyzed;
    break;
  }
  for (const auto& ref : entry.value("references", json::array()))
    if (ref.value("type", "") == "FIX") r.patched = true;
  store::validate(r);
  return r;
}

EpssFeed parse_epss_csv(std::string_view text) {
  EpssFeed feed;
  std::string s(text);
  std::istringstream in(s);
  csv::Reader reader(in);
  std::optional<std::size_t> cve_col, epss_col;
  while (auto row = reader.next()) {
    if (row->empty() || (row->size() == 1 && (*row)[0].empty())) continue;
    if (!(*row)[0].empty() && (*row)[0][0] == '#') {
      for (const auto& f : *row) {
        auto at = f.find("score_date:");
        if (at != std::string::npos) feed.score_date = f.substr(at + 11);
      }
      continue;
    }
    if (!cve_col) {
      for (std::size_t i = 0; i < row->size(); ++i) {
        if ((*row)[i] == "cve") cve_col = i;
        if ((*row)[i] == "epss") epss_col = i;
      }
      if (!cve_col || !epss_col) throw DataError("EPSS feed header lacks cve and epss columns");
      continue;
    }
    auto reject = [&](const char* why) {
      ++feed.rejected;
      spdlog::warn("epss: line {} rejected: {}", reader.line(), why);
    };
    if (row->size() <= std::max(*cve_col, *epss_col)) {
      reject("too few fields");
      continue;
    }
    const std::string& id = (*row)[*cve_col];
    const std::string& value = (*row)[*epss_col];
    if (!is_cve_id(id)) {
      reject("not a CVE id");
      continue;
    }
    char* end = nullptr;
    double p = std::strtod(value.c_str(), &end);
    if (value.empty() || end != value.c_str() + value.size() || !std::isfinite(p)) {
      reject("probability is not a number");
      continue;
    }
    if (p < 0.0 || p > 1.0) {
      reject("probability outside [0,1]");
      continue;
    }
    feed.scores.emplace_back(id, p);
  }
  return feed;
}

FetchResult fetch_nvd(ScraperContext& ctx) {
  FetchResult res;
  SourceCursor cur = load_cursor(ctx.store, Source::Nvd);
  const Timestamp now = to_timestamp(ctx.clock.now());
  HttpRequest req;
  if (ctx.credentials.nvd_key) req.headers["apiKey"] = *ctx.credentials.nvd_key;

  for (;;) {
    if (!cur.window_end) {
      if (cur.watermark && *cur.watermark >= now) break;
      Timestamp end = now;
      auto max_window = std::chrono::days(kNvdMaxWindowDays);
      if (cur.watermark && end - *cur.watermark > max_window) end = *cur.watermark + max_window;
      cur.window_end = end;
      cur.page_offset = 0;
    }
    req.url = fmt::format("{}?resultsPerPage={}&startIndex={}", ctx.endpoints.nvd, ctx.nvd_page_size,
                          cur.page_offset);
    if (cur.watermark) {
      req.url += "&lastModStartDate=" + percent_encode(format_nvd_timestamp(*cur.watermark)) +
                 "&lastModEndDate=" + percent_encode(format_nvd_timestamp(*cur.window_end));
    }
    HttpResponse resp = request(ctx, ctx.nvd_budget.get(), req, res);

    NvdPage page;
    std::size_t advance;
    try {
      page = parse_nvd_page(resp.body);
      advance = page.results_per_page;
    } catch (const DataError& e) {
      auto saved = ctx.store.quarantine("nvd", resp.body);
      ++res.quarantined;
      if (!cur.extra.contains("total"))
        throw DataError(fmt::format("nvd: unusable first page ({}), payload saved to {}", e.what(), saved.string()));
      spdlog::error("nvd: page at {} quarantined: {}", cur.page_offset, e.what());
      page.total_results = cur.extra.at("total").get<std::size_t>();
      advance = ctx.nvd_page_size;
    }
    res.entries += page.records.size();
    cur.page_offset += advance;
    cur.extra["total"] = page.total_results;
    bool window_done = advance == 0 || cur.page_offset >= page.total_results;
    if (window_done) {
      cur.watermark = cur.window_end;
      cur.window_end.reset();
      cur.page_offset = 0;
      cur.extra.erase("total");
    }
    store::Transaction tx;
    tx.upserts = std::move(page.records);
    commit_cursor(ctx.store, std::move(tx), cur);
    if (window_done && *cur.watermark >= now) break;
  }
  return res;
}

FetchResult fetch_exploitdb(ScraperContext& ctx) {
  const auto& mirror = ctx.exploitdb_mirror;
  auto index = mirror / "files_exploits.csv";
  if (mirror.empty() || !std::filesystem::exists(index))
    throw DataError(fmt::format(
        "ExploitDB mirror not found{}: run `searchsploit -u` (or clone "
        "https://gitlab.com/exploit-database/exploitdb) and point exploitdb_mirror at the directory holding "
        "files_exploits.csv",
        mirror.empty() ? std::string() : " at " + mirror.string()));

  FetchResult res;
  SourceCursor cur = load_cursor(ctx.store, Source::ExploitDb);
  std::string content = read_file(index);
  auto file_crc = static_cast<std::uint64_t>(
      crc32(0, reinterpret_cast<const Bytef*>(content.data()), static_cast<uInt>(content.size())));
  if (cur.extra.value("file_crc", std::uint64_t{0}) == file_crc && cur.extra.contains("rows")) {
    cur.watermark = to_timestamp(ctx.clock.now());
    commit_cursor(ctx.store, {}, cur);
    return res;
  }

  std::istringstream in(content);
  auto exploits = parse_exploitdb_csv(in, mirror);
  json previous = cur.extra.value("rows", json::object());
  json rows = json::object();
  store::Transaction tx;
  for (auto& e : exploits) {
    std::string doc = json(e).dump();
    auto digest = static_cast<std::uint64_t>(
        crc32(0, reinterpret_cast<const Bytef*>(doc.data()), static_cast<uInt>(doc.size())));
    rows[e.exploit_id] = digest;
    if (previous.contains(e.exploit_id) && previous.at(e.exploit_id).get<std::uint64_t>() == digest) continue;
    tx.exploits.push_back(std::move(e));
  }
  res.entries = tx.exploits.size();
  cur.extra = {{"file_crc", file_crc}, {"rows", std::move(rows)}};
  cur.watermark = to_timestamp(ctx.clock.now());
  commit_cursor(ctx.store, std::move(tx), cur);
  return res;
}

FetchResult fetch_otx(ScraperContext& ctx, std::vector<std::string> cve_ids) {
  if (!ctx.credentials.otx_key) throw ValidationError("OTX needs an API key; set HALRM_OTX_API_KEY");
  std::erase_if(cve_ids, [](const std::string& id) { return !is_cve_id(id); });
  std::sort(cve_ids.begin(), cve_ids.end());
  cve_ids.erase(std::unique(cve_ids.begin(), cve_ids.end()), cve_ids.end());

  FetchResult res;
  SourceCursor cur = load_cursor(ctx.store, Source::Otx);
  std::string after = cur.extra.value("after", "");
  auto it = after.empty() ? cve_ids.begin() : std::upper_bound(cve_ids.begin(), cve_ids.end(), after);

  store::Transaction tx;
  std::size_t since_commit = 0;
  auto flush = [&] {
    cur.extra["after"] = after;
    commit_cursor(ctx.store, std::move(tx), cur);
    tx = {};
    since_commit = 0;
  };

  HttpRequest req;
  req.headers["X-OTX-API-KEY"] = *ctx.credentials.otx_key;
  try {
    for (; it != cve_ids.end(); ++it) {
      Instant now = ctx.clock.now();
      if (!ctx.otx_budget->try_acquire(now)) break;
      ++res.requests;
      req.url = ctx.endpoints.otx + *it + "/general";
      HttpResponse resp = ctx.transport.get(req);
      if (resp.status == 429) {
        ctx.otx_budget->exhaust(now);
        spdlog::warn("otx: rate limited by server, deferring until the window resets");
        break;
      }
      if (resp.status == 200) {
        try {
          auto pulses = parse_otx_indicator(*it, resp.body);
          tx.pulses.insert(tx.pulses.end(), pulses.begin(), pulses.end());
        } catch (const DataError& e) {
          ctx.store.quarantine("otx", resp.body);
          ++res.quarantined;
          spdlog::error("otx: {}: {}", *it, e.what());
        }
      } else if (resp.status != 404) {
        throw NetworkError(fmt::format("{} returned HTTP {}", req.url, resp.status), resp.status);
      }
      ++res.entries;
      after = *it;
      if (++since_commit >= ctx.otx_commit_every) flush();
    }
  } catch (...) {
    flush();
    throw;
  }
  res.deferred = static_cast<std::size_t>(cve_ids.end() - it);
  if (res.deferred == 0) {
    after.clear();
    cur.watermark = to_timestamp(ctx.clock.now());
  }
  flush();
  return res;
}

namespace {

FetchResult fetch_osv_bulk(ScraperContext& ctx, SourceCursor cur) {
  FetchResult res;
  HttpRequest req{ctx.endpoints.osv_bulk, {}};
  HttpResponse resp = request(ctx, nullptr, req, res);
  store::Transaction tx;
  std::optional<Timestamp> newest;
  for_each_zip_entry(resp.body, [&](const std::string& name, const std::string& contents) {
    if (!name.ends_with(".json")) return;
    try {
      auto rec = osv_to_record(json::parse(contents));
      if (!newest || rec.last_modified > *newest) newest = rec.last_modified;
      tx.upserts.push_back(std::move(rec));
      ++res.entries;
    } catch (const std::exception& e) {
      ctx.store.quarantine("osv", contents);
      ++res.quarantined;
      spdlog::warn("osv: {} quarantined: {}", name, e.what());
    }
    if (tx.upserts.size() >= ctx.osv_commit_every) {
      ctx.store.commit(tx);
      tx = {};
    }
  });
  cur.watermark = newest ? *newest : to_timestamp(ctx.clock.now());
  cur.extra["mode"] = "incremental";
  commit_cursor(ctx.store, std::move(tx), cur);
  return res;
}

FetchResult fetch_osv_incremental(ScraperContext& ctx, SourceCursor cur) {
  FetchResult res;
  if (!cur.watermark) throw ValidationError("osv: incremental mode needs a watermark; run a bulk import first");
  HttpRequest req{ctx.endpoints.osv_modified, {}};
  HttpResponse resp = request(ctx, nullptr, req, res);

  std::vector<std::pair<Timestamp, std::string>> changed;
  std::istringstream in(resp.body);
  csv::Reader reader(in);
  while (auto row = reader.next()) {
    if (row->size() < 2) continue;
    auto t = parse_timestamp((*row)[0]);
    if (!t) continue;
    if (*t <= *cur.watermark) continue;
    const std::string& path = (*row)[1];
    changed.emplace_back(*t, path.substr(path.rfind('/') + 1));
  }
  std::sort(changed.begin(), changed.end());

  store::Transaction tx;
  for (std::size_t i = 0; i < changed.size(); ++i) {
    const auto& [when, id] = changed[i];
    HttpResponse r = request(ctx, nullptr, {ctx.endpoints.osv_api + id, {}}, res, true);
    if (r.status == 200) {
      try {
        tx.upserts.push_back(osv_to_record(json::parse(r.body)));
        ++res.entries;
      } catch (const std::exception& e) {
        ctx.store.quarantine("osv", r.body);
        ++res.quarantined;
        spdlog::warn("osv: {} quarantined: {}", id, e.what());
      }
    }
    // Commit only between distinct timestamps, so a restart resumes cleanly.
    bool boundary = i + 1 == changed.size() || changed[i + 1].first != when;
    if (boundary && (tx.upserts.size() >= ctx.osv_commit_every || i + 1 == changed.size())) {
      cur.watermark = when;
      commit_cursor(ctx.store, std::move(tx), cur);
      tx = {};
    }
  }
  if (changed.empty()) commit_cursor(ctx.store, {}, cur);
  return res;
}

}  // namespace

FetchResult fetch_osv(ScraperContext& ctx, OsvMode mode) {
  SourceCursor cur = load_cursor(ctx.store, Source::Osv);
  return mode == OsvMode::Bulk ? fetch_osv_bulk(ctx, std::move(cur)) : fetch_osv_incremental(ctx, std::move(cur));
}

FetchResult fetch_epss(ScraperContext& ctx) {
  FetchResult res;
  const std::string& where = ctx.endpoints.epss;
  std::string body;
  if (where.find("://") != std::string::npos) {
    body = request(ctx, nullptr, {where, {}}, res).body;
  } else {
    body = read_file(where);
  }
  if (looks_gzipped(body)) body = gunzip(body);
  EpssFeed feed = parse_epss_csv(body);
  res.entries = feed.scores.size();
  res.rejected = feed.rejected;

  SourceCursor cur = load_cursor(ctx.store, Source::Epss);
  cur.watermark = to_timestamp(ctx.clock.now());
  if (!feed.score_date.empty()) cur.extra["score_date"] = feed.score_date;
  store::Transaction tx;
  tx.epss = std::move(feed.scores);
  commit_cursor(ctx.store, std::move(tx), cur);
  return res;
}

bool CycleReport::ok() const {
  return std::all_of(rows.begin(), rows.end(), [](const CycleRow& r) { return r.ok; });
}

const CycleRow* CycleReport::row(Source s) const {
  for (const auto& r : rows)
    if (r.source == s) return &r;
  return nullptr;
}

json CycleReport::to_json(bool timings) const {
  json sources = json::array();
  for (const auto& r : rows) {
    json j = {{"source", scraper::to_string(r.source)},
              {"entries", r.result.entries},
              {"requests", r.result.requests},
              {"quarantined", r.result.quarantined},
              {"rejected", r.result.rejected},
              {"deferred", r.result.deferred},
              {"ok", r.ok}};
    if (timings) j["seconds"] = r.seconds;
    if (!r.ok) j["error"] = r.error;
    sources.push_back(std::move(j));
  }
  return {{"started", format_timestamp(started)}, {"sources", sources}};
}

void CycleReport::write_table(std::ostream& out, bool timings) const {
  out << fmt::format("{:<10} {:>10} {:>9} {:>9}  {}\n", "source", timings ? "time (s)" : "", "entries", "deferred",
                     "status");
  for (const auto& r : rows) {
    out << fmt::format("{:<10} {:>10} {:>9} {:>9}  {}\n", scraper::to_string(r.source),
                       timings ? fmt::format("{:.2f}", r.seconds) : "", r.result.entries, r.result.deferred,
                       r.ok ? "ok" : "failed: " + r.error);
  }
}

namespace {

CycleRow run_source(ScraperContext& ctx, Source s, const std::function<FetchResult()>& fetch) {
  CycleRow row;
  row.source = s;
  auto t0 = std::chrono::steady_clock::now();
  try {
    row.result = fetch();
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
    spdlog::error("{}: {}", to_string(s), e.what());
  }
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  SourceCursor cur = load_cursor(ctx.store, s);
  cur.last_run = to_timestamp(ctx.clock.now());
  cur.consecutive_failures = row.ok ? 0 : cur.consecutive_failures + 1;
  try {
    commit_cursor(ctx.store, {}, cur);
  } catch (const std::exception& e) {
    spdlog::error("{}: cannot record cursor: {}", to_string(s), e.what());
  }
  return row;
}

}  // namespace

CycleReport run_cycle(ScraperContext& ctx, const CycleOptions& options) {
  CycleReport report;
  report.started = to_timestamp(ctx.clock.now());
  auto wants = [&](Source s) {
    return std::find(options.sources.begin(), options.sources.end(), s) != options.sources.end();
  };

  std::vector<std::pair<Source, std::function<FetchResult()>>> first;
  if (wants(Source::Nvd)) first.emplace_back(Source::Nvd, [&] { return fetch_nvd(ctx); });
  if (wants(Source::ExploitDb)) first.emplace_back(Source::ExploitDb, [&] { return fetch_exploitdb(ctx); });
  if (wants(Source::Osv)) {
    first.emplace_back(Source::Osv, [&] {
      bool bulk = !load_cursor(ctx.store, Source::Osv).watermark;
      return fetch_osv(ctx, bulk ? OsvMode::Bulk : OsvMode::Incremental);
    });
  }
  if (wants(Source::Epss)) first.emplace_back(Source::Epss, [&] { return fetch_epss(ctx); });

  std::vector<CycleRow> rows(first.size());
  if (options.concurrent && first.size() > 1) {
    std::vector<std::thread> workers;
    for (std::size_t i = 0; i < first.size(); ++i)
      workers.emplace_back([&, i] { rows[i] = run_source(ctx, first[i].first, first[i].second); });
    for (auto& w : workers) w.join();
  } else {
    for (std::size_t i = 0; i < first.size(); ++i) rows[i] = run_source(ctx, first[i].first, first[i].second);
  }
  if (wants(Source::Otx)) rows.push_back(run_source(ctx, Source::Otx, [&] { return fetch_otx(ctx, ctx.store.ids()); }));

  for (Source s : kAllSources)
    for (auto& r : rows)
      if (r.source == s) report.rows.push_back(std::move(r));
  return report;
}

void run_daemon(ScraperContext& ctx, const CycleOptions& options, std::size_t cycles,
                const std::function<void(const CycleReport&)>& on_cycle) {
  CycleScheduler schedule;
  std::size_t done = 0;
  for (;;) {
    Instant now = ctx.clock.now();
    if (schedule.due(now)) {
      schedule.mark(now);
      auto report = run_cycle(ctx, options);
      if (on_cycle) on_cycle(report);
      if (cycles && ++done >= cycles) return;
    }
    ctx.clock.sleep_until(schedule.next_due(ctx.clock.now()));
  }
}

}  // namespace halrm::scraper
