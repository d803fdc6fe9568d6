// One PASS/FAIL line per acceptance criterion; exits 1 if any fails.

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "halrm/cli/commands.hpp"
#include "halrm/clustering/clustering.hpp"
#include "halrm/configurator/configurator.hpp"
#include "halrm/predictor/predictor.hpp"
#include "halrm/scoring/cvss.hpp"
#include "halrm/scoring/score.hpp"
#include "halrm/scraper/rate.hpp"
#include "halrm/scraper/sources.hpp"
#include "halrm/scraper/transport.hpp"
#include "halrm/store/store.hpp"
#include "halrm/synth/fixtures.hpp"
#include "halrm/synth/generator.hpp"
#include "support/oracles.hpp"

using namespace halrm;
using namespace halrm::test::oracles;
namespace fs = std::filesystem;
using Rng = std::mt19937_64;

namespace {

// Tolerances.
constexpr double kWorkedExampleTol = 0.05;
constexpr double kRiskTol = 1e-9;
constexpr double kOptimalitySeconds = 60.0;
constexpr int kCvssVectors = 50;
constexpr int kOptimalityPools = 200;
constexpr int kRiskFixtures = 100;
constexpr int kDbscanSets = 20;

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

std::string cve(int year, int seq) { return fmt::format("CVE-{:04}-{:04}", year, seq); }

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() / fmt::format("halrm-acceptance-{}-{}", ::getpid(), counter++);
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Records a failed check and keeps the first message.
struct Checker {
  Outcome out;
  void require(bool ok, const std::string& what) {
    if (!ok && out.pass) out.detail = what;
    out.pass = out.pass && ok;
  }
};

// 1: CVE-2017-11882 worked example.
Outcome worked_example() {
  store::VulnRecord r;
  r.cve_id = "CVE-2017-11882";
  r.description = "Microsoft Office Equation Editor memory corruption";
  r.published_date = make_timestamp(2017, 11, 20);
  r.last_modified = r.published_date;
  r.status = store::Status::Analyzed;
  r.cvss_v3_metrics = store::MetricVector::parse("CVSS:3.1/AV:L/AC:L/PR:N/UI:R/S:U/C:H/I:H/A:H");
  r.cvss_v3_score = 7.8;
  r.patched = true;
  r.exploited = true;
  r.epss = 0.9799;
  scoring::ScoringConfig cfg;
  cfg.now = make_timestamp(2023, 6, 1);

  auto without = scoring::hal_score(r, cfg);
  r.pulse_count = 50;
  auto with = scoring::hal_score(r, cfg);
  Checker c;
  c.require(std::abs(without.lazarus - 3.65) <= kWorkedExampleTol, fmt::format("lazarus {}", without.lazarus));
  c.require(std::abs(without.final - 7.2) <= kWorkedExampleTol, fmt::format("hal without pulses {}", without.final));
  c.require(std::abs(with.final - 8.9) <= kWorkedExampleTol, fmt::format("hal with 50 pulses {}", with.final));
  c.out.detail = c.out.pass ? fmt::format("lazarus {:.3f}, hal {:.3f} / {:.3f} with pulses", without.lazarus,
                                          without.final, with.final)
                            : c.out.detail;
  return c.out;
}

// 2: CVSS engine against the integer-grid oracle.
Outcome cvss_engine() {
  Rng rng(31);
  Checker c;
  for (int i = 0; i < kCvssVectors; ++i) {
    store::MetricVector m;
    m.attack_vector = static_cast<store::AttackVector>(uniform_int(rng, 0, 3));
    m.attack_complexity = static_cast<store::AttackComplexity>(uniform_int(rng, 0, 1));
    m.privileges_required = static_cast<store::PrivilegesRequired>(uniform_int(rng, 0, 2));
    m.user_interaction = static_cast<store::UserInteraction>(uniform_int(rng, 0, 1));
    m.scope = static_cast<store::Scope>(uniform_int(rng, 0, 1));
    m.confidentiality = static_cast<store::Impact>(uniform_int(rng, 0, 2));
    m.integrity = static_cast<store::Impact>(uniform_int(rng, 0, 2));
    m.availability = static_cast<store::Impact>(uniform_int(rng, 0, 2));
    const double got = scoring::cvss_v31_base(m), want = oracle_base(m.to_string());
    c.require(got == want, fmt::format("{}: engine {} oracle {}", m.to_string(), got, want));
  }
  if (c.out.pass) c.out.detail = fmt::format("{} random vectors exact", kCvssVectors);
  return c.out;
}

struct RandomFixture {
  std::vector<store::NodeProfile> pool;
  std::map<std::string, double> scores;
  configurator::ClusterMap clusters;
};

RandomFixture random_fixture(Rng& rng, std::size_t pool_size) {
  RandomFixture f;
  const int universe = 30;
  for (int v = 1; v <= universe; ++v) {
    f.scores[cve(2020, v)] = uniform_int(rng, 0, 20) * 0.5;
    int l = uniform_int(rng, -3, 4);
    if (l >= 0) f.clusters[cve(2020, v)] = l;
  }
  for (std::size_t i = 0; i < pool_size; ++i) {
    std::vector<std::string> ids;
    for (int k = uniform_int(rng, 0, 6); k > 0; --k) ids.push_back(cve(2020, uniform_int(rng, 1, universe)));
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    f.pool.push_back({"OS" + std::to_string(i), "os:" + std::to_string(i), ids});
  }
  return f;
}

// 3: recommend against exhaustive search.
Outcome configurator_optimality() {
  Rng rng(303);
  Checker c;
  const auto start = std::chrono::steady_clock::now();
  int pools = 0;
  for (int t = 0; t < kOptimalityPools; ++t) {
    auto f = random_fixture(rng, static_cast<std::size_t>(uniform_int(rng, 4, 10)));
    configurator::ScoreMap scores(f.scores.begin(), f.scores.end());
    ++pools;
    for (std::size_t n : {2, 3, 4}) {
      for (auto policy : {Policy::ResilienceFirst, Policy::SecurityFirst}) {
        auto got = configurator::recommend(f.pool, n, policy, scores, f.clusters).top();
        auto want = oracle_best(f.pool, n, policy, f.scores, f.clusters);
        c.require(got.names == want.names && std::abs(got.resilience_risk - want.resilience) <= kRiskTol &&
                      std::abs(got.security_risk - want.security) <= kRiskTol,
                  fmt::format("pool {} n {} {}", t, n, configurator::to_string(policy)));
      }
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  c.require(secs < kOptimalitySeconds, fmt::format("took {:.1f}s", secs));
  if (c.out.pass) c.out.detail = fmt::format("{} pools x n in 2..4 x 2 policies in {:.2f}s", pools, secs);
  return c.out;
}

// 4: risk equations against brute-force sums.
Outcome risk_oracles() {
  Rng rng(404);
  Checker c;
  for (int t = 0; t < kRiskFixtures; ++t) {
    auto f = random_fixture(rng, 4);
    configurator::ScoreMap scores(f.scores.begin(), f.scores.end());
    auto want = oracle_eval(f.pool, f.scores, f.clusters);
    double sec = configurator::security_risk(f.pool, scores);
    double res = configurator::resilience_risk(f.pool, scores, f.clusters);
    c.require(std::abs(sec - want.security) <= kRiskTol, fmt::format("fixture {} security {} vs {}", t, sec, want.security));
    c.require(std::abs(res - want.resilience) <= kRiskTol,
              fmt::format("fixture {} resilience {} vs {}", t, res, want.resilience));
  }
  if (c.out.pass) c.out.detail = fmt::format("{} fixtures within {}", kRiskFixtures, kRiskTol);
  return c.out;
}

// 5: DBSCAN against the O(n^2) reference, and the Lazarus triple.
Outcome clustering_correctness() {
  Rng rng(505);
  Checker c;
  for (int s = 0; s < kDbscanSets; ++s) {
    const std::size_t dim = 12;
    std::vector<std::vector<double>> pts;
    const int blobs = uniform_int(rng, 1, 4), per = uniform_int(rng, 5, 15), strays = uniform_int(rng, 0, 8);
    const double spread = uniform(rng, 0.05, 0.5);
    for (int b = 0; b < blobs; ++b)
      for (int i = 0; i < per; ++i) {
        std::vector<double> v(dim, 0.0);
        v[static_cast<std::size_t>(b)] = 1.0;
        for (auto& x : v) x += uniform(rng, -spread, spread);
        pts.push_back(v);
      }
    for (int i = 0; i < strays; ++i) {
      std::vector<double> v(dim);
      for (auto& x : v) x = uniform(rng, -1.0, 1.0);
      pts.push_back(v);
    }
    std::shuffle(pts.begin(), pts.end(), rng);
    clustering::FeatureMatrix m;
    m.kind = clustering::FeatureKind::Embedding;
    m.dimension = dim;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      m.ids.push_back("P" + std::to_string(i));
      text::SparseVector row;
      for (std::size_t k = 0; k < dim; ++k)
        if (pts[i][k] != 0.0) {
          row.index.push_back(static_cast<std::uint32_t>(k));
          row.value.push_back(pts[i][k]);
        }
      m.rows.push_back(row);
    }
    const double eps = uniform(rng, 0.02, 0.3);
    const auto min_samples = static_cast<std::size_t>(uniform_int(rng, 2, 6));
    auto got = clustering::cluster_dbscan(m, {eps, min_samples});
    c.require(clustering::canonical_labels(got.labels) == oracle_dbscan(pts, eps, min_samples),
              fmt::format("set {} differs from the reference", s));
  }

  auto desk = synth::desk_dataset();
  std::vector<clustering::Document> docs;
  for (const auto& r : desk.records) docs.emplace_back(r.cve_id, r.description);
  auto a = clustering::cluster_dbscan(clustering::featurize_bow(docs));
  auto label = a.label_of("CVE-2014-0157");
  bool together = label && *label != -1 && a.label_of("CVE-2015-3988") == label && a.label_of("CVE-2016-4428") == label;
  c.require(together, "Lazarus triple split under default DBSCAN on bag of words");
  if (c.out.pass) c.out.detail = fmt::format("{} sets match; triple shares cluster {}", kDbscanSets, *label);
  return c.out;
}

// 6: predictor sanity.
Outcome predictor_sanity() {
  Checker c;
  auto desk = predictor::train(synth::desk_dataset().records);
  auto model = predictor::evaluate(desk.model, desk.split.test);
  auto baseline = predictor::evaluate(predictor::mean_baseline(desk.split.train), desk.split.test);
  c.require(model.rmse < baseline.rmse, fmt::format("rmse {} not below baseline {}", model.rmse, baseline.rmse));

  auto kw = predictor::train(synth::keyword_dataset());
  auto kw_eval = predictor::evaluate(kw.model, kw.split.test);
  c.require(kw_eval.accuracy == 1.0, fmt::format("keyword accuracy {}", kw_eval.accuracy));
  if (c.out.pass)
    c.out.detail = fmt::format("desk rmse {:.3f} < baseline {:.3f}; keyword accuracy {:.0f}%", model.rmse,
                               baseline.rmse, kw_eval.accuracy * 100);
  return c.out;
}

class FnTransport : public scraper::Transport {
 public:
  using Fn = std::function<scraper::HttpResponse(const scraper::HttpRequest&)>;
  FnTransport(scraper::Clock& clock, Fn fn) : clock_(clock), fn_(std::move(fn)) {}
  scraper::HttpResponse get(const scraper::HttpRequest& r) override {
    {
      std::lock_guard lock(mu_);
      log_.emplace_back(clock_.now(), r.url);
    }
    return fn_(r);
  }
  std::vector<std::pair<scraper::Instant, std::string>> log() const {
    std::lock_guard lock(mu_);
    return log_;
  }

 private:
  scraper::Clock& clock_;
  Fn fn_;
  mutable std::mutex mu_;
  std::vector<std::pair<scraper::Instant, std::string>> log_;
};

bool within_budget(std::vector<scraper::Instant> t, std::size_t capacity, scraper::Millis window) {
  std::sort(t.begin(), t.end());
  for (std::size_t i = 0; i + capacity < t.size(); ++i)
    if (t[i + capacity] - t[i] < window) return false;
  return true;
}

FnTransport::Fn nvd_server(const std::vector<store::VulnRecord>& records, std::size_t page) {
  return [&records, page](const scraper::HttpRequest& r) {
    auto q = scraper::Url::parse(r.url).query;
    if (q.count("lastModStartDate")) return scraper::HttpResponse{200, synth::nvd_page_json({}, 0, 0), {}};
    std::size_t start = std::stoul(q.at("startIndex"));
    std::size_t size = std::min(page, std::stoul(q.at("resultsPerPage")));
    std::vector<store::VulnRecord> slice(records.begin() + static_cast<std::ptrdiff_t>(std::min(start, records.size())),
                                         records.begin() + static_cast<std::ptrdiff_t>(std::min(start + size, records.size())));
    return scraper::HttpResponse{200, synth::nvd_page_json(slice, start, records.size()), {}};
  };
}

std::vector<store::VulnRecord> nvd_records(std::size_t n) {
  synth::DeskOptions o;
  o.records = n;
  o.include_lazarus_triple = false;
  return synth::desk_fixture_set(synth::desk_dataset(o)).nvd;
}

// 7: replayed scraping with an injected clock.
Outcome scraper_replay() {
  Checker c;
  const Timestamp start = make_timestamp(2023, 3, 1);
  scraper::Credentials keys;
  keys.nvd_key = "k";
  keys.otx_key = "k";

  // Full cycle over the desk fixture set.
  {
    TempDir dir;
    auto desk = synth::desk_dataset();
    auto counts = synth::write_fixture_set(dir.path() / "fx", synth::desk_fixture_set(desk));
    auto recorded = synth::FixtureCounts::from_json(nlohmann::json::parse(read_file(dir.path() / "fx" / "counts.json")));
    scraper::ReplayTransport replay(dir.path() / "fx");
    store::VulnStore store;
    scraper::ManualClock clock(start);
    scraper::ScraperContext ctx(store, replay, clock, keys);
    ctx.exploitdb_mirror = dir.path() / "fx" / "exploitdb";
    auto report = scraper::run_cycle(ctx);
    using scraper::Source;
    c.require(report.ok(), "fixture cycle reported a failing source");
    c.require(report.row(Source::Nvd)->result.entries == recorded.nvd, "nvd entry count");
    c.require(report.row(Source::ExploitDb)->result.entries == recorded.exploitdb, "exploitdb entry count");
    c.require(report.row(Source::Osv)->result.entries == recorded.osv, "osv entry count");
    c.require(report.row(Source::Epss)->result.entries == recorded.epss, "epss entry count");
    c.require(report.row(Source::Epss)->result.rejected == recorded.epss_rejected, "epss rejected count");
    c.require(store.size() == recorded.nvd + recorded.osv_native, "stored record count");
    std::size_t with_pulses = 0;
    for (const auto& r : store.snapshot()) with_pulses += r.pulse_count > 0;
    c.require(with_pulses == recorded.otx_with_pulses, "otx pulse count");
    c.require(recorded.nvd == counts.nvd, "counts.json mismatch");
  }

  // Pagination at 2,000 per page under the keyed 50 / 30 s budget.
  auto big = nvd_records(2137);
  {
    store::VulnStore store;
    scraper::ManualClock clock(start);
    FnTransport t(clock, nvd_server(big, 2000));
    scraper::ScraperContext ctx(store, t, clock, keys);
    auto res = scraper::fetch_nvd(ctx);
    auto log = t.log();
    c.require(res.entries == 2137 && store.size() == 2137, "2,137 records not all stored");
    c.require(log.size() == 2 && log[0].second.find("startIndex=0") != std::string::npos &&
                  log[1].second.find("startIndex=2000") != std::string::npos &&
                  log[0].second.find("resultsPerPage=2000") != std::string::npos,
              "pages were not requested at 0 and 2000");
  }

  // Rate budgets over random page sizes and server limits.
  Rng rng(707);
  auto small = nvd_records(300);
  for (int trial = 0; trial < 20; ++trial) {
    const bool with_key = trial % 2 == 0;
    store::VulnStore store;
    scraper::ManualClock clock(start);
    int throttles = uniform_int(rng, 0, 3);
    auto serve = nvd_server(small, 2000);
    FnTransport t(clock, [&](const scraper::HttpRequest& r) {
      if (throttles > 0 && uniform_int(rng, 0, 3) == 0) {
        --throttles;
        return scraper::HttpResponse{503, "", {}};
      }
      return serve(r);
    });
    scraper::Credentials creds;
    if (with_key) creds.nvd_key = "k";
    scraper::ScraperContext ctx(store, t, clock, creds);
    ctx.nvd_page_size = static_cast<std::size_t>(uniform_int(rng, 2, 9));
    scraper::fetch_nvd(ctx);
    std::vector<scraper::Instant> trace;
    for (const auto& [when, url] : t.log()) trace.push_back(when);
    c.require(store.size() == small.size(), fmt::format("budget trial {} lost records", trial));
    c.require(within_budget(trace, with_key ? 50 : 5, std::chrono::seconds(30)),
              fmt::format("budget trial {} exceeded the NVD budget", trial));
  }
  {
    store::VulnStore store;
    scraper::ManualClock clock(start);
    FnTransport t(clock, [](const scraper::HttpRequest&) { return scraper::HttpResponse{404, "", {}}; });
    scraper::ScraperContext ctx(store, t, clock, keys);
    std::vector<std::string> ids;
    for (int i = 1; i <= 10001; ++i) ids.push_back(fmt::format("CVE-2020-{:05}", i));
    auto first = scraper::fetch_otx(ctx, ids);
    clock.advance(std::chrono::seconds(3600));
    auto second = scraper::fetch_otx(ctx, ids);
    std::vector<scraper::Instant> trace;
    for (const auto& [when, url] : t.log()) trace.push_back(when);
    c.require(first.requests == 10000 && first.deferred == 1 && second.requests == 1,
              "OTX did not defer the 10,001st request to the next hour");
    c.require(within_budget(trace, 10000, std::chrono::seconds(3600)), "OTX exceeded 10,000 per hour");
  }

  // Crash between pages, then restart from the persisted cursor.
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t n = static_cast<std::size_t>(uniform_int(rng, 1, 60));
    const std::size_t page = static_cast<std::size_t>(uniform_int(rng, 3, 9));
    const std::size_t pages = (n + page - 1) / page;
    const std::size_t crash_at = static_cast<std::size_t>(uniform_int(rng, 1, static_cast<int>(pages)));
    std::vector<store::VulnRecord> records(small.begin(), small.begin() + static_cast<std::ptrdiff_t>(n));
    std::map<std::string, int> served;
    auto serve = nvd_server(records, page);
    TempDir dir;
    scraper::ManualClock clock(start);
    std::size_t calls = 0;
    {
      auto store = store::VulnStore::open(dir.path());
      FnTransport dying(clock, [&](const scraper::HttpRequest& r) {
        if (++calls == crash_at) throw NetworkError("connection reset");
        ++served[r.url];
        return serve(r);
      });
      scraper::ScraperContext ctx(*store, dying, clock, keys);
      ctx.nvd_page_size = page;
      try {
        scraper::fetch_nvd(ctx);
      } catch (const NetworkError&) {
      }
    }
    auto store = store::VulnStore::open(dir.path());
    FnTransport healthy(clock, [&](const scraper::HttpRequest& r) {
      ++served[r.url];
      return serve(r);
    });
    scraper::ScraperContext ctx(*store, healthy, clock, keys);
    ctx.nvd_page_size = page;
    scraper::fetch_nvd(ctx);
    bool once = std::all_of(served.begin(), served.end(), [](const auto& kv) { return kv.second == 1; });
    c.require(store->size() == n && once && served.size() == pages,
              fmt::format("crash trial {}: {} of {} records, {} distinct pages of {}", trial, store->size(), n,
                          served.size(), pages));
  }
  if (c.out.pass) c.out.detail = "fixture counts, 2,000-record pages, budgets and crash restarts hold";
  return c.out;
}

// 8: pipeline output across runs and thread counts.
Outcome pipeline_determinism() {
  Checker c;
  std::vector<std::string> reports;
  for (unsigned threads : {1u, 4u, 1u}) {
    TempDir dir;
    std::ostringstream sink;
    auto cfg = cli::cmd_generate(dir.path() / "desk", {}, sink);
    cfg.threads = threads;
    cli::cmd_train(cfg, sink);
    std::ostringstream report;
    cli::cmd_pipeline(cfg, {}, report);
    reports.push_back(report.str());
    std::ostringstream rerun;
    cli::cmd_pipeline(cfg, {}, rerun);
    c.require(rerun.str() == report.str(), fmt::format("rerun with {} threads changed the report", threads));
  }
  c.require(reports[0] == reports[1], "1 and 4 threads differ");
  c.require(reports[0] == reports[2], "two fresh runs differ");
  c.require(reports[0].find("[4] recommend") != std::string::npos, "no recommendation in the report");
  if (c.out.pass) c.out.detail = fmt::format("{} bytes identical over 3 runs, 1 and 4 threads", reports[0].size());
  return c.out;
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::off);
  const std::pair<const char*, Outcome (*)()> criteria[] = {
      {"worked example", worked_example},
      {"cvss engine", cvss_engine},
      {"configurator optimality", configurator_optimality},
      {"risk equation oracles", risk_oracles},
      {"clustering correctness", clustering_correctness},
      {"predictor sanity", predictor_sanity},
      {"scraper replay", scraper_replay},
      {"end-to-end determinism", pipeline_determinism},
  };
  int failed = 0;
  int index = 0;
  for (const auto& [name, run] : criteria) {
    ++index;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << ' ' << index << ' ' << name << ": " << o.detail << '\n';
  }
  return failed ? 1 : 0;
}
