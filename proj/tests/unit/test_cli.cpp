#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "halrm/cli/commands.hpp"
#include "halrm/core/errors.hpp"
#include "halrm/store/dataset.hpp"
#include "halrm/store/store.hpp"
#include "support/support.hpp"

using namespace halrm;
using namespace halrm::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

RunConfig trained_desk(const fs::path& dir, unsigned threads = 0) {
  std::ostringstream sink;
  auto cfg = cmd_generate(dir, {}, sink);
  cfg.threads = threads;
  cmd_train(cfg, sink);
  return cfg;
}

RunConfig small_store(const fs::path& dir, const std::vector<store::VulnRecord>& records) {
  RunConfig cfg;
  cfg.store_path = dir / "store";
  auto s = store::VulnStore::open(cfg.store_path);
  store::Transaction tx;
  tx.upserts = records;
  s->commit(tx);
  return cfg;
}

std::string run(const std::function<void(std::ostream&)>& f) {
  std::ostringstream out;
  f(out);
  return out.str();
}

int halrm_exit(const std::string& args) {
  std::string cmd = std::string(HALRM_BIN) + " " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config round trip and validation") {
  RunConfig c;
  c.store_path = "/var/halrm";
  c.n = 3;
  c.policy = configurator::Policy::SecurityFirst;
  c.algorithm = Algorithm::Dbscan;
  c.dbscan.eps = 0.4;
  c.embeddings = "/data/emb.jsonl";
  c.as_of = make_timestamp(2023, 6, 1);
  c.pool = {{"A", "a:a:1"}, {"B", "b:b:1"}, {"C", "c:c:1"}};
  auto back = config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(back.embeddings == c.embeddings);

  auto rel = config_from_json(json{{"store_path", "s"}, {"embeddings", "e.jsonl"}}, "/base");
  CHECK(rel.store_path == fs::path("/base/s"));
  CHECK(*rel.embeddings == fs::path("/base/e.jsonl"));
  CHECK(rel.model_file() == fs::path("/base/s/model.json"));

  CHECK_THROWS_AS(config_from_json(json{{"stor_path", "x"}}), ValidationError);
  CHECK_THROWS_AS(config_from_json(json{{"clustering", {{"algo", "optics"}}}}), ValidationError);
  CHECK_THROWS_AS(config_from_json(json{{"policy", "fastest"}}), ValidationError);
  CHECK_THROWS_AS(config_from_json(json{{"n", "four"}}), ValidationError);
  CHECK_THROWS_AS(config_from_json(json{{"oldness_threshold_days", -1}}), ValidationError);
  CHECK_THROWS_AS(config_from_json(json{{"n", 4}, {"pool", json::array({{{"name", "A"}, {"cpe", "a"}}})}}),
                  ValidationError);
  CHECK_THROWS_AS(config_from_json(json{{"mode", "offline"}}), ValidationError);
  CHECK_THROWS_AS(config_from_json(json{{"as_of", "soon"}}), ValidationError);
}

TEST_CASE("exit codes") {
  auto code = [](auto thrower) {
    try {
      thrower();
    } catch (...) {
      return exit_code_for_current_exception();
    }
    return -1;
  };
  CHECK(code([] { throw ValidationError("v"); }) == kExitValidation);
  CHECK(code([] { throw DataError("d"); }) == kExitData);
  CHECK(code([] { throw NetworkError("n"); }) == kExitNetwork);
  CHECK(code([] { throw std::logic_error("x"); }) == kExitOther);
  std::set<int> distinct{kExitOk, kExitOther, kExitValidation, kExitData, kExitNetwork};
  CHECK(distinct.size() == 5);

  test::TempDir dir;
  auto d = dir.path().string();
  CHECK(halrm_exit("--help") == kExitOk);
  CHECK(halrm_exit("frobnicate") == kExitValidation);
  CHECK(halrm_exit("--store " + d + "/none --n 0 recommend") == kExitValidation);
  CHECK(halrm_exit("--store " + d + "/none assess CVE-2020-0001") == kExitData);
  CHECK(halrm_exit("--store " + d + "/s --mode fixture --fixtures " + d + "/nothing scrape --once") == kExitData);
  CHECK(halrm_exit("generate --out " + d + "/gen") == kExitOk);
  CHECK(halrm_exit("--config " + d + "/gen/config.json assess CVE-1999-0001") == kExitData);
  CHECK(halrm_exit("--config " + d + "/gen/config.json recommend") == kExitData);
  CHECK(halrm_exit("--config " + d + "/gen/config.json train") == kExitOk);
  CHECK(halrm_exit("--config " + d + "/gen/config.json pipeline") == kExitOk);
  CHECK(halrm_exit("--config " + d + "/gen/config.json recommend --policy security") == kExitOk);
}

TEST_CASE("assess") {
  test::TempDir dir;
  std::vector<store::VulnRecord> records{test::cve_2017_11882(50)};
  for (int i = 1; i < 20; ++i) records.push_back(test::scored_record(test::cve(2021, i), 1.0 + i % 9, make_timestamp(2021, 1, i)));
  auto cfg = small_store(dir.path(), records);
  cfg.as_of = test::worked_example_now();

  auto explained = json::parse(run([&](auto& out) { cmd_assess(cfg, {{"CVE-2017-11882"}, false, true}, out); }));
  CHECK(std::abs(explained["final"].get<double>() - 8.9) <= 0.05);
  CHECK(std::abs(explained["lazarus"].get<double>() - 3.65) <= 0.05);

  auto table = run([&](auto& out) { cmd_assess(cfg, {{}, true, false}, out); });
  std::istringstream lines(table);
  std::string line;
  std::vector<std::string> ids;
  std::getline(lines, line);
  CHECK(line.rfind("cve_id", 0) == 0);
  while (std::getline(lines, line)) ids.push_back(line.substr(0, line.find(' ')));
  CHECK(ids.size() == 20);
  CHECK(std::is_sorted(ids.begin(), ids.end()));
  CHECK(table == run([&](auto& out) { cmd_assess(cfg, {{}, true, false}, out); }));

  CHECK_THROWS_AS(cmd_assess(cfg, {{"CVE-1999-0001"}, false, false}, std::cout), DataError);
  CHECK_THROWS_AS(cmd_assess(cfg, {{}, false, false}, std::cout), ValidationError);

  auto received = test::scored_record(test::cve(2022, 1), 5.0, make_timestamp(2022, 1, 1));
  received.status = store::Status::Received;
  received.cvss_v3_score.reset();
  received.cvss_v3_metrics.reset();
  auto s = store::VulnStore::open(cfg.store_path);
  s->upsert(received);
  s.reset();
  try {
    cmd_assess(cfg, {{received.cve_id}, false, false}, std::cout);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("halrm train") != std::string::npos);
  }
}

TEST_CASE("pipeline matches the four commands run by hand") {
  test::TempDir a, b;
  auto manual = trained_desk(a.path() / "desk");
  auto piped = trained_desk(b.path() / "desk");
  std::ostringstream sink;
  cmd_predict(manual, sink);
  cmd_cluster(manual, sink);
  cmd_assess(manual, {{}, true, false}, sink);
  auto by_hand = json::parse(run([&](auto& out) { cmd_recommend(manual, true, out); }));

  cmd_pipeline(piped, {b.path() / "artifacts"}, sink);
  auto ranking = json::parse(test::read_file(b.path() / "artifacts" / "ranking.json"));
  CHECK(ranking == by_hand);
  CHECK(test::read_file(b.path() / "artifacts" / "clusters.csv") == test::read_file(manual.store_path / "clusters.csv"));
  for (const char* f : {"predictions.csv", "assessment.csv"}) CHECK(fs::exists(b.path() / "artifacts" / f));
}

TEST_CASE("pipeline reruns and thread counts give the same report") {
  test::TempDir a, b;
  auto one = trained_desk(a.path() / "desk", 1);
  auto four = trained_desk(b.path() / "desk", 4);
  auto first = run([&](auto& out) { cmd_pipeline(one, {}, out); });
  auto rerun = run([&](auto& out) { cmd_pipeline(one, {}, out); });
  auto threaded = run([&](auto& out) { cmd_pipeline(four, {}, out); });
  CHECK(first == rerun);
  CHECK(first == threaded);
  CHECK(first.find("[4] recommend") != std::string::npos);
}

TEST_CASE("pipeline with nothing to predict needs no model") {
  test::TempDir dir;
  std::vector<store::VulnRecord> records;
  for (int i = 1; i <= 12; ++i) {
    auto r = test::scored_record(test::cve(2021, i), 2.0 + i % 7, make_timestamp(2021, 2, i));
    r.description = "Heap overflow in parser " + std::to_string(i % 3);
    r.affected_cpes = {"cpe:2.3:o:v" + std::to_string(i % 4) + ":os:1:*:*:*:*:*:*:*"};
    records.push_back(r);
  }
  auto cfg = small_store(dir.path(), records);
  cfg.n = 2;
  for (int i = 0; i < 4; ++i) cfg.pool.push_back({"OS" + std::to_string(i), "v" + std::to_string(i) + ":os:1"});
  cfg.optics.min_samples = 2;
  auto report = run([&](auto& out) { cmd_pipeline(cfg, {}, out); });
  CHECK(report.find("[1] predict-missing: 0 of 12") != std::string::npos);
  CHECK(report.find("6 of 6 configurations") != std::string::npos);
}

TEST_CASE("pipeline stage failures name the stage and a remedy") {
  test::TempDir dir;
  std::ostringstream sink;
  auto cfg = cmd_generate(dir.path() / "desk", {}, sink);
  try {
    cmd_pipeline(cfg, {}, sink);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    std::string msg = e.what();
    CHECK(msg.find("stage 1 (predict-missing)") != std::string::npos);
    CHECK(msg.find("halrm train") != std::string::npos);
  }
  cfg.pool.clear();
  cmd_train(cfg, sink);
  CHECK_THROWS_WITH_AS(cmd_pipeline(cfg, {}, sink), doctest::Contains("stage 4 (recommend)"), ValidationError);
}

TEST_CASE("report over desk periods") {
  test::TempDir dir;
  auto cfg = trained_desk(dir.path() / "desk");
  std::ostringstream sink;
  cmd_predict(cfg, sink);
  auto csv = run([&](auto& out) { cmd_report(cfg, {"2022-10", "2022-11", "2022-12"}, out); });
  std::istringstream lines(csv);
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(lines, line)) rows.push_back(line);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].rfind("period,as_of,injected", 0) == 0);
  CHECK(rows[1].rfind("2022-10,2022-11-01T00:00:00Z", 0) == 0);
  CHECK(rows[3].rfind("2022-12,2023-01-01T00:00:00Z", 0) == 0);
  CHECK_THROWS_AS(cmd_report(cfg, {"2022-11", "2022-10"}, sink), ValidationError);
  CHECK_THROWS_AS(cmd_report(cfg, {"2022-13"}, sink), ValidationError);
  CHECK_THROWS_AS(cmd_report(cfg, {}, sink), ValidationError);
}

TEST_CASE("scrape replays the generated fixtures") {
  test::TempDir dir;
  std::ostringstream sink;
  auto gen = cmd_generate(dir.path() / "desk", {}, sink);
  auto counts = json::parse(test::read_file(gen.fixture_dir / "counts.json"));
  RunConfig cfg = gen;
  cfg.store_path = dir.path() / "scraped";
  auto report = json::parse(run([&](auto& out) { cmd_scrape(cfg, {false, 0, true, false}, out); }));
  CHECK(report["sources"][0]["source"] == "nvd");
  CHECK(report["sources"][0]["entries"] == counts["nvd"]);
  auto s = store::VulnStore::open(cfg.store_path);
  CHECK(s->size() == counts["nvd"].get<std::size_t>() + counts["osv_native"].get<std::size_t>());
}

TEST_CASE("import and export") {
  test::TempDir dir;
  std::ostringstream sink;
  auto cfg = cmd_generate(dir.path() / "desk", {}, sink);
  auto jsonl = run([&](auto& out) { cmd_export(cfg, Format::Jsonl, out); });
  CHECK(jsonl == test::read_file(dir.path() / "desk" / "desk.jsonl"));

  RunConfig copy;
  copy.store_path = dir.path() / "copy";
  cmd_import(copy, dir.path() / "desk" / "desk.jsonl", Format::Jsonl, sink);
  CHECK(run([&](auto& out) { cmd_export(copy, Format::Jsonl, out); }) == jsonl);

  auto csv = run([&](auto& out) { cmd_export(cfg, Format::Csv, out); });
  std::ofstream(dir.path() / "desk.csv") << csv;
  RunConfig from_csv;
  from_csv.store_path = dir.path() / "csv";
  cmd_import(from_csv, dir.path() / "desk.csv", Format::Csv, sink);
  CHECK(run([&](auto& out) { cmd_export(from_csv, Format::Csv, out); }) == csv);
  CHECK_THROWS_AS(cmd_import(from_csv, dir.path() / "missing.csv", Format::Csv, sink), DataError);
  CHECK_THROWS_AS(parse_format("xml"), ValidationError);
}
