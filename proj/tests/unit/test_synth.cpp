#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "halrm/store/profiles.hpp"
#include "halrm/synth/generator.hpp"

using namespace halrm;

TEST_CASE("rng helpers stay in range") {
  synth::Rng rng(5);
  for (int i = 0; i < 10000; ++i) {
    CHECK(rng.below(7) < 7);
    double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  CHECK(rng.below(1) == 0);
  CHECK(rng.below(0) == 0);
}

TEST_CASE("desk dataset") {
  auto ds = synth::desk_dataset();
  REQUIRE(ds.records.size() == 500);
  CHECK(ds.os_pool.size() == 8);
  std::set<std::string> ids;
  std::size_t received = 0;
  for (const auto& r : ds.records) {
    CHECK_NOTHROW(store::validate(r));
    ids.insert(r.cve_id);
    CHECK_FALSE(r.affected_cpes.empty());
    CHECK(r.last_modified <= make_timestamp(2023, 1, 1));
    if (r.status == store::Status::Received) {
      ++received;
      CHECK_FALSE(r.cvss_v3_score.has_value());
    }
  }
  CHECK(ids.size() == 500);
  CHECK(ids.count("CVE-2014-0157"));
  CHECK(ids.count("CVE-2015-3988"));
  CHECK(ids.count("CVE-2016-4428"));
  CHECK(received > 25);
  CHECK(received < 80);
  CHECK(std::is_sorted(ds.records.begin(), ds.records.end(),
                       [](const auto& a, const auto& b) { return a.cve_id < b.cve_id; }));

  SUBCASE("same seed, same data; other seed, other data") {
    CHECK(synth::desk_dataset().records == ds.records);
    synth::DeskOptions o;
    o.seed = 8;
    CHECK(synth::desk_dataset(o).records != ds.records);
  }
  SUBCASE("every OS of the pool is affected by something") {
    for (const auto& p : store::build_os_profiles(ds.records, ds.os_pool)) CHECK(p.cve_ids.size() > 10);
  }
}

TEST_CASE("the triple lands on three different systems") {
  auto triple = synth::lazarus_triple();
  auto ds = synth::desk_dataset();
  auto profiles = store::build_os_profiles(triple, ds.os_pool);
  std::map<std::string, std::vector<std::string>> by_os;
  for (const auto& p : profiles) by_os[p.name] = p.cve_ids;
  CHECK(by_os["OpenSUSE 13"] == std::vector<std::string>{"CVE-2014-0157"});
  CHECK(by_os["Solaris 11.2"] == std::vector<std::string>{"CVE-2015-3988"});
  CHECK(by_os["Debian 8.0"] == std::vector<std::string>{"CVE-2016-4428"});
}

TEST_CASE("keyword dataset") {
  auto rows = synth::keyword_dataset({3, 200, 4});
  CHECK(rows.size() == 200);
  std::map<std::string, std::set<double>> scores;
  for (const auto& r : rows) {
    CHECK_NOTHROW(store::validate(r));
    std::size_t hits = 0;
    for (const auto& k : synth::keyword_vocabulary()) {
      if (r.description.find(k) != std::string::npos) {
        ++hits;
        scores[k].insert(*r.cvss_v3_score);
      }
    }
    CHECK(hits == 1);
  }
  CHECK(scores.size() == 4);
  for (const auto& [_, s] : scores) CHECK(s.size() == 1);
}

TEST_CASE("universe reproduces the per-OS CVE counts") {
  auto ds = synth::universe_dataset();
  std::vector<store::OsSpec> specs;
  for (const auto& row : synth::universe_table()) {
    auto it = std::find_if(ds.os_pool.begin(), ds.os_pool.end(), [&](const auto& s) { return s.name == row.os; });
    REQUIRE(it != ds.os_pool.end());
    specs.push_back(*it);
  }
  auto profiles = store::build_os_profiles(ds.records, specs);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    CAPTURE(specs[i].name);
    CHECK(profiles[i].cve_ids.size() == synth::universe_table()[i].cves);
  }
  CHECK(profiles[0].name == "Debian 7");
  CHECK(profiles[0].cve_ids.size() == 3923);
  std::set<std::string> ids;
  for (const auto& r : ds.records) ids.insert(r.cve_id);
  CHECK(ids.size() == ds.records.size());

  auto pool = synth::universe_pool16();
  CHECK(pool.size() == 16);
  CHECK(pool.front().name == "Debian 7");
}
