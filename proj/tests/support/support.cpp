#include "support/support.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace halrm::test {

std::string cve(int year, int seq) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "CVE-%04d-%04d", year, seq);
  return buf;
}

store::MetricVector random_metrics(Rng& rng) {
  using namespace store;
  MetricVector m;
  m.attack_vector = static_cast<AttackVector>(uniform_int(rng, 0, 3));
  m.attack_complexity = static_cast<AttackComplexity>(uniform_int(rng, 0, 1));
  m.privileges_required = static_cast<PrivilegesRequired>(uniform_int(rng, 0, 2));
  m.user_interaction = static_cast<UserInteraction>(uniform_int(rng, 0, 1));
  m.scope = static_cast<Scope>(uniform_int(rng, 0, 1));
  m.confidentiality = static_cast<Impact>(uniform_int(rng, 0, 2));
  m.integrity = static_cast<Impact>(uniform_int(rng, 0, 2));
  m.availability = static_cast<Impact>(uniform_int(rng, 0, 2));
  return m;
}

store::VulnRecord scored_record(const std::string& id, double base, Timestamp published) {
  store::VulnRecord r;
  r.cve_id = id;
  r.description = "test record " + id;
  r.published_date = published;
  r.last_modified = published;
  r.status = store::Status::Analyzed;
  r.cvss_v3_score = base;
  return r;
}

store::VulnRecord cve_2017_11882(int pulses) {
  auto r = scored_record("CVE-2017-11882", 7.8, make_timestamp(2017, 11, 20, 17, 29));
  r.description =
      "Microsoft Office 2007 Service Pack 3, Microsoft Office 2010 Service Pack 2, Microsoft "
      "Office 2013 Service Pack 1, and Microsoft Office 2016 allow an attacker to run arbitrary "
      "code in the context of the current user by failing to properly handle objects in memory, "
      "aka \"Microsoft Office Memory Corruption Vulnerability\".";
  r.cvss_v3_metrics = store::MetricVector::parse("CVSS:3.1/AV:L/AC:L/PR:N/UI:R/S:U/C:H/I:H/A:H");
  r.last_modified = make_timestamp(2024, 1, 5);
  r.patched = true;
  r.exploited = true;
  r.epss = 0.9799;
  r.pulse_count = pulses;
  r.affected_cpes = {"cpe:2.3:a:microsoft:office:2016:*:*:*:*:*:*:*"};
  return r;
}

Timestamp worked_example_now() { return make_timestamp(2024, 6, 1); }

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("halrm-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace halrm::test
