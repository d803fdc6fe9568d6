#include "halrm/synth/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "halrm/scoring/cvss.hpp"

namespace halrm::synth {

std::size_t Rng::below(std::size_t n) {
  if (n <= 1) return 0;
  // Lemire's multiply-shift, exact enough for the small ranges used here.
  return static_cast<std::size_t>((static_cast<unsigned __int128>(engine_()) * n) >> 64);
}

namespace {

using store::MetricVector;
using store::VulnRecord;

struct Variant {
  const char* vector;
  std::vector<const char*> templates;
};

struct Family {
  const char* name;
  double weight;
  std::vector<Variant> variants;
};

const std::vector<Family>& families() {
  static const std::vector<Family> f{
      {"xss", 3.0,
       {{"AV:N/AC:L/PR:N/UI:R/S:C/C:L/I:L/A:N",
         {"Cross-site scripting (XSS) vulnerability in {web} {ver} allows remote attackers to inject "
          "arbitrary web script or HTML via the {param} parameter.",
          "Multiple cross-site scripting (XSS) vulnerabilities in {web} {ver} allow remote attackers to "
          "inject arbitrary web script or HTML via the (1) {param} or (2) {param2} parameter."}},
        {"AV:N/AC:L/PR:L/UI:R/S:C/C:L/I:L/A:N",
         {"Cross-site scripting (XSS) vulnerability in the {page} page in {web} before {ver} allows "
          "remote authenticated users to inject arbitrary web script or HTML via a crafted {field}.",
          "Stored cross-site scripting (XSS) vulnerability in {web} {ver} allows remote authenticated "
          "users to inject arbitrary web script or HTML via the {field} of a {object}."}}}},
      {"horizon", 0.4,
       {{"AV:N/AC:L/PR:L/UI:R/S:C/C:L/I:L/A:N",
         {"Cross-site scripting (XSS) vulnerability in the {hpanel} panel in OpenStack Dashboard "
          "(Horizon) {ver} allows remote authenticated users to inject arbitrary web script or HTML via "
          "the {hfield} of a {hobject}.",
          "Cross-site scripting (XSS) vulnerability in OpenStack Dashboard (aka Horizon) before {ver} "
          "allows remote authenticated users to inject arbitrary web script or HTML via the {hfield} in "
          "the {hpanel} dashboard."}}}},
      {"sqli", 2.0,
       {{"AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H",
         {"SQL injection vulnerability in {file} in {web} {ver} allows remote attackers to execute "
          "arbitrary SQL commands via the {param} parameter."}},
        {"AV:N/AC:L/PR:L/UI:N/S:U/C:H/I:H/A:H",
         {"SQL injection vulnerability in the {page} module of {web} before {ver} allows remote "
          "authenticated users to execute arbitrary SQL commands via the {param} parameter."}}}},
      {"overflow", 3.0,
       {{"AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H",
         {"Stack-based buffer overflow in the {func} function in {svc} before {ver} allows remote "
          "attackers to execute arbitrary code via a long {proto} request.",
          "Heap-based buffer overflow in {svc} {ver} allows remote attackers to execute arbitrary code "
          "via a crafted {proto} packet."}},
        {"AV:N/AC:L/PR:N/UI:R/S:U/C:H/I:H/A:H",
         {"Heap-based buffer overflow in the {func} function in {lib} before {ver} allows remote "
          "attackers to execute arbitrary code or cause a denial of service via a crafted {fmt} file.",
          "Integer overflow in {lib} {ver} allows remote attackers to execute arbitrary code via a "
          "crafted {fmt} image that triggers a heap-based buffer overflow."}},
        {"AV:L/AC:L/PR:N/UI:R/S:U/C:H/I:H/A:H",
         {"Buffer overflow in the {func} function in {tool} {ver} allows local users to execute "
          "arbitrary code via a crafted {fmt} file."}}}},
      {"privesc", 2.5,
       {{"AV:L/AC:L/PR:L/UI:N/S:U/C:H/I:H/A:H",
         {"The {func} function in {kpath} in the Linux kernel before {kver} allows local users to gain "
          "privileges via a crafted {syscall} system call.",
          "Use-after-free vulnerability in {kpath} in the Linux kernel through {kver} allows local users "
          "to gain privileges by leveraging a {syscall} race."}},
        {"AV:L/AC:H/PR:L/UI:N/S:U/C:H/I:H/A:H",
         {"Race condition in {kpath} in the Linux kernel before {kver} allows local users to gain "
          "privileges via crafted {syscall} calls that trigger a use-after-free."}}}},
      {"dos", 2.5,
       {{"AV:N/AC:L/PR:N/UI:N/S:U/C:N/I:N/A:H",
         {"{svc} before {ver} allows remote attackers to cause a denial of service (NULL pointer "
          "dereference and daemon crash) via a crafted {proto} packet.",
          "The {func} function in {svc} {ver} allows remote attackers to cause a denial of service "
          "(infinite loop and CPU consumption) via a malformed {proto} message."}},
        {"AV:L/AC:L/PR:L/UI:N/S:U/C:N/I:N/A:H",
         {"The {func} function in {kpath} in the Linux kernel before {kver} allows local users to cause "
          "a denial of service (system crash) via a crafted {syscall} call."}}}},
      {"infoleak", 1.5,
       {{"AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:N/A:N",
         {"{svc} before {ver} allows remote attackers to obtain sensitive information from process "
          "memory via a crafted {proto} request."}},
        {"AV:N/AC:L/PR:N/UI:N/S:U/C:L/I:N/A:N",
         {"{web} {ver} allows remote attackers to obtain sensitive information by reading the {file} "
          "error page, which reveals the installation path."}}}},
      {"csrf", 1.0,
       {{"AV:N/AC:L/PR:N/UI:R/S:U/C:H/I:H/A:H",
         {"Cross-site request forgery (CSRF) vulnerability in {web} {ver} allows remote attackers to "
          "hijack the authentication of administrators for requests that {action}."}}}},
      {"traversal", 1.0,
       {{"AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:N/A:N",
         {"Directory traversal vulnerability in {file} in {web} {ver} allows remote attackers to read "
          "arbitrary files via a .. (dot dot) in the {param} parameter."}}}},
      {"windows", 2.0,
       {{"AV:N/AC:L/PR:N/UI:R/S:U/C:H/I:H/A:H",
         {"A remote code execution vulnerability exists in {winprod} when the {wincomp} improperly "
          "handles objects in memory, aka \"{wincomp} Remote Code Execution Vulnerability\"."}},
        {"AV:L/AC:L/PR:L/UI:N/S:U/C:H/I:H/A:H",
         {"An elevation of privilege vulnerability exists in {winprod} when the {wincomp} fails to "
          "properly handle objects in memory, aka \"{wincomp} Elevation of Privilege Vulnerability\"."}}}},
      {"tls", 1.0,
       {{"AV:N/AC:H/PR:N/UI:N/S:U/C:H/I:N/A:N",
         {"{lib} before {ver} does not properly verify X.509 certificates, which allows "
          "man-in-the-middle attackers to spoof servers via a crafted certificate.",
          "The TLS implementation in {svc} {ver} does not properly validate padding bytes, which makes "
          "it easier for man-in-the-middle attackers to decrypt traffic."}}}},
  };
  return f;
}

const std::map<std::string, std::vector<std::string>>& fillers() {
  static const std::map<std::string, std::vector<std::string>> f{
      {"web", {"WordPress", "Joomla!", "Drupal", "phpMyAdmin", "MediaWiki", "Moodle", "Roundcube Webmail",
               "Nagios XI", "Cacti", "GLPI", "Zabbix", "Jenkins", "Grafana", "Horde Groupware"}},
      {"param", {"id", "page", "q", "search", "redirect_to", "lang", "file", "user", "sort", "category"}},
      {"hpanel", {"Orchestration", "Host Aggregates", "Users", "Switches", "Images", "Instances"}},
      {"hfield", {"description field", "metadata", "name field"}},
      {"hobject", {"Heat template", "Glance image", "Nova flavor", "network"}},
      {"param2", {"title", "name", "order", "view", "tab"}},
      {"page", {"admin", "settings", "profile", "login", "user management", "reports"}},
      {"field", {"comment", "display name", "description field", "tag name", "signature"}},
      {"object", {"post", "group", "dashboard widget", "calendar event"}},
      {"file", {"index.php", "admin/ajax.php", "download.php", "view.php", "includes/functions.php"}},
      {"func", {"parse_header", "read_chunk", "decode_frame", "process_request", "copy_string",
                "handle_packet", "load_table"}},
      {"svc", {"OpenSSH", "BIND", "ISC DHCP", "Samba", "ntpd", "Apache HTTP Server", "nginx", "Exim",
               "Dnsmasq", "Postfix", "CUPS", "OpenLDAP"}},
      {"lib", {"libtiff", "libpng", "ImageMagick", "FFmpeg", "libxml2", "OpenSSL", "GnuTLS", "libarchive",
               "Poppler", "zlib", "libjpeg-turbo"}},
      {"tool", {"GNU Binutils", "GNU tar", "Vim", "less", "unzip", "file"}},
      {"fmt", {"TIFF", "PNG", "PDF", "ELF", "JPEG", "archive", "XML"}},
      {"proto", {"DNS", "HTTP", "SMB", "NTP", "DHCP", "SSH", "LDAP"}},
      {"kpath", {"fs/ext4/inode.c", "net/ipv4/tcp.c", "kernel/bpf/verifier.c", "drivers/usb/core/hub.c",
                 "mm/memory.c", "net/netfilter/nf_tables_api.c", "sound/core/timer.c"}},
      {"syscall", {"ioctl", "setsockopt", "mmap", "perf_event_open", "keyctl"}},
      {"winprod", {"Windows 10", "Windows Server 2012", "Windows 8.1", "Windows Server 2016"}},
      {"wincomp", {"Windows Graphics Component", "Win32k", "Windows Kernel", "Windows GDI",
                   "Windows Search", "Windows SMB Server"}},
      {"action", {"add administrator accounts", "change the site configuration", "delete users",
                  "upload plugins"}},
  };
  return f;
}

std::string version(Rng& rng) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%zu.%zu.%zu", 1 + rng.below(9), rng.below(20), rng.below(30));
  return buf;
}

std::string kernel_version(Rng& rng) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%zu.%zu.%zu", 3 + rng.below(3), rng.below(20), 1 + rng.below(40));
  return buf;
}

std::string fill(std::string tpl, Rng& rng) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tpl.size()) {
    auto open = tpl.find('{', pos);
    if (open == std::string::npos) {
      out.append(tpl, pos, std::string::npos);
      break;
    }
    auto close = tpl.find('}', open);
    out.append(tpl, pos, open - pos);
    std::string key = tpl.substr(open + 1, close - open - 1);
    if (key == "ver") {
      out += version(rng);
    } else if (key == "kver") {
      out += kernel_version(rng);
    } else {
      out += rng.pick(fillers().at(key));
    }
    pos = close + 1;
  }
  return out;
}

const Family& pick_family(Rng& rng) {
  double total = 0.0;
  for (const auto& f : families()) total += f.weight;
  double u = rng.uniform(0.0, total);
  for (const auto& f : families()) {
    if (u < f.weight) return f;
    u -= f.weight;
  }
  return families().back();
}

MetricVector random_vector(Rng& rng) {
  using namespace store;
  MetricVector m;
  m.attack_vector = static_cast<AttackVector>(rng.below(4));
  m.attack_complexity = static_cast<AttackComplexity>(rng.below(2));
  m.privileges_required = static_cast<PrivilegesRequired>(rng.below(3));
  m.user_interaction = static_cast<UserInteraction>(rng.below(2));
  m.scope = static_cast<Scope>(rng.below(2));
  m.confidentiality = static_cast<Impact>(rng.below(3));
  m.integrity = static_cast<Impact>(rng.below(3));
  m.availability = static_cast<Impact>(rng.below(3));
  return m;
}

std::string cpe(const std::string& vendor_product, const std::string& version) {
  return "cpe:2.3:o:" + vendor_product + ":" + version + ":*:*:*:*:*:*:*";
}

struct DeskOs {
  const char* name;
  const char* vendor_product;
  const char* version;
};

const std::vector<DeskOs>& desk_os() {
  static const std::vector<DeskOs> os{
      {"Debian 8.0", "debian:debian_linux", "8.0"},
      {"Ubuntu 16.04", "canonical:ubuntu_linux", "16.04"},
      {"Fedora 30", "fedoraproject:fedora", "30"},
      {"OpenSUSE 13", "opensuse:opensuse", "13.1"},
      {"FreeBSD 11", "freebsd:freebsd", "11.0"},
      {"OpenBSD 6.0", "openbsd:openbsd", "6.0"},
      {"Solaris 11.2", "oracle:solaris", "11.2"},
      {"Windows 10", "microsoft:windows_10", "-"},
  };
  return os;
}

// Families that only make sense on some systems.
std::vector<std::size_t> eligible_os(const std::string& family) {
  if (family == "windows") return {7};
  if (family == "privesc" || family == "dos") return {0, 1, 2, 3};
  return {0, 1, 2, 3, 4, 5, 6};
}

Timestamp random_time(Rng& rng, Timestamp from, Timestamp to) {
  auto span = (to - from).count();
  return from + std::chrono::seconds(static_cast<std::int64_t>(rng.uniform() * static_cast<double>(span)));
}

void enrich(VulnRecord& r, Rng& rng) {
  r.exploited = rng.chance(0.15);
  r.patched = rng.chance(0.7);
  double u = rng.uniform();
  r.epss = r.exploited ? 0.3 + 0.7 * u : u * u * u * u;
  r.epss = std::round(r.epss * 1e5) / 1e5;
  if (rng.chance(0.3)) r.pulse_count = static_cast<int>(std::floor(std::exp(rng.uniform(0.0, 5.0))));
}

void assess(VulnRecord& r, const MetricVector& m) {
  r.status = store::Status::Analyzed;
  r.cvss_v3_metrics = m;
  r.cvss_v3_score = scoring::cvss_v31_base(m);
  r.score_provenance = store::Provenance::NvdAssessed;
}

}  // namespace

std::vector<VulnRecord> lazarus_triple() {
  struct Row {
    const char* id;
    const char* description;
    Timestamp published;
    std::size_t os;
  };
  const std::vector<Row> rows{
      {"CVE-2014-0157",
       "Cross-site scripting (XSS) vulnerability in the Horizon Orchestration dashboard in OpenStack "
       "Dashboard (aka Horizon) 2013.2 before 2013.2.4 and icehouse before icehouse-rc2 allows remote "
       "attackers to inject arbitrary web script or HTML via the description field of a Heat template.",
       make_timestamp(2014, 4, 15), 3},
      {"CVE-2015-3988",
       "Multiple cross-site scripting (XSS) vulnerabilities in OpenStack Dashboard (Horizon) 2015.1.0 "
       "allow remote authenticated users to inject arbitrary web script or HTML via the metadata to a "
       "(1) Glance image, (2) Nova flavor or (3) Host Aggregate.",
       make_timestamp(2015, 6, 9), 6},
      {"CVE-2016-4428",
       "Cross-site scripting (XSS) vulnerability in OpenStack Dashboard (Horizon) 8.0.1 and earlier and "
       "9.0.0 through 9.0.1 allows remote authenticated users to inject arbitrary web script or HTML by "
       "injecting an AngularJS template in a dashboard form.",
       make_timestamp(2016, 7, 12), 0},
  };
  std::vector<VulnRecord> out;
  for (const auto& row : rows) {
    VulnRecord r;
    r.cve_id = row.id;
    r.description = row.description;
    r.published_date = row.published;
    r.last_modified = row.published + std::chrono::days(400);
    r.origin = store::Origin::Fixture;
    assess(r, MetricVector::parse("CVSS:3.1/AV:N/AC:L/PR:L/UI:R/S:C/C:L/I:L/A:N"));
    r.patched = true;
    r.epss = 0.00512;
    const auto& os = desk_os()[row.os];
    r.affected_cpes = {cpe(os.vendor_product, os.version)};
    out.push_back(r);
  }
  return out;
}

DeskDataset desk_dataset(const DeskOptions& options) {
  Rng rng(options.seed);
  DeskDataset ds;
  for (const auto& os : desk_os()) {
    ds.os_pool.push_back({os.name, std::string(os.vendor_product) + ":" + os.version});
  }
  std::set<std::string> used;
  if (options.include_lazarus_triple) {
    for (auto& r : lazarus_triple()) {
      used.insert(r.cve_id);
      ds.records.push_back(std::move(r));
    }
  }
  const Timestamp first = make_timestamp(2014, 1, 1);
  while (ds.records.size() < options.records) {
    VulnRecord r;
    r.published_date = random_time(rng, first, options.as_of - std::chrono::days(1));
    const int year = static_cast<int>(std::chrono::year_month_day(std::chrono::floor<std::chrono::days>(r.published_date)).year());
    char id[32];
    std::snprintf(id, sizeof id, "CVE-%d-%zu", year, 10000 + rng.below(40000));
    if (!used.insert(id).second) continue;
    r.cve_id = id;
    r.origin = store::Origin::Fixture;
    r.last_modified = random_time(rng, r.published_date, options.as_of);

    const Family& family = pick_family(rng);
    const Variant& variant = rng.pick(family.variants);
    r.description = fill(rng.pick(variant.templates), rng);
    if (!rng.chance(options.received_fraction)) {
      // Some records get vectors their wording does not suggest.
      assess(r, rng.chance(0.1) ? random_vector(rng) : MetricVector::parse(variant.vector));
    }
    enrich(r, rng);

    auto eligible = eligible_os(family.name);
    const std::size_t count = std::min<std::size_t>(eligible.size(), 1 + rng.below(3));
    std::set<std::size_t> chosen;
    while (chosen.size() < count) chosen.insert(eligible[rng.below(eligible.size())]);
    for (auto i : chosen) r.affected_cpes.push_back(cpe(desk_os()[i].vendor_product, desk_os()[i].version));
    ds.records.push_back(std::move(r));
  }
  std::sort(ds.records.begin(), ds.records.end(),
            [](const VulnRecord& a, const VulnRecord& b) { return a.cve_id < b.cve_id; });
  return ds;
}

std::vector<std::string> keyword_vocabulary() {
  return {"quokka", "narwhal", "axolotl", "pangolin", "okapi", "tapir", "wombat", "ibex", "dugong", "kakapo"};
}

std::vector<VulnRecord> keyword_dataset(const KeywordOptions& options) {
  static const std::vector<std::string> filler{"remote", "attackers", "crafted", "request", "component",
                                               "allows", "vulnerability", "version", "module", "server",
                                               "input", "handling", "memory", "user", "file"};
  static const std::vector<double> scores{2.1, 4.3, 5.5, 6.5, 7.8, 8.8, 9.1, 9.8, 3.7, 6.1};
  const auto vocab = keyword_vocabulary();
  const std::size_t classes = std::min(options.classes, vocab.size());
  Rng rng(options.seed);
  std::vector<VulnRecord> out;
  for (std::size_t i = 0; i < options.records; ++i) {
    const std::size_t c = i % classes;
    std::vector<std::string> words;
    for (std::size_t k = 0, n = 4 + rng.below(8); k < n; ++k) words.push_back(rng.pick(filler));
    words.insert(words.begin() + static_cast<std::ptrdiff_t>(rng.below(words.size() + 1)), vocab[c]);
    VulnRecord r;
    char id[32];
    std::snprintf(id, sizeof id, "CVE-2020-%05zu", 10000 + i);
    r.cve_id = id;
    for (const auto& w : words) r.description += (r.description.empty() ? "" : " ") + w;
    r.published_date = make_timestamp(2020, 1, 1) + std::chrono::hours(static_cast<long>(i));
    r.last_modified = r.published_date;
    r.status = store::Status::Analyzed;
    r.cvss_v3_score = scores[c];
    r.origin = store::Origin::Fixture;
    out.push_back(r);
  }
  return out;
}

const std::vector<UniverseRow>& universe_table() {
  static const std::vector<UniverseRow> rows{
      {"Debian 7", 3923},     {"Windows 10", 1514},    {"FreeBSD 11", 221},   {"Debian 8", 3923},
      {"Ubuntu 16.04", 2035}, {"Solaris 10", 359},     {"OpenBSD 6.0", 69},   {"Centos 7", 8},
      {"Fedora 30", 835},     {"Solaris 11", 359},     {"Ubuntu 14.04", 2035}, {"Ubuntu 16.04", 2035},
      {"Debian 6", 3923},     {"Ubuntu 17.04", 2035},  {"Fedora 16", 835},    {"Ubuntu 12.04", 2035},
      {"Ubuntu 22.04", 2035}, {"Debian 10", 3923},     {"Ubuntu 10.04", 2035}, {"Fedora 38", 835},
      {"Windows Server 2012", 1105}, {"Fedora 24", 835}, {"Centos 8", 8},      {"OpenSuse 42.1", 1298},
  };
  return rows;
}

namespace {

// OS family -> vendor:product used for every version of that family.
std::string family_cpe(const std::string& os) {
  static const std::vector<std::pair<std::string, std::string>> prefixes{
      {"Debian", "debian:debian_linux"},   {"Ubuntu", "canonical:ubuntu_linux"},
      {"Fedora", "fedoraproject:fedora"},  {"Centos", "centos:centos"},
      {"OpenSuse", "opensuse:opensuse"},   {"FreeBSD", "freebsd:freebsd"},
      {"OpenBSD", "openbsd:openbsd"},      {"Solaris", "oracle:solaris"},
      {"Windows Server 2012", "microsoft:windows_server_2012"}, {"Windows 10", "microsoft:windows_10"},
  };
  for (const auto& [prefix, cpe_name] : prefixes) {
    if (os.rfind(prefix, 0) == 0) return cpe_name;
  }
  return {};
}

}  // namespace

DeskDataset universe_dataset(std::uint64_t seed) {
  // CVE groups shared across families; exclusive remainders are derived
  // from the table counts.
  const std::vector<std::pair<std::vector<std::string>, std::size_t>> shared{
      {{"debian:debian_linux", "canonical:ubuntu_linux", "fedoraproject:fedora", "opensuse:opensuse",
        "freebsd:freebsd", "openbsd:openbsd", "oracle:solaris"},
       20},
      {{"debian:debian_linux", "canonical:ubuntu_linux", "fedoraproject:fedora", "opensuse:opensuse"}, 300},
      {{"debian:debian_linux", "canonical:ubuntu_linux"}, 900},
      {{"debian:debian_linux", "opensuse:opensuse"}, 200},
      {{"microsoft:windows_10", "microsoft:windows_server_2012"}, 700},
      {{"freebsd:freebsd", "openbsd:openbsd"}, 30},
      {{"centos:centos", "fedoraproject:fedora"}, 5},
  };
  std::map<std::string, std::size_t> target;
  for (const auto& row : universe_table()) target[family_cpe(row.os)] = row.cves;
  std::map<std::string, std::size_t> remaining = target;
  std::vector<std::vector<std::string>> groups;
  for (const auto& [members, count] : shared) {
    for (const auto& m : members) remaining[m] -= count;
    for (std::size_t i = 0; i < count; ++i) groups.push_back(members);
  }
  for (const auto& [family, count] : remaining) {
    for (std::size_t i = 0; i < count; ++i) groups.push_back({family});
  }

  Rng rng(seed);
  DeskDataset ds;
  std::set<std::string> seen_os;
  for (const auto& row : universe_table()) {
    if (seen_os.insert(row.os).second) ds.os_pool.push_back({row.os, family_cpe(row.os)});
  }
  const Timestamp first = make_timestamp(2010, 1, 1);
  const Timestamp last = make_timestamp(2022, 12, 31);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    VulnRecord r;
    r.published_date = random_time(rng, first, last);
    const int year = static_cast<int>(std::chrono::year_month_day(std::chrono::floor<std::chrono::days>(r.published_date)).year());
    char id[32];
    std::snprintf(id, sizeof id, "CVE-%d-%06zu", year, 100000 + i);
    r.cve_id = id;
    r.origin = store::Origin::Fixture;
    r.last_modified = r.published_date;
    const Family& family = pick_family(rng);
    const Variant& variant = rng.pick(family.variants);
    r.description = fill(rng.pick(variant.templates), rng);
    assess(r, MetricVector::parse(variant.vector));
    enrich(r, rng);
    for (const auto& g : groups[i]) r.affected_cpes.push_back(cpe(g, "*"));
    ds.records.push_back(std::move(r));
  }
  std::sort(ds.records.begin(), ds.records.end(),
            [](const VulnRecord& a, const VulnRecord& b) { return a.cve_id < b.cve_id; });
  return ds;
}

std::vector<store::OsSpec> universe_pool16() {
  std::vector<store::OsSpec> pool;
  std::set<std::string> seen;
  for (const auto& row : universe_table()) {
    if (pool.size() == 16) break;
    if (seen.insert(row.os).second) pool.push_back({row.os, family_cpe(row.os)});
  }
  return pool;
}

}  // namespace halrm::synth
