#include "halrm/store/store.hpp"

#include <spdlog/spdlog.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>

#include "halrm/core/cve.hpp"
#include "halrm/core/errors.hpp"

namespace halrm::store {
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersionFile = "SCHEMA_VERSION";
constexpr const char* kSnapshotFile = "snapshot.jsonl";
constexpr const char* kJournalFile = "journal.jsonl";

std::string version_line() { return "halrm-store " + std::to_string(kSchemaVersion); }

void write_file_atomically(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  std::FILE* f = std::fopen(tmp.c_str(), "wb");
  if (!f) throw DataError("cannot write " + tmp.string());
  bool ok = std::fwrite(content.data(), 1, content.size(), f) == content.size();
  ok = std::fflush(f) == 0 && ok;
  ok = ::fsync(::fileno(f)) == 0 && ok;
  std::fclose(f);
  if (!ok) throw DataError("short write to " + tmp.string());
  fs::rename(tmp, path);
}

std::string store_key(const VulnRecord& r) {
  return std::string(to_string(r.origin)) + ":" + r.cve_id;
}

bool has_assessed_score(const VulnRecord& r) {
  return r.score_provenance == Provenance::NvdAssessed &&
         (r.cvss_v3_score.has_value() || r.cvss_v2_score.has_value());
}

std::vector<std::string> union_cpes(const std::vector<std::string>& a,
                                    const std::vector<std::string>& b) {
  std::vector<std::string> out = a;
  for (const auto& c : b) {
    if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  }
  return out;
}

// Core fields follow the winner; NVD is authoritative over OSV for the same id
// and otherwise the later last_modified wins (ties go to the incoming record).
// Enrichment fields keep whichever side actually carries a value.
VulnRecord merge(const VulnRecord& existing, const VulnRecord& incoming) {
  bool incoming_wins;
  if (existing.origin == Origin::Nvd && incoming.origin == Origin::Osv) {
    incoming_wins = false;
  } else if (existing.origin == Origin::Osv && incoming.origin == Origin::Nvd) {
    incoming_wins = true;
  } else {
    incoming_wins = incoming.last_modified >= existing.last_modified;
  }
  const VulnRecord& winner = incoming_wins ? incoming : existing;
  const VulnRecord& loser = incoming_wins ? existing : incoming;
  VulnRecord r = winner;

  if (winner.origin != loser.origin) {
    r.affected_cpes = union_cpes(winner.affected_cpes, loser.affected_cpes);
    r.patched = winner.patched || loser.patched;
    if (r.description.empty()) r.description = loser.description;
  }
  r.exploited = winner.exploited || loser.exploited;
  if (r.epss == 0.0) r.epss = loser.epss;
  if (r.pulse_count == 0) r.pulse_count = loser.pulse_count;
  if (!r.cluster_label) r.cluster_label = loser.cluster_label;

  // Never let an assessed score regress to a prediction, and keep a prediction
  // until an assessment replaces it.
  if (has_assessed_score(existing) && !has_assessed_score(r)) {
    r.status = existing.status;
    r.cvss_v3_metrics = existing.cvss_v3_metrics;
    r.cvss_v3_score = existing.cvss_v3_score;
    r.cvss_v2_score = existing.cvss_v2_score;
    r.score_provenance = Provenance::NvdAssessed;
  } else if (has_assessed_score(incoming) && !has_assessed_score(r)) {
    // An official score replaces a prediction even when the rest of the
    // incoming record is older.
    r.status = incoming.status;
    r.cvss_v3_metrics = incoming.cvss_v3_metrics;
    r.cvss_v3_score = incoming.cvss_v3_score;
    r.cvss_v2_score = incoming.cvss_v2_score;
    r.score_provenance = Provenance::NvdAssessed;
  } else if (!r.cvss_v3_score && !r.cvss_v2_score &&
             loser.score_provenance == Provenance::Predicted && loser.cvss_v3_score) {
    r.cvss_v3_score = loser.cvss_v3_score;
    r.score_provenance = Provenance::Predicted;
  }
  if (r.published_date > r.last_modified) r.last_modified = r.published_date;
  return r;
}

void validate_inputs(const Transaction& tx) {
  for (const auto& r : tx.upserts) validate(r);
  for (const auto& [id, p] : tx.epss) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw ValidationError(id + ": epss " + std::to_string(p) + " outside [0,1]");
    }
  }
  for (const auto& [id, s] : tx.predictions) {
    if (!std::isfinite(s) || s < 0.0 || s > 10.0) {
      throw ValidationError(id + ": predicted score outside [0,10]");
    }
  }
  for (const auto& p : tx.pulses) {
    if (p.pulse_id.empty()) throw ValidationError("pulse without id");
  }
}

}  // namespace

bool Transaction::empty() const {
  return upserts.empty() && exploits.empty() && pulses.empty() && epss.empty() &&
         labels.empty() && predictions.empty() && cursors.empty();
}

nlohmann::json to_json(const Transaction& tx) {
  nlohmann::json j = nlohmann::json::object();
  if (!tx.upserts.empty()) j["upserts"] = tx.upserts;
  if (!tx.exploits.empty()) j["exploits"] = tx.exploits;
  if (!tx.pulses.empty()) j["pulses"] = tx.pulses;
  if (!tx.epss.empty()) j["epss"] = tx.epss;
  if (!tx.labels.empty()) {
    auto& arr = j["labels"] = nlohmann::json::array();
    for (const auto& [id, label] : tx.labels) {
      arr.push_back({id, label ? nlohmann::json(*label) : nlohmann::json(nullptr)});
    }
  }
  if (!tx.predictions.empty()) j["predictions"] = tx.predictions;
  if (!tx.cursors.empty()) j["cursors"] = tx.cursors;
  return j;
}

Transaction transaction_from_json(const nlohmann::json& j) {
  Transaction tx;
  if (j.contains("upserts")) tx.upserts = j.at("upserts").get<std::vector<VulnRecord>>();
  if (j.contains("exploits")) tx.exploits = j.at("exploits").get<std::vector<ExploitRecord>>();
  if (j.contains("pulses")) tx.pulses = j.at("pulses").get<std::vector<PulseRef>>();
  if (j.contains("epss")) tx.epss = j.at("epss").get<std::vector<std::pair<std::string, double>>>();
  if (j.contains("labels")) {
    for (const auto& e : j.at("labels")) {
      std::optional<int> label;
      if (!e.at(1).is_null()) label = e.at(1).get<int>();
      tx.labels.emplace_back(e.at(0).get<std::string>(), label);
    }
  }
  if (j.contains("predictions")) {
    tx.predictions = j.at("predictions").get<std::vector<std::pair<std::string, double>>>();
  }
  if (j.contains("cursors")) {
    tx.cursors = j.at("cursors").get<std::map<std::string, nlohmann::json>>();
  }
  return tx;
}

VulnStore::VulnStore() = default;

VulnStore::~VulnStore() {
  if (journal_) std::fclose(journal_);
}

std::unique_ptr<VulnStore> VulnStore::open(const fs::path& dir) {
  auto s = std::make_unique<VulnStore>();
  fs::create_directories(dir);
  s->dir_ = dir;
  fs::path version = dir / kVersionFile;
  if (fs::exists(version)) {
    std::ifstream in(version);
    std::string line;
    std::getline(in, line);
    if (line != version_line()) {
      throw DataError("store at " + dir.string() + " has schema '" + line + "', expected '" +
                      version_line() + "'");
    }
  } else {
    write_file_atomically(version, version_line() + "\n");
  }
  s->load();
  s->journal_ = std::fopen((dir / kJournalFile).c_str(), "ab");
  if (!s->journal_) throw DataError("cannot open journal in " + dir.string());
  return s;
}

void VulnStore::load() {
  const fs::path snap = *dir_ / kSnapshotFile;
  std::uint64_t snapshot_seq = 0;
  if (fs::exists(snap)) {
    std::ifstream in(snap);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw DataError(snap.string() + ":" + std::to_string(n) + ": " + e.what());
      }
      const auto kind = doc.at("kind").get<std::string>();
      if (kind == "header") {
        snapshot_seq = doc.at("seq").get<std::uint64_t>();
      } else if (kind == "record") {
        auto r = doc.at("doc").get<VulnRecord>();
        state_.records[r.cve_id] = std::move(r);
      } else if (kind == "exploit_link") {
        state_.exploit_links[doc.at("cve").get<std::string>()] =
            doc.at("exploits").get<std::set<std::string>>();
      } else if (kind == "pulse_link") {
        state_.pulse_links[doc.at("cve").get<std::string>()] =
            doc.at("pulses").get<std::set<std::string>>();
      } else if (kind == "epss") {
        state_.epss[doc.at("cve").get<std::string>()] = doc.at("value").get<double>();
      } else if (kind == "cursor") {
        state_.cursors[doc.at("source").get<std::string>()] = doc.at("state");
      }
    }
  }
  seq_ = snapshot_seq;

  const fs::path journal = *dir_ / kJournalFile;
  if (!fs::exists(journal)) return;
  std::ifstream in(journal, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string content = buf.str();
  std::size_t pos = 0, line_no = 0, good_end = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    ++line_no;
    if (nl == std::string::npos) {
      // A torn final write: the transaction never committed.
      spdlog::warn("store: discarding incomplete journal tail ({} bytes)", content.size() - pos);
      break;
    }
    std::string_view line(content.data() + pos, nl - pos);
    nlohmann::json entry;
    try {
      entry = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(journal.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    auto seq = entry.at("seq").get<std::uint64_t>();
    if (seq > seq_) {
      apply(state_, transaction_from_json(entry.at("tx")));
      seq_ = seq;
    }
    pos = nl + 1;
    good_end = pos;
  }
  if (good_end != content.size()) fs::resize_file(journal, good_end);
}

void VulnStore::append_journal(const nlohmann::json& line) {
  if (!journal_) return;
  std::string s = line.dump();
  s.push_back('\n');
  bool ok = std::fwrite(s.data(), 1, s.size(), journal_) == s.size();
  ok = std::fflush(journal_) == 0 && ok;
  ok = ::fsync(::fileno(journal_)) == 0 && ok;
  if (!ok) throw DataError("failed to append to store journal");
}

void VulnStore::enrich(const State& state, VulnRecord& r) const {
  if (auto it = state.exploit_links.find(r.cve_id);
      it != state.exploit_links.end() && !it->second.empty()) {
    r.exploited = true;
  }
  if (auto it = state.pulse_links.find(r.cve_id); it != state.pulse_links.end()) {
    r.pulse_count = static_cast<int>(it->second.size());
  }
  if (auto it = state.epss.find(r.cve_id); it != state.epss.end()) r.epss = it->second;
}

CommitResult VulnStore::apply(State& state, const Transaction& tx) const {
  CommitResult result;
  for (const auto& incoming : tx.upserts) {
    auto it = state.records.find(incoming.cve_id);
    VulnRecord merged = it == state.records.end() ? incoming : merge(it->second, incoming);
    enrich(state, merged);
    validate(merged);
    state.records[merged.cve_id] = merged;
    result.stored.push_back(std::move(merged));
  }

  std::set<std::string> linked;
  for (const auto& e : tx.exploits) {
    for (const auto& code : e.codes) {
      if (!is_cve_id(code)) continue;
      state.exploit_links[code].insert(e.exploit_id);
      if (auto it = state.records.find(code); it != state.records.end()) {
        it->second.exploited = true;
        linked.insert(code);
      }
    }
  }
  result.exploited_linked = linked.size();

  for (const auto& p : tx.pulses) {
    for (const auto& cve : p.cve_ids) state.pulse_links[cve].insert(p.pulse_id);
  }
  for (const auto& p : tx.pulses) {
    for (const auto& cve : p.cve_ids) {
      int count = static_cast<int>(state.pulse_links[cve].size());
      result.pulse_counts[cve] = count;
      if (auto it = state.records.find(cve); it != state.records.end()) {
        it->second.pulse_count = count;
      }
    }
  }

  for (const auto& [id, p] : tx.epss) {
    state.epss[id] = p;
    if (auto it = state.records.find(id); it != state.records.end()) {
      it->second.epss = p;
      ++result.epss_matched;
    }
  }

  for (const auto& [id, label] : tx.labels) {
    if (auto it = state.records.find(id); it != state.records.end()) {
      it->second.cluster_label = label;
      ++result.labels_updated;
    }
  }

  for (const auto& [id, score] : tx.predictions) {
    auto it = state.records.find(id);
    if (it == state.records.end() || has_assessed_score(it->second)) continue;
    it->second.cvss_v3_score = score;
    it->second.score_provenance = Provenance::Predicted;
    ++result.predictions_attached;
  }

  for (const auto& [source, cur] : tx.cursors) state.cursors[source] = cur;
  return result;
}

CommitResult VulnStore::commit(const Transaction& tx) {
  validate_inputs(tx);
  std::unique_lock lock(mutex_);
  if (journal_ && !tx.empty()) {
    append_journal({{"seq", seq_ + 1}, {"tx", to_json(tx)}});
  }
  ++seq_;
  return apply(state_, tx);
}

VulnRecord VulnStore::upsert(const VulnRecord& record) {
  Transaction tx;
  tx.upserts.push_back(record);
  return commit(tx).stored.front();
}

std::size_t VulnStore::link_exploits(std::span<const ExploitRecord> exploits) {
  Transaction tx;
  tx.exploits.assign(exploits.begin(), exploits.end());
  return commit(tx).exploited_linked;
}

std::map<std::string, int> VulnStore::link_pulses(std::span<const PulseRef> pulses) {
  Transaction tx;
  tx.pulses.assign(pulses.begin(), pulses.end());
  return commit(tx).pulse_counts;
}

std::size_t VulnStore::apply_epss(std::span<const std::pair<std::string, double>> scores) {
  Transaction tx;
  tx.epss.assign(scores.begin(), scores.end());
  return commit(tx).epss_matched;
}

std::size_t VulnStore::resolve_pending() {
  std::unique_lock lock(mutex_);
  std::size_t changed = 0;
  for (auto& [id, r] : state_.records) {
    VulnRecord before = r;
    enrich(state_, r);
    if (!(before == r)) ++changed;
  }
  return changed;
}

std::optional<VulnRecord> VulnStore::get(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = state_.records.find(id);
  if (it == state_.records.end()) return std::nullopt;
  return it->second;
}

bool VulnStore::contains(const std::string& id) const {
  std::shared_lock lock(mutex_);
  return state_.records.count(id) != 0;
}

std::vector<VulnRecord> VulnStore::snapshot() const {
  std::shared_lock lock(mutex_);
  std::vector<VulnRecord> out;
  out.reserve(state_.records.size());
  for (const auto& [id, r] : state_.records) out.push_back(r);
  return out;
}

std::vector<std::string> VulnStore::ids() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  out.reserve(state_.records.size());
  for (const auto& [id, r] : state_.records) out.push_back(id);
  return out;
}

std::size_t VulnStore::size() const {
  std::shared_lock lock(mutex_);
  return state_.records.size();
}

namespace {
template <typename Map, typename Records>
std::size_t count_missing(const Map& m, const Records& records) {
  return static_cast<std::size_t>(std::count_if(
      m.begin(), m.end(), [&](const auto& kv) { return records.count(kv.first) == 0; }));
}
}  // namespace

std::size_t VulnStore::pending_exploit_links() const {
  std::shared_lock lock(mutex_);
  return count_missing(state_.exploit_links, state_.records);
}

std::size_t VulnStore::pending_pulse_links() const {
  std::shared_lock lock(mutex_);
  return count_missing(state_.pulse_links, state_.records);
}

std::size_t VulnStore::pending_epss() const {
  std::shared_lock lock(mutex_);
  return count_missing(state_.epss, state_.records);
}

std::optional<nlohmann::json> VulnStore::cursor(const std::string& source) const {
  std::shared_lock lock(mutex_);
  auto it = state_.cursors.find(source);
  if (it == state_.cursors.end()) return std::nullopt;
  return std::optional<nlohmann::json>(std::in_place, it->second);
}

void VulnStore::checkpoint() {
  if (!dir_) return;
  std::unique_lock lock(mutex_);
  std::string out;
  auto emit = [&](const nlohmann::json& doc) {
    out += doc.dump();
    out.push_back('\n');
  };
  emit({{"kind", "header"}, {"schema", kSchemaVersion}, {"seq", seq_}});
  for (const auto& [id, r] : state_.records) {
    emit({{"kind", "record"}, {"key", store_key(r)}, {"doc", r}});
  }
  for (const auto& [cve, ids] : state_.exploit_links) {
    emit({{"kind", "exploit_link"}, {"cve", cve}, {"exploits", ids}});
  }
  for (const auto& [cve, ids] : state_.pulse_links) {
    emit({{"kind", "pulse_link"}, {"cve", cve}, {"pulses", ids}});
  }
  for (const auto& [cve, p] : state_.epss) emit({{"kind", "epss"}, {"cve", cve}, {"value", p}});
  for (const auto& [source, cur] : state_.cursors) {
    emit({{"kind", "cursor"}, {"source", source}, {"state", cur}});
  }
  write_file_atomically(*dir_ / kSnapshotFile, out);
  // Entries at or below the snapshot's seq are skipped on replay, so a crash
  // between the rename and this truncation is harmless.
  std::fclose(journal_);
  journal_ = std::fopen((*dir_ / kJournalFile).c_str(), "wb");
  if (!journal_) throw DataError("cannot reopen journal in " + dir_->string());
}

fs::path VulnStore::quarantine(const std::string& source, const std::string& payload) {
  if (!dir_) return {};
  std::unique_lock lock(mutex_);
  fs::path qdir = *dir_ / "quarantine";
  fs::create_directories(qdir);
  fs::path p = qdir / (source + "-" + std::to_string(seq_) + "-" + std::to_string(++quarantined_) +
                       ".payload");
  std::ofstream(p, std::ios::binary) << payload;
  return p;
}

}  // namespace halrm::store
