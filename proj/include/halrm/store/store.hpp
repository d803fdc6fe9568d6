#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "halrm/store/types.hpp"

namespace halrm::store {

inline constexpr int kSchemaVersion = 1;

// A batch of writes applied (and journaled) atomically. Scrapers put the
// records of one page together with the cursor that points past that page,
// so a crash can never separate the two.
struct Transaction {
  std::vector<VulnRecord> upserts;
  std::vector<ExploitRecord> exploits;
  std::vector<PulseRef> pulses;
  std::vector<std::pair<std::string, double>> epss;
  // id -> label; std::nullopt clears the label.
  std::vector<std::pair<std::string, std::optional<int>>> labels;
  // id -> predicted base score. Ignored for records holding an assessed score.
  std::vector<std::pair<std::string, double>> predictions;
  // Opaque per-source sync state, keyed by source name.
  std::map<std::string, nlohmann::json> cursors;

  bool empty() const;
};

struct CommitResult {
  std::vector<VulnRecord> stored;            // merged records, in upsert order
  std::size_t exploited_linked = 0;          // distinct stored CVEs named by the exploits
  std::map<std::string, int> pulse_counts;   // every CVE named by the pulses
  std::size_t epss_matched = 0;
  std::size_t labels_updated = 0;
  std::size_t predictions_attached = 0;
};

// Embedded document store for vulnerability intelligence.
//
// In-memory maps guarded by a shared mutex; when opened on a directory every
// commit is appended to a journal before it becomes visible, and checkpoint()
// folds the journal into a snapshot. Layout (schema version 1):
//
//   SCHEMA_VERSION   "halrm-store 1"
//   snapshot.jsonl   one JSON document per line (records keyed "<origin>:<id>",
//                    link entries, EPSS values, cursors)
//   journal.jsonl    one committed Transaction per line, sequence-numbered
//   quarantine/      raw payloads that failed to parse
//
// Exploit, pulse and EPSS links for CVEs that are not stored yet stay in the
// link indexes and are applied whenever the record arrives.
class VulnStore {
 public:
  VulnStore();
  ~VulnStore();
  VulnStore(const VulnStore&) = delete;
  VulnStore& operator=(const VulnStore&) = delete;

  // Opens (creating if needed) a directory-backed store and replays its journal.
  static std::unique_ptr<VulnStore> open(const std::filesystem::path& dir);

  CommitResult commit(const Transaction& tx);

  VulnRecord upsert(const VulnRecord& record);
  std::size_t link_exploits(std::span<const ExploitRecord> exploits);
  std::map<std::string, int> link_pulses(std::span<const PulseRef> pulses);
  std::size_t apply_epss(std::span<const std::pair<std::string, double>> scores);
  // Re-applies every link index to the stored records; returns records changed.
  std::size_t resolve_pending();

  std::optional<VulnRecord> get(const std::string& id) const;
  bool contains(const std::string& id) const;
  std::vector<VulnRecord> snapshot() const;  // ordered by id
  std::vector<std::string> ids() const;
  std::size_t size() const;

  // Link-index entries whose CVE is not stored.
  std::size_t pending_exploit_links() const;
  std::size_t pending_pulse_links() const;
  std::size_t pending_epss() const;

  std::optional<nlohmann::json> cursor(const std::string& source) const;

  // Writes a fresh snapshot and truncates the journal. No-op in memory.
  void checkpoint();

  const std::optional<std::filesystem::path>& directory() const { return dir_; }

  // Saves a raw payload under quarantine/ and returns its path (empty in memory).
  std::filesystem::path quarantine(const std::string& source, const std::string& payload);

 private:
  struct State {
    std::map<std::string, VulnRecord> records;
    std::map<std::string, std::set<std::string>> exploit_links;
    std::map<std::string, std::set<std::string>> pulse_links;
    std::map<std::string, double> epss;
    std::map<std::string, nlohmann::json> cursors;
  };

  CommitResult apply(State& state, const Transaction& tx) const;
  void enrich(const State& state, VulnRecord& r) const;
  void load();
  void append_journal(const nlohmann::json& line);

  mutable std::shared_mutex mutex_;
  State state_;
  std::optional<std::filesystem::path> dir_;
  std::FILE* journal_ = nullptr;
  std::uint64_t seq_ = 0;
  std::uint64_t quarantined_ = 0;
};

nlohmann::json to_json(const Transaction& tx);
Transaction transaction_from_json(const nlohmann::json& j);

}  // namespace halrm::store
