#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "halrm/cli/config.hpp"

namespace halrm::store {
class VulnStore;
}

namespace halrm::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitOther = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNetwork = 4;

// Maps the exception currently being handled to an exit code.
int exit_code_for_current_exception() noexcept;

// Scoring instant for a config and store.
Timestamp effective_now(const RunConfig& cfg, const store::VulnStore& store);

struct GenerateOptions {
  std::uint64_t seed = 7;
  std::size_t records = 500;
  std::uint64_t fixture_seed = 11;
};

// Writes <dir>/config.json, a populated <dir>/store, <dir>/desk.jsonl and a
// replayable <dir>/fixtures set. Returns the config as written, with paths
// resolved against `dir`.
RunConfig cmd_generate(const std::filesystem::path& dir, const GenerateOptions& options, std::ostream& out);

struct ScrapeOptions {
  bool daemon = false;
  std::size_t cycles = 0;  // daemon only; 0 runs until killed
  bool json = false;
  bool timings = true;
};
void cmd_scrape(const RunConfig& cfg, const ScrapeOptions& options, std::ostream& out);

void cmd_train(const RunConfig& cfg, std::ostream& out);
void cmd_evaluate(const RunConfig& cfg, std::ostream& out);
void cmd_predict(const RunConfig& cfg, std::ostream& out);
void cmd_cluster(const RunConfig& cfg, std::ostream& out);

struct AssessOptions {
  std::vector<std::string> ids;
  bool all = false;
  bool explain = false;
};
void cmd_assess(const RunConfig& cfg, const AssessOptions& options, std::ostream& out);

void cmd_recommend(const RunConfig& cfg, bool json, std::ostream& out);

// Periods are "YYYY-MM", ascending. Records published inside a period form
// its batch; records published earlier form the base.
void cmd_report(const RunConfig& cfg, const std::vector<std::string>& periods, std::ostream& out);

struct PipelineOptions {
  std::optional<std::filesystem::path> artifacts;
};
// predict-missing, cluster, reassess, recommend. The report carries no
// timings, so it is byte-identical for identical inputs.
void cmd_pipeline(const RunConfig& cfg, const PipelineOptions& options, std::ostream& out);

enum class Format { Csv, Jsonl, Descriptions };
Format parse_format(const std::string& s);
void cmd_import(const RunConfig& cfg, const std::filesystem::path& file, Format format, std::ostream& out);
void cmd_export(const RunConfig& cfg, Format format, std::ostream& out);

}  // namespace halrm::cli
