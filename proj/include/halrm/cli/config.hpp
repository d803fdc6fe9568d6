#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "halrm/clustering/clustering.hpp"
#include "halrm/configurator/configurator.hpp"
#include "halrm/core/time.hpp"
#include "halrm/store/profiles.hpp"

namespace halrm::cli {

enum class Mode { Fixture, Live };
enum class Algorithm { Optics, Dbscan };

std::string to_string(Mode m);
std::string to_string(Algorithm a);
Mode parse_mode(const std::string& s);
Algorithm parse_algorithm(const std::string& s);

struct RunConfig {
  std::filesystem::path store_path = "halrm-store";
  double oldness_threshold_days = 365.0;
  std::size_t n = 4;
  configurator::Policy policy = configurator::Policy::ResilienceFirst;
  std::size_t top_k = 10;

  Algorithm algorithm = Algorithm::Optics;
  clustering::OpticsParams optics;
  clustering::DbscanParams dbscan;
  std::optional<std::filesystem::path> embeddings;

  Mode mode = Mode::Fixture;
  std::filesystem::path fixture_dir = "fixtures";
  std::optional<std::filesystem::path> exploitdb_mirror;  // defaults to fixture_dir/exploitdb in fixture mode

  std::optional<std::filesystem::path> model_path;  // defaults to store_path/model.json
  // Scoring instant. Unset: the newest timestamp in the store in fixture
  // mode, the wall clock in live mode.
  std::optional<Timestamp> as_of;

  std::vector<store::OsSpec> pool;
  std::uint64_t seed = 42;
  unsigned threads = 0;

  // Throws ValidationError naming the offending field.
  void validate() const;

  std::filesystem::path model_file() const;
  std::filesystem::path mirror_dir() const;
};

nlohmann::json to_json(const RunConfig& c);

// Unknown keys are rejected. Relative paths resolve against `base`.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base = {});
RunConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const RunConfig& c);

}  // namespace halrm::cli
