#include "halrm/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "halrm/core/errors.hpp"

namespace halrm::cli {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(Mode m) { return m == Mode::Fixture ? "fixture" : "live"; }

std::string to_string(Algorithm a) { return a == Algorithm::Optics ? "optics" : "dbscan"; }

Mode parse_mode(const std::string& s) {
  if (s == "fixture") return Mode::Fixture;
  if (s == "live") return Mode::Live;
  throw ValidationError("mode must be fixture or live, got '" + s + "'");
}

Algorithm parse_algorithm(const std::string& s) {
  if (s == "optics" || s == "OPTICS") return Algorithm::Optics;
  if (s == "dbscan" || s == "DBSCAN") return Algorithm::Dbscan;
  throw ValidationError("clustering algorithm must be optics or dbscan, got '" + s + "'");
}

void RunConfig::validate() const {
  if (store_path.empty()) throw ValidationError("store_path is empty");
  if (!std::isfinite(oldness_threshold_days) || oldness_threshold_days <= 0)
    throw ValidationError("oldness_threshold_days must be positive");
  if (n < 1) throw ValidationError("n must be at least 1");
  if (!pool.empty() && n > pool.size())
    throw ValidationError("n = " + std::to_string(n) + " exceeds the pool of " + std::to_string(pool.size()) +
                          " operating systems");
  if (top_k < 1) throw ValidationError("top_k must be at least 1");
  if (optics.min_samples < 2) throw ValidationError("clustering min_samples must be at least 2");
  if (!(optics.xi > 0 && optics.xi < 1)) throw ValidationError("clustering xi must lie in (0, 1)");
  if (dbscan.min_samples < 1) throw ValidationError("clustering min_samples must be at least 1");
  if (!std::isfinite(dbscan.eps) || dbscan.eps < 0) throw ValidationError("clustering eps must be >= 0");
  std::set<std::string> names;
  for (const auto& os : pool) {
    if (os.name.empty() || os.cpe_pattern.empty()) throw ValidationError("pool entries need a name and a cpe");
    if (!names.insert(os.name).second) throw ValidationError("duplicate pool entry '" + os.name + "'");
  }
}

fs::path RunConfig::model_file() const { return model_path ? *model_path : store_path / "model.json"; }

fs::path RunConfig::mirror_dir() const { return exploitdb_mirror ? *exploitdb_mirror : fixture_dir / "exploitdb"; }

json to_json(const RunConfig& c) {
  json pool = json::array();
  for (const auto& os : c.pool) pool.push_back({{"name", os.name}, {"cpe", os.cpe_pattern}});
  json j = {
      {"store_path", c.store_path.string()},
      {"oldness_threshold_days", c.oldness_threshold_days},
      {"n", c.n},
      {"policy", configurator::to_string(c.policy)},
      {"top_k", c.top_k},
      {"clustering",
       {{"algorithm", to_string(c.algorithm)},
        {"min_samples", c.algorithm == Algorithm::Optics ? c.optics.min_samples : c.dbscan.min_samples},
        {"xi", c.optics.xi},
        {"min_cluster_size", c.optics.min_cluster_size},
        {"eps", c.dbscan.eps}}},
      {"mode", to_string(c.mode)},
      {"fixture_dir", c.fixture_dir.string()},
      {"seed", c.seed},
      {"threads", c.threads},
      {"pool", pool},
  };
  if (c.embeddings) j["embeddings"] = c.embeddings->string();
  if (c.exploitdb_mirror) j["exploitdb_mirror"] = c.exploitdb_mirror->string();
  if (c.model_path) j["model_path"] = c.model_path->string();
  if (c.as_of) j["as_of"] = format_timestamp(*c.as_of);
  return j;
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw ValidationError("unknown config key '" + where + k + "'");
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

}  // namespace

RunConfig config_from_json(const json& j, const fs::path& base) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  reject_unknown(j,
                 {"store_path", "oldness_threshold_days", "n", "policy", "top_k", "clustering", "embeddings", "mode",
                  "fixture_dir", "exploitdb_mirror", "model_path", "as_of", "pool", "seed", "threads"},
                 "");
  RunConfig c;
  try {
    if (j.contains("store_path")) c.store_path = resolve(base, j.at("store_path").get<std::string>());
    if (j.contains("oldness_threshold_days")) c.oldness_threshold_days = j.at("oldness_threshold_days").get<double>();
    if (j.contains("n")) c.n = j.at("n").get<std::size_t>();
    if (j.contains("policy")) c.policy = configurator::parse_policy(j.at("policy").get<std::string>());
    if (j.contains("top_k")) c.top_k = j.at("top_k").get<std::size_t>();
    if (j.contains("clustering")) {
      const auto& cl = j.at("clustering");
      reject_unknown(cl, {"algorithm", "min_samples", "xi", "min_cluster_size", "eps"}, "clustering.");
      if (cl.contains("algorithm")) c.algorithm = parse_algorithm(cl.at("algorithm").get<std::string>());
      if (cl.contains("min_samples")) c.optics.min_samples = c.dbscan.min_samples = cl.at("min_samples").get<std::size_t>();
      if (cl.contains("xi")) c.optics.xi = cl.at("xi").get<double>();
      if (cl.contains("min_cluster_size")) c.optics.min_cluster_size = cl.at("min_cluster_size").get<std::size_t>();
      if (cl.contains("eps")) c.dbscan.eps = cl.at("eps").get<double>();
    }
    if (j.contains("embeddings") && !j.at("embeddings").is_null())
      c.embeddings = resolve(base, j.at("embeddings").get<std::string>());
    if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
    if (j.contains("fixture_dir")) c.fixture_dir = resolve(base, j.at("fixture_dir").get<std::string>());
    if (j.contains("exploitdb_mirror")) c.exploitdb_mirror = resolve(base, j.at("exploitdb_mirror").get<std::string>());
    if (j.contains("model_path")) c.model_path = resolve(base, j.at("model_path").get<std::string>());
    if (j.contains("as_of")) c.as_of = require_timestamp(j.at("as_of").get<std::string>());
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) c.threads = j.at("threads").get<unsigned>();
    if (j.contains("pool")) {
      for (const auto& e : j.at("pool")) {
        reject_unknown(e, {"name", "cpe"}, "pool[].");
        c.pool.push_back({e.at("name").get<std::string>(), e.at("cpe").get<std::string>()});
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j, fs::absolute(path).parent_path());
}

void save_config(const fs::path& path, const RunConfig& c) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json(c).dump(2) << '\n';
}

}  // namespace halrm::cli
