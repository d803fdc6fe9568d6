#include "halrm/cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "halrm/clustering/clustering.hpp"
#include "halrm/configurator/configurator.hpp"
#include "halrm/core/csv.hpp"
#include "halrm/core/errors.hpp"
#include "halrm/predictor/predictor.hpp"
#include "halrm/scoring/score.hpp"
#include "halrm/scraper/rate.hpp"
#include "halrm/scraper/sources.hpp"
#include "halrm/scraper/transport.hpp"
#include "halrm/store/dataset.hpp"
#include "halrm/store/profiles.hpp"
#include "halrm/store/store.hpp"
#include "halrm/synth/fixtures.hpp"
#include "halrm/synth/generator.hpp"

namespace halrm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for_current_exception() noexcept {
  try {
    throw;
  } catch (const ValidationError&) {
    return kExitValidation;
  } catch (const DataError&) {
    return kExitData;
  } catch (const NetworkError&) {
    return kExitNetwork;
  } catch (...) {
    return kExitOther;
  }
}

Timestamp effective_now(const RunConfig& cfg, const store::VulnStore& store) {
  if (cfg.as_of) return *cfg.as_of;
  if (cfg.mode == Mode::Live) return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  Timestamp latest{};
  for (const auto& r : store.snapshot()) latest = std::max({latest, r.published_date, r.last_modified});
  return latest;
}

namespace {

std::unique_ptr<store::VulnStore> open_store(const RunConfig& cfg, bool must_exist = true) {
  if (must_exist && !fs::exists(cfg.store_path / "SCHEMA_VERSION"))
    throw DataError("no store at " + cfg.store_path.string() +
                    "; run `halrm scrape`, `halrm import` or `halrm generate` first");
  return store::VulnStore::open(cfg.store_path);
}

scoring::ScoringConfig scoring_config(const RunConfig& cfg, const store::VulnStore& store) {
  scoring::ScoringConfig s;
  s.oldness_threshold = Days(cfg.oldness_threshold_days);
  s.now = effective_now(cfg, store);
  return s;
}

predictor::TrainedModel load_model(const RunConfig& cfg) {
  const auto path = cfg.model_file();
  if (!fs::exists(path)) throw DataError("no model at " + path.string() + "; run `halrm train` first");
  return predictor::TrainedModel::load(path);
}

std::string unscored_remedy(const std::string& id) {
  return id + " has no base score; run `halrm train` and `halrm predict` to estimate missing scores";
}

std::vector<store::NodeProfile> profiles(const RunConfig& cfg, const std::vector<store::VulnRecord>& records) {
  if (cfg.pool.empty()) throw ValidationError("the config has no operating system pool");
  return store::build_os_profiles(records, cfg.pool);
}

configurator::Ranking rank(const RunConfig& cfg, const std::vector<store::VulnRecord>& records,
                           const configurator::ScoreTable& table) {
  auto pool = profiles(cfg, records);
  configurator::RecommendOptions o;
  o.threads = cfg.threads;
  o.keep = cfg.top_k;
  try {
    return configurator::recommend(pool, cfg.n, cfg.policy, table.hal, configurator::clusters_from_records(records), o);
  } catch (const configurator::UnscoredCve& e) {
    throw DataError(unscored_remedy(e.cve_id()));
  }
}

struct ClusterRun {
  clustering::ClusterAssignment assignment;
  clustering::AssignReport report;
  clustering::FeatureKind kind = clustering::FeatureKind::BagOfWords;
};

ClusterRun cluster_store(const RunConfig& cfg, store::VulnStore& store) {
  clustering::FeatureMatrix m;
  if (cfg.embeddings) {
    m = clustering::load_embeddings(*cfg.embeddings);
  } else {
    std::vector<clustering::Document> docs;
    for (const auto& r : store.snapshot())
      if (r.description.find_first_not_of(" \t\r\n") != std::string::npos) docs.emplace_back(r.cve_id, r.description);
    if (docs.empty()) throw DataError("no descriptions to cluster");
    m = clustering::featurize_bow(docs);
  }
  ClusterRun run;
  run.kind = m.kind;
  run.assignment = cfg.algorithm == Algorithm::Optics ? clustering::cluster_optics(m, cfg.optics)
                                                      : clustering::cluster_dbscan(m, cfg.dbscan);
  run.report = clustering::assign_clusters(store, run.assignment);
  clustering::write_assignment_csv(cfg.store_path / "clusters.csv", run.assignment);
  return run;
}

std::size_t needs_prediction(const std::vector<store::VulnRecord>& records) {
  return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [](const auto& r) {
    return !r.cvss_v3_score && !r.cvss_v2_score &&
           r.description.find_first_not_of(" \t\r\n") != std::string::npos;
  }));
}

std::size_t predicted_count(const std::vector<store::VulnRecord>& records) {
  return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [](const auto& r) {
    return r.cvss_v3_score && r.score_provenance == store::Provenance::Predicted;
  }));
}

void write_assessment_row(std::ostream& out, const scoring::ScoreBreakdown& b) {
  out << fmt::format("{:<20} {:>5.1f} {:<11} {:>8.2f} {:>9.2f}  {}\n", b.cve_id, b.base,
                     scoring::to_string(b.base_source), b.lazarus, b.final,
                     scoring::to_string(scoring::severity_band(b.final)));
}

template <class F>
auto stage(int n, const char* name, F&& f) {
  auto prefix = fmt::format("pipeline stage {} ({}) failed: ", n, name);
  try {
    return f();
  } catch (const ValidationError& e) {
    throw ValidationError(prefix + e.what());
  } catch (const DataError& e) {
    throw DataError(prefix + e.what());
  } catch (const NetworkError& e) {
    throw NetworkError(prefix + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(prefix + e.what());
  }
}

std::ofstream open_artifact(const fs::path& dir, const std::string& name) {
  std::ofstream out(dir / name);
  if (!out) throw DataError("cannot write " + (dir / name).string());
  return out;
}

std::string month_of(Timestamp t) {
  auto ymd = std::chrono::year_month_day(std::chrono::floor<std::chrono::days>(t));
  return fmt::format("{:04}-{:02}", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()));
}

}  // namespace

RunConfig cmd_generate(const fs::path& dir, const GenerateOptions& options, std::ostream& out) {
  if (fs::exists(dir) && !fs::is_empty(dir)) throw ValidationError(dir.string() + " exists and is not empty");
  fs::create_directories(dir);

  synth::DeskOptions desk_options;
  desk_options.seed = options.seed;
  desk_options.records = options.records;
  auto desk = synth::desk_dataset(desk_options);

  RunConfig saved;
  saved.store_path = "store";
  saved.fixture_dir = "fixtures";
  saved.pool = desk.os_pool;
  saved.as_of = desk_options.as_of;
  saved.validate();
  save_config(dir / "config.json", saved);

  RunConfig cfg = saved;
  cfg.store_path = dir / "store";
  cfg.fixture_dir = dir / "fixtures";

  auto store = store::VulnStore::open(cfg.store_path);
  store::Transaction tx;
  tx.upserts = desk.records;
  store->commit(tx);
  store->checkpoint();
  {
    std::ofstream jsonl(dir / "desk.jsonl");
    store::export_jsonl(desk.records, jsonl);
  }
  auto counts = synth::write_fixture_set(cfg.fixture_dir, synth::desk_fixture_set(desk, options.fixture_seed));

  out << fmt::format("desk dataset: {} records, {} operating systems, as of {}\n", desk.records.size(),
                     desk.os_pool.size(), format_timestamp(desk_options.as_of));
  out << "fixture counts: " << counts.to_json().dump() << '\n';
  out << "config: " << (dir / "config.json").string() << '\n';
  return cfg;
}

void cmd_scrape(const RunConfig& cfg, const ScrapeOptions& options, std::ostream& out) {
  auto store = open_store(cfg, false);
  std::unique_ptr<scraper::Transport> transport;
  std::unique_ptr<scraper::Clock> clock;
  auto creds = scraper::Credentials::from_env();
  if (cfg.mode == Mode::Fixture) {
    transport = std::make_unique<scraper::ReplayTransport>(cfg.fixture_dir);
    auto start = cfg.as_of ? *cfg.as_of : std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
    clock = std::make_unique<scraper::ManualClock>(start);
    // Recorded payloads do not check keys.
    if (!creds.otx_key) creds.otx_key = "fixture";
  } else {
    transport = scraper::make_live_transport();
    clock = std::make_unique<scraper::SystemClock>();
  }
  scraper::ScraperContext ctx(*store, *transport, *clock, creds);
  ctx.exploitdb_mirror = cfg.mirror_dir();

  auto print = [&](const scraper::CycleReport& r) {
    if (options.json) {
      out << r.to_json(options.timings).dump(2) << '\n';
    } else {
      r.write_table(out, options.timings);
    }
    out.flush();
  };
  if (options.daemon) {
    scraper::run_daemon(ctx, {}, options.cycles, print);
    return;
  }
  auto report = scraper::run_cycle(ctx);
  print(report);
  if (!report.ok()) {
    std::string failed;
    for (const auto& row : report.rows)
      if (!row.ok) failed += (failed.empty() ? "" : ", ") + scraper::to_string(row.source);
    throw NetworkError("scrape cycle incomplete, failed sources: " + failed);
  }
}

void cmd_train(const RunConfig& cfg, std::ostream& out) {
  auto store = open_store(cfg);
  predictor::TrainOptions o;
  o.split_seed = cfg.seed;
  o.model.forest.seed = cfg.seed;
  o.model.forest.threads = cfg.threads;
  o.model.date = effective_now(cfg, *store);
  auto run = predictor::train(store->snapshot(), o);
  fs::create_directories(cfg.model_file().parent_path());
  run.model.save(cfg.model_file());
  auto eval = predictor::evaluate(run.model, run.split.test);
  auto baseline = predictor::evaluate(predictor::mean_baseline(run.split.train), run.split.test);
  json j = {{"model", cfg.model_file().string()},
            {"train_rows", run.split.train.size()},
            {"labels", run.model.label_set().size()},
            {"heldout", eval.to_json()},
            {"mean_baseline_rmse", baseline.rmse}};
  out << j.dump(2) << '\n';
}

void cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
  auto store = open_store(cfg);
  auto model = load_model(cfg);
  auto split = predictor::split_examples(predictor::examples_from_records(store->snapshot()), cfg.seed);
  if (split.test.empty()) throw DataError("no assessed rows to evaluate on");
  auto eval = predictor::evaluate(model, split.test);
  auto baseline = predictor::evaluate(predictor::mean_baseline(split.train), split.test);
  out << json{{"heldout", eval.to_json()}, {"mean_baseline_rmse", baseline.rmse}}.dump(2) << '\n';
}

void cmd_predict(const RunConfig& cfg, std::ostream& out) {
  auto store = open_store(cfg);
  auto model = load_model(cfg);
  auto report = predictor::predict_missing(*store, model);
  out << fmt::format("predicted {} scores\n", report.predicted);
  for (const auto& id : report.skipped) out << "skipped " << id << ": no description\n";
}

void cmd_cluster(const RunConfig& cfg, std::ostream& out) {
  auto store = open_store(cfg);
  auto run = cluster_store(cfg, *store);
  out << fmt::format("{} on {} features: {} points, {} clusters, {} noise\n", to_string(cfg.algorithm),
                     clustering::to_string(run.kind), run.assignment.ids.size(), run.assignment.cluster_count(),
                     run.assignment.noise_count());
  if (!run.report.unknown_ids.empty())
    out << fmt::format("{} ids are not in the store\n", run.report.unknown_ids.size());
  out << "assignment: " << (cfg.store_path / "clusters.csv").string() << '\n';
}

void cmd_assess(const RunConfig& cfg, const AssessOptions& options, std::ostream& out) {
  if (options.all == !options.ids.empty()) throw ValidationError("give either CVE ids or --all");
  auto store = open_store(cfg);
  const auto scoring = scoring_config(cfg, *store);
  std::vector<store::VulnRecord> records;
  if (options.all) {
    records = store->snapshot();
  } else {
    for (const auto& id : options.ids) {
      auto r = store->get(id);
      if (!r) throw DataError(id + " is not in the store");
      records.push_back(*r);
    }
  }
  std::vector<scoring::ScoreBreakdown> rows;
  for (const auto& r : records) {
    try {
      rows.push_back(scoring::hal_score(r, scoring));
    } catch (const scoring::MissingBaseScore& e) {
      throw DataError(unscored_remedy(e.cve_id()));
    }
  }
  if (options.explain) {
    json j = json::array();
    for (const auto& b : rows) j.push_back(b);
    out << (rows.size() == 1 ? j[0] : j).dump(2) << '\n';
    return;
  }
  out << fmt::format("{:<20} {:>5} {:<11} {:>8} {:>9}  {}\n", "cve_id", "base", "source", "lazarus", "hal_score",
                     "severity");
  for (const auto& b : rows) write_assessment_row(out, b);
}

void cmd_recommend(const RunConfig& cfg, bool as_json, std::ostream& out) {
  auto store = open_store(cfg);
  auto records = store->snapshot();
  auto table = configurator::build_score_table(records, scoring_config(cfg, *store));
  auto ranking = rank(cfg, records, table);
  if (as_json) {
    out << configurator::ranking_json(ranking, cfg.top_k).dump(2) << '\n';
  } else {
    configurator::write_ranking_table(out, ranking, cfg.top_k);
  }
}

void cmd_report(const RunConfig& cfg, const std::vector<std::string>& periods, std::ostream& out) {
  if (periods.empty()) throw ValidationError("--periods needs at least one YYYY-MM period");
  for (const auto& p : periods) configurator::period_end(p);
  if (!std::is_sorted(periods.begin(), periods.end()) ||
      std::adjacent_find(periods.begin(), periods.end()) != periods.end())
    throw ValidationError("periods must be strictly ascending");
  if (cfg.pool.empty()) throw ValidationError("the config has no operating system pool");

  auto store = open_store(cfg);
  std::vector<store::VulnRecord> base;
  std::vector<configurator::Batch> batches;
  for (const auto& p : periods) batches.push_back({p, {}});
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < periods.size(); ++i) index[periods[i]] = i;
  for (auto& r : store->snapshot()) {
    auto m = month_of(r.published_date);
    if (m < periods.front()) {
      base.push_back(std::move(r));
    } else if (auto it = index.find(m); it != index.end()) {
      batches[it->second].records.push_back(std::move(r));
    }
  }
  configurator::SeriesOptions o;
  o.n = cfg.n;
  o.policy = cfg.policy;
  o.scoring.oldness_threshold = Days(cfg.oldness_threshold_days);
  o.threads = cfg.threads;
  std::vector<configurator::SeriesRow> rows;
  try {
    rows = configurator::evaluation_series(cfg.pool, std::move(base), batches, o);
  } catch (const configurator::UnscoredCve& e) {
    throw DataError(unscored_remedy(e.cve_id()));
  }
  configurator::write_series_csv(out, rows);
}

void cmd_pipeline(const RunConfig& cfg, const PipelineOptions& options, std::ostream& out) {
  cfg.validate();
  if (options.artifacts) fs::create_directories(*options.artifacts);
  auto store = open_store(cfg);

  stage(1, "predict-missing", [&] {
    auto records = store->snapshot();
    std::size_t missing = needs_prediction(records);
    if (missing > 0) {
      auto model = load_model(cfg);
      auto report = predictor::predict_missing(*store, model);
      spdlog::info("predicted {} scores", report.predicted);
      records = store->snapshot();
    }
    std::size_t predicted = predicted_count(records);
    out << fmt::format("[1] predict-missing: {} of {} records carry predicted scores\n", predicted, records.size());
    if (options.artifacts) {
      auto f = open_artifact(*options.artifacts, "predictions.csv");
      csv::write_row(f, {"cve_id", "predicted_score"});
      for (const auto& r : records)
        if (r.cvss_v3_score && r.score_provenance == store::Provenance::Predicted)
          csv::write_row(f, {r.cve_id, csv::format_double(*r.cvss_v3_score)});
    }
  });

  stage(2, "cluster", [&] {
    auto run = cluster_store(cfg, *store);
    out << fmt::format("[2] cluster: {} on {} features, {} points, {} clusters, {} noise\n", to_string(cfg.algorithm),
                       clustering::to_string(run.kind), run.assignment.ids.size(), run.assignment.cluster_count(),
                       run.assignment.noise_count());
    if (options.artifacts) clustering::write_assignment_csv(*options.artifacts / "clusters.csv", run.assignment);
  });

  auto records = store->snapshot();
  auto table = stage(3, "reassess", [&] {
    auto scoring = scoring_config(cfg, *store);
    auto t = configurator::build_score_table(records, scoring);
    if (!t.missing.empty()) throw DataError(unscored_remedy(t.missing.front()));
    out << fmt::format("[3] reassess: {} records scored as of {}, oldness threshold {} days\n", t.hal.size(),
                       format_timestamp(scoring.now), csv::format_double(cfg.oldness_threshold_days));
    if (options.artifacts) {
      auto f = open_artifact(*options.artifacts, "assessment.csv");
      csv::write_row(f, {"cve_id", "lazarus", "hal_score", "epss"});
      for (const auto& r : records)
        csv::write_row(f, {r.cve_id, csv::format_double(t.lazarus.at(r.cve_id)), csv::format_double(t.hal.at(r.cve_id)),
                           csv::format_double(t.epss.at(r.cve_id))});
    }
    return t;
  });

  stage(4, "recommend", [&] {
    auto ranking = rank(cfg, records, table);
    out << fmt::format("[4] recommend: {} policy, n = {}, {} of {} configurations evaluated\n",
                       configurator::to_string(cfg.policy), cfg.n, ranking.evaluated,
                       configurator::binomial(cfg.pool.size(), cfg.n));
    configurator::write_ranking_table(out, ranking, cfg.top_k);
    if (options.artifacts) open_artifact(*options.artifacts, "ranking.json") << configurator::ranking_json(ranking, cfg.top_k).dump(2) << '\n';
  });
}

Format parse_format(const std::string& s) {
  if (s == "csv") return Format::Csv;
  if (s == "jsonl") return Format::Jsonl;
  if (s == "descriptions") return Format::Descriptions;
  throw ValidationError("format must be csv, jsonl or descriptions, got '" + s + "'");
}

void cmd_import(const RunConfig& cfg, const fs::path& file, Format format, std::ostream& out) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot read " + file.string());
  std::vector<store::VulnRecord> records;
  switch (format) {
    case Format::Csv: records = store::import_dataset(in); break;
    case Format::Jsonl: records = store::import_jsonl(in); break;
    case Format::Descriptions: throw ValidationError("descriptions are export-only");
  }
  auto store = open_store(cfg, false);
  store::Transaction tx;
  tx.upserts = std::move(records);
  auto res = store->commit(tx);
  out << fmt::format("imported {} records, store holds {}\n", res.stored.size(), store->size());
}

void cmd_export(const RunConfig& cfg, Format format, std::ostream& out) {
  auto store = open_store(cfg);
  auto records = store->snapshot();
  switch (format) {
    case Format::Csv: store::export_dataset(records, out); break;
    case Format::Jsonl: store::export_jsonl(records, out); break;
    case Format::Descriptions: store::export_descriptions(records, out); break;
  }
}

}  // namespace halrm::cli
