#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <iostream>

#include "halrm/cli/commands.hpp"
#include "halrm/core/errors.hpp"

using namespace halrm;
using namespace halrm::cli;

int main(int argc, char** argv) {
  CLI::App app{"HAL risk manager: vulnerability scoring and diverse replica configuration"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, store_path, policy, algorithm, mode, fixtures, embeddings, model, as_of, mirror, log_level;
  double oldness = 0, xi = 0, eps = 0;
  std::size_t n = 0, top_k = 0, min_samples = 0;
  unsigned threads = 0;
  std::uint64_t seed = 0;
  auto* o_config = app.add_option("--config", config_path, "RunConfig JSON file");
  auto* o_store = app.add_option("--store", store_path, "store directory");
  auto* o_old = app.add_option("--oldness-days", oldness, "oldness threshold in days");
  auto* o_n = app.add_option("--n", n, "replica count");
  auto* o_policy = app.add_option("--policy", policy, "resilience or security");
  auto* o_top = app.add_option("--top", top_k, "rows shown in rankings");
  auto* o_alg = app.add_option("--algorithm", algorithm, "optics or dbscan");
  auto* o_min = app.add_option("--min-samples", min_samples, "clustering min_samples");
  auto* o_xi = app.add_option("--xi", xi, "OPTICS xi");
  auto* o_eps = app.add_option("--eps", eps, "DBSCAN eps, 0 picks the 10th percentile distance");
  auto* o_mode = app.add_option("--mode", mode, "fixture or live");
  auto* o_fix = app.add_option("--fixtures", fixtures, "replay fixture directory");
  auto* o_mirror = app.add_option("--exploitdb-mirror", mirror, "local exploitdb checkout");
  auto* o_emb = app.add_option("--embeddings", embeddings, "embedding JSONL used instead of bag of words");
  auto* o_model = app.add_option("--model", model, "model file");
  auto* o_asof = app.add_option("--as-of", as_of, "scoring instant");
  auto* o_seed = app.add_option("--seed", seed, "training seed");
  auto* o_threads = app.add_option("--threads", threads, "worker threads, 0 for all cores");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")->default_val("warn");

  auto* scrape = app.add_subcommand("scrape", "run a collection cycle");
  ScrapeOptions scrape_opts;
  bool once = false, no_timings = false;
  scrape->add_flag("--once", once, "one cycle (default)");
  scrape->add_flag("--daemon", scrape_opts.daemon, "hourly cycles");
  scrape->add_option("--cycles", scrape_opts.cycles, "stop the daemon after this many cycles");
  scrape->add_flag("--json", scrape_opts.json, "JSON report");
  scrape->add_flag("--no-timings", no_timings, "omit wall clock columns");

  auto* train = app.add_subcommand("train", "fit the score predictor on assessed records");
  auto* evaluate = app.add_subcommand("evaluate", "score the saved model on the held-out split");
  auto* predict = app.add_subcommand("predict", "estimate scores of unassessed records");
  auto* cluster = app.add_subcommand("cluster", "cluster descriptions and store the labels");

  auto* assess = app.add_subcommand("assess", "print hal scores");
  AssessOptions assess_opts;
  assess->add_option("ids", assess_opts.ids, "CVE ids");
  assess->add_flag("--all", assess_opts.all, "every record");
  assess->add_flag("--explain", assess_opts.explain, "JSON score breakdown");

  auto* recommend = app.add_subcommand("recommend", "rank replica configurations");
  bool recommend_json = false;
  recommend->add_flag("--json", recommend_json, "JSON ranking");

  auto* report = app.add_subcommand("report", "per-period risk series as CSV");
  std::vector<std::string> periods;
  report->add_option("--periods", periods, "YYYY-MM periods, ascending")->required()->delimiter(',');

  auto* pipeline = app.add_subcommand("pipeline", "predict-missing, cluster, reassess, recommend");
  std::string artifacts;
  pipeline->add_option("--artifacts", artifacts, "directory for stage outputs");

  auto* generate = app.add_subcommand("generate", "write the synthetic desk dataset, store and fixtures");
  std::string out_dir;
  GenerateOptions gen_opts;
  generate->add_option("--out", out_dir, "output directory")->required();
  generate->add_option("--dataset-seed", gen_opts.seed, "dataset seed");
  generate->add_option("--records", gen_opts.records, "dataset size");

  auto* import = app.add_subcommand("import", "load records into the store");
  auto* export_ = app.add_subcommand("export", "write the store's records to stdout");
  std::string import_file, format = "csv";
  import->add_option("file", import_file, "input file")->required();
  import->add_option("--format", format, "csv or jsonl");
  export_->add_option("--format", format, "csv, jsonl or descriptions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }

  try {
    spdlog::set_default_logger(spdlog::stderr_color_mt("halrm"));
    spdlog::set_level(spdlog::level::from_str(log_level));

    if (generate->parsed()) {
      cmd_generate(out_dir, gen_opts, std::cout);
      return kExitOk;
    }

    RunConfig cfg = o_config->count() ? load_config(config_path) : RunConfig{};
    if (o_store->count()) cfg.store_path = store_path;
    if (o_old->count()) cfg.oldness_threshold_days = oldness;
    if (o_n->count()) cfg.n = n;
    if (o_policy->count()) cfg.policy = configurator::parse_policy(policy);
    if (o_top->count()) cfg.top_k = top_k;
    if (o_alg->count()) cfg.algorithm = parse_algorithm(algorithm);
    if (o_min->count()) cfg.optics.min_samples = cfg.dbscan.min_samples = min_samples;
    if (o_xi->count()) cfg.optics.xi = xi;
    if (o_eps->count()) cfg.dbscan.eps = eps;
    if (o_mode->count()) cfg.mode = parse_mode(mode);
    if (o_fix->count()) cfg.fixture_dir = fixtures;
    if (o_mirror->count()) cfg.exploitdb_mirror = mirror;
    if (o_emb->count()) cfg.embeddings = embeddings;
    if (o_model->count()) cfg.model_path = model;
    if (o_asof->count()) cfg.as_of = require_timestamp(as_of);
    if (o_seed->count()) cfg.seed = seed;
    if (o_threads->count()) cfg.threads = threads;
    cfg.validate();

    if (scrape->parsed()) {
      if (once && scrape_opts.daemon) throw ValidationError("--once and --daemon are exclusive");
      scrape_opts.timings = !no_timings;
      cmd_scrape(cfg, scrape_opts, std::cout);
    } else if (train->parsed()) {
      cmd_train(cfg, std::cout);
    } else if (evaluate->parsed()) {
      cmd_evaluate(cfg, std::cout);
    } else if (predict->parsed()) {
      cmd_predict(cfg, std::cout);
    } else if (cluster->parsed()) {
      cmd_cluster(cfg, std::cout);
    } else if (assess->parsed()) {
      cmd_assess(cfg, assess_opts, std::cout);
    } else if (recommend->parsed()) {
      cmd_recommend(cfg, recommend_json, std::cout);
    } else if (report->parsed()) {
      cmd_report(cfg, periods, std::cout);
    } else if (pipeline->parsed()) {
      PipelineOptions p;
      if (!artifacts.empty()) p.artifacts = artifacts;
      cmd_pipeline(cfg, p, std::cout);
    } else if (import->parsed()) {
      cmd_import(cfg, import_file, parse_format(format), std::cout);
    } else if (export_->parsed()) {
      cmd_export(cfg, parse_format(format), std::cout);
    }
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "halrm: " << e.what() << '\n';
    return exit_code_for_current_exception();
  }
}
