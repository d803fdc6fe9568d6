#include "halrm/predictor/predictor.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include "halrm/core/errors.hpp"
#include "halrm/store/store.hpp"

namespace halrm::predictor {
namespace {

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

Matrix to_matrix(const std::vector<text::SparseVector>& rows, std::size_t cols) {
  Matrix m;
  m.rows = rows.size();
  m.cols = cols;
  m.data.assign(m.rows * m.cols, 0.0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t k = 0; k < rows[r].nnz(); ++k) m.data[r * cols + rows[r].index[k]] = rows[r].value[k];
  }
  return m;
}

nlohmann::json options_json(const ModelOptions& o) {
  return {{"tfidf_min_df", o.tfidf.min_df},
          {"tfidf_max_features", o.tfidf.max_features},
          {"trees", o.forest.trees},
          {"max_depth", o.forest.max_depth},
          {"min_samples_leaf", o.forest.min_samples_leaf},
          {"max_features", o.forest.max_features},
          {"bootstrap", o.forest.bootstrap},
          {"seed", o.forest.seed}};
}

}  // namespace

double discrete_label(double score) { return std::round(score * 10.0) / 10.0; }

std::vector<Example> examples_from_records(const std::vector<store::VulnRecord>& records) {
  std::vector<Example> out;
  for (const auto& r : records) {
    if (r.score_provenance != store::Provenance::NvdAssessed || blank(r.description)) continue;
    std::optional<double> score = r.cvss_v3_score ? r.cvss_v3_score : r.cvss_v2_score;
    if (!score) continue;
    out.push_back({r.cve_id, r.description, *score});
  }
  return out;
}

Split split_examples(std::vector<Example> examples, std::uint64_t seed, double test_fraction) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw ValidationError("test fraction must lie in [0, 1)");
  std::sort(examples.begin(), examples.end(), [](const Example& a, const Example& b) { return a.id < b.id; });
  std::mt19937_64 rng(seed);
  for (std::size_t i = examples.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>((static_cast<unsigned __int128>(rng()) * i) >> 64);
    std::swap(examples[i - 1], examples[j]);
  }
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(examples.size())));
  Split s;
  s.test.assign(examples.begin(), examples.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.train.assign(examples.begin() + static_cast<std::ptrdiff_t>(n_test), examples.end());
  return s;
}

ConstantPredictor mean_baseline(const std::vector<Example>& train) {
  if (train.empty()) throw ValidationError("mean baseline needs training rows");
  double sum = 0.0;
  for (const auto& e : train) sum += e.score;
  return ConstantPredictor(sum / static_cast<double>(train.size()));
}

TrainedModel fit(const std::vector<Example>& train, const ModelOptions& options) {
  if (train.size() < kMinTrainingRows) {
    throw ValidationError("training needs at least " + std::to_string(kMinTrainingRows) +
                          " assessed rows with descriptions, got " + std::to_string(train.size()));
  }
  TrainedModel m;
  std::vector<std::string> docs;
  std::map<double, std::uint32_t> classes;
  for (const auto& e : train) {
    docs.push_back(e.description);
    classes.emplace(discrete_label(e.score), 0);
  }
  for (auto& [label, index] : classes) {
    index = static_cast<std::uint32_t>(m.labels_.size());
    m.labels_.push_back(label);
  }
  std::vector<std::uint32_t> y;
  for (const auto& e : train) y.push_back(classes.at(discrete_label(e.score)));

  m.featurizer_ = text::TfidfVectorizer(options.tfidf);
  auto rows = m.featurizer_.fit_transform(docs);
  m.forest_.fit(to_matrix(rows, m.featurizer_.dimension()), y, m.labels_.size(), options.forest);

  m.metadata_ = {{"version", kModelVersion},
                 {"training_rows", train.size()},
                 {"vocabulary", m.featurizer_.dimension()},
                 {"options", options_json(options)}};
  if (options.date) m.metadata_["date"] = format_timestamp(*options.date);
  return m;
}

std::vector<double> TrainedModel::predict_proba(std::string_view description) const {
  if (blank(description)) throw ValidationError("cannot predict a score from an empty description");
  auto row = featurizer_.transform(description);
  std::vector<double> dense(featurizer_.dimension(), 0.0);
  for (std::size_t k = 0; k < row.nnz(); ++k) dense[row.index[k]] = row.value[k];
  return forest_.predict_proba(dense.data());
}

double TrainedModel::predict(std::string_view description) const {
  auto p = predict_proba(description);
  return labels_[static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin())];
}

nlohmann::json TrainedModel::to_json() const {
  return {{"format", "halrm-model"},
          {"version", kModelVersion},
          {"metadata", metadata_},
          {"label_set", labels_},
          {"featurizer", featurizer_.to_json()},
          {"classifier", forest_.to_json()}};
}

TrainedModel TrainedModel::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "halrm-model") throw DataError("not a halrm model file");
  if (j.value("version", 0) != kModelVersion) {
    throw DataError("unsupported model version " + j.value("version", nlohmann::json()).dump());
  }
  TrainedModel m;
  m.metadata_ = j.at("metadata");
  m.labels_ = j.at("label_set").get<std::vector<double>>();
  m.featurizer_ = text::TfidfVectorizer::from_json(j.at("featurizer"));
  m.forest_ = RandomForest::from_json(j.at("classifier"));
  if (m.forest_.classes() != m.labels_.size()) throw DataError("model label set does not match its classifier");
  return m;
}

void TrainedModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model " + path.string());
  out << to_json().dump() << "\n";
  if (!out) throw DataError("short write to " + path.string());
}

TrainedModel TrainedModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed model " + path.string() + ": " + e.what());
  }
}

TrainingRun train(const std::vector<store::VulnRecord>& records, const TrainOptions& options) {
  auto examples = examples_from_records(records);
  if (examples.size() < kMinTrainingRows) {
    throw ValidationError("training needs at least " + std::to_string(kMinTrainingRows) +
                          " assessed rows with descriptions, got " + std::to_string(examples.size()));
  }
  auto split = split_examples(std::move(examples), options.split_seed, options.test_fraction);
  auto model = fit(split.train, options.model);
  return {std::move(model), std::move(split)};
}

nlohmann::json EvalReport::to_json() const {
  return {{"accuracy", accuracy}, {"rmse", rmse}, {"n_test", n_test}, {"seconds", seconds}};
}

EvalReport evaluate(const ScorePredictor& model, const std::vector<Example>& heldout) {
  if (heldout.empty()) throw ValidationError("evaluation needs held-out rows");
  const auto start = std::chrono::steady_clock::now();
  std::size_t hits = 0;
  double sq = 0.0;
  for (const auto& e : heldout) {
    const double p = model.predict(e.description);
    if (discrete_label(p) == discrete_label(e.score)) ++hits;
    sq += (p - e.score) * (p - e.score);
  }
  EvalReport r;
  r.n_test = heldout.size();
  r.accuracy = static_cast<double>(hits) / static_cast<double>(r.n_test);
  r.rmse = std::sqrt(sq / static_cast<double>(r.n_test));
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  spdlog::info("evaluated {} rows: accuracy {:.3f}, rmse {:.3f}, {:.3f}s", r.n_test, r.accuracy, r.rmse, r.seconds);
  return r;
}

PredictReport predict_missing(store::VulnStore& store, const TrainedModel& model) {
  PredictReport report;
  store::Transaction tx;
  for (const auto& r : store.snapshot()) {
    if (r.cvss_v3_score || r.cvss_v2_score) continue;
    if (blank(r.description)) {
      report.skipped.push_back(r.cve_id);
      continue;
    }
    tx.predictions.emplace_back(r.cve_id, model.predict(r.description));
  }
  if (!tx.empty()) report.predicted = store.commit(tx).predictions_attached;
  return report;
}

ReconcileReport reconcile(store::VulnStore& store, const std::vector<store::VulnRecord>& nvd_update) {
  ReconcileReport report;
  store::Transaction tx;
  for (const auto& incoming : nvd_update) {
    const bool assessed = incoming.score_provenance == store::Provenance::NvdAssessed &&
                          (incoming.cvss_v3_score || incoming.cvss_v2_score);
    if (!assessed) continue;
    auto existing = store.get(incoming.cve_id);
    if (existing && existing->score_provenance == store::Provenance::Predicted) {
      report.replaced_ids.push_back(incoming.cve_id);
    }
    tx.upserts.push_back(incoming);
  }
  if (!tx.empty()) store.commit(tx);
  report.replaced = report.replaced_ids.size();
  report.reassessment_required = report.replaced > 0;
  return report;
}

}  // namespace halrm::predictor
