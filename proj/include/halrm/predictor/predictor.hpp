#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "halrm/core/time.hpp"
#include "halrm/predictor/forest.hpp"
#include "halrm/store/types.hpp"
#include "halrm/text/tfidf.hpp"

namespace halrm::store {
class VulnStore;
}

namespace halrm::predictor {

inline constexpr int kModelVersion = 1;
inline constexpr std::size_t kMinTrainingRows = 100;

struct Example {
  std::string id;
  std::string description;
  double score = 0.0;
};

// Assessed records with a non-empty description and a v3 (else v2) score.
std::vector<Example> examples_from_records(const std::vector<store::VulnRecord>& records);

// Class label of a score: rounded to one decimal.
double discrete_label(double score);

struct Split {
  std::vector<Example> train;
  std::vector<Example> test;
};

// Seeded shuffle, then the first round(test_fraction * n) rows are held out.
Split split_examples(std::vector<Example> examples, std::uint64_t seed, double test_fraction = 0.2);

// Anything that maps a description to a base score.
class ScorePredictor {
 public:
  virtual ~ScorePredictor() = default;
  virtual double predict(std::string_view description) const = 0;
};

class ConstantPredictor : public ScorePredictor {
 public:
  explicit ConstantPredictor(double value) : value_(value) {}
  double predict(std::string_view) const override { return value_; }

 private:
  double value_;
};

// Predicts the mean training score.
ConstantPredictor mean_baseline(const std::vector<Example>& train);

struct ModelOptions {
  text::TfidfOptions tfidf{2, 2000};
  ForestOptions forest;
  // Recorded in the metadata when set; left out by default so that equal
  // inputs produce byte-identical model files.
  std::optional<Timestamp> date;
};

class TrainedModel : public ScorePredictor {
 public:
  // Throws ValidationError on an empty or blank description.
  double predict(std::string_view description) const override;
  std::vector<double> predict_proba(std::string_view description) const;

  const std::vector<double>& label_set() const { return labels_; }
  const text::TfidfVectorizer& featurizer() const { return featurizer_; }
  const RandomForest& classifier() const { return forest_; }
  const nlohmann::json& metadata() const { return metadata_; }

  nlohmann::json to_json() const;
  static TrainedModel from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static TrainedModel load(const std::filesystem::path& path);

  friend TrainedModel fit(const std::vector<Example>& train, const ModelOptions& options);

 private:
  text::TfidfVectorizer featurizer_;
  RandomForest forest_;
  std::vector<double> labels_;
  nlohmann::json metadata_;
};

// Fits on every example given. Throws ValidationError below kMinTrainingRows.
TrainedModel fit(const std::vector<Example>& train, const ModelOptions& options = {});

struct TrainOptions {
  std::uint64_t split_seed = 42;
  double test_fraction = 0.2;
  ModelOptions model;
};

struct TrainingRun {
  TrainedModel model;
  Split split;
};

// Splits the assessed rows and fits on the training part.
TrainingRun train(const std::vector<store::VulnRecord>& records, const TrainOptions& options = {});

struct EvalReport {
  double accuracy = 0.0;  // exact one-decimal label match
  double rmse = 0.0;
  std::size_t n_test = 0;
  double seconds = 0.0;   // inference wall clock

  nlohmann::json to_json() const;
};

EvalReport evaluate(const ScorePredictor& model, const std::vector<Example>& heldout);

struct PredictReport {
  std::size_t predicted = 0;
  std::vector<std::string> skipped;  // no usable description
};

// Attaches a Predicted score to every record that has no score yet.
PredictReport predict_missing(store::VulnStore& store, const TrainedModel& model);

struct ReconcileReport {
  std::size_t replaced = 0;
  std::vector<std::string> replaced_ids;
  bool reassessment_required = false;
};

// Stores the incoming assessed records and counts the ones that replaced a
// prediction.
ReconcileReport reconcile(store::VulnStore& store, const std::vector<store::VulnRecord>& nvd_update);

}  // namespace halrm::predictor
