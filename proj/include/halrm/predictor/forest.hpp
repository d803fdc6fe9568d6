#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <vector>

namespace halrm::predictor {

// Dense row-major feature matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

struct ForestOptions {
  std::size_t trees = 100;
  std::size_t max_depth = 0;  // 0 = unlimited
  std::size_t min_samples_leaf = 1;
  std::size_t max_features = 0;  // 0 = sqrt(columns)
  bool bootstrap = true;
  std::uint64_t seed = 42;
  unsigned threads = 0;  // 0 = hardware concurrency; results do not depend on it
};

// CART classification tree split on Gini impurity.
class DecisionTree {
 public:
  struct Node {
    // Internal: feature/threshold/children. Leaf: feature < 0 and class weights.
    std::int32_t feature = -1;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::vector<std::pair<std::uint32_t, double>> distribution;  // class -> fraction
  };

  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& leaf_for(const double* row) const;
  std::size_t depth() const;

  nlohmann::json to_json() const;
  static DecisionTree from_json(const nlohmann::json& j);

  friend class TreeBuilder;

 private:
  std::vector<Node> nodes_;
};

class RandomForest {
 public:
  void fit(const Matrix& x, const std::vector<std::uint32_t>& y, std::size_t classes,
           const ForestOptions& options);
  // Mean of the trees' leaf class distributions.
  std::vector<double> predict_proba(const double* row) const;
  // Most probable class, lowest index on ties.
  std::uint32_t predict(const double* row) const;

  std::size_t classes() const { return classes_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }

  nlohmann::json to_json() const;
  static RandomForest from_json(const nlohmann::json& j);

 private:
  std::vector<DecisionTree> trees_;
  std::size_t classes_ = 0;
};

}  // namespace halrm::predictor
