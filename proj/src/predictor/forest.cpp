#include "halrm/predictor/forest.hpp"

#include <algorithm>
#include <optional>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include "halrm/core/errors.hpp"

namespace halrm::predictor {
namespace {

std::size_t below(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

}  // namespace

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const std::vector<std::uint32_t>& y, std::size_t classes,
              const ForestOptions& options, std::uint64_t seed)
      : x_(x), y_(y), classes_(classes), options_(options), rng_(seed) {}

  DecisionTree build() {
    const std::size_t n = x_.rows;
    std::vector<std::size_t> samples(n);
    if (options_.bootstrap) {
      for (auto& s : samples) s = below(rng_, n);
    } else {
      for (std::size_t i = 0; i < n; ++i) samples[i] = i;
    }
    std::sort(samples.begin(), samples.end());

    struct Pending {
      std::int32_t node;
      std::vector<std::size_t> samples;
      std::size_t depth;
    };
    tree_.nodes_.emplace_back();
    std::vector<Pending> stack;
    stack.push_back({0, std::move(samples), 0});
    while (!stack.empty()) {
      Pending p = std::move(stack.back());
      stack.pop_back();
      auto split = find_split(p.samples, p.depth);
      if (!split) {
        make_leaf(p.node, p.samples);
        continue;
      }
      std::vector<std::size_t> left, right;
      for (auto s : p.samples) (x_.at(s, split->feature) <= split->threshold ? left : right).push_back(s);
      const auto l = static_cast<std::int32_t>(tree_.nodes_.size());
      tree_.nodes_.emplace_back();
      const auto r = static_cast<std::int32_t>(tree_.nodes_.size());
      tree_.nodes_.emplace_back();
      auto& node = tree_.nodes_[static_cast<std::size_t>(p.node)];
      node.feature = static_cast<std::int32_t>(split->feature);
      node.threshold = split->threshold;
      node.left = l;
      node.right = r;
      stack.push_back({r, std::move(right), p.depth + 1});
      stack.push_back({l, std::move(left), p.depth + 1});
    }
    return std::move(tree_);
  }

 private:
  struct Split {
    std::size_t feature;
    double threshold;
  };

  void make_leaf(std::int32_t index, const std::vector<std::size_t>& samples) {
    std::vector<double> counts(classes_, 0.0);
    for (auto s : samples) counts[y_[s]] += 1.0;
    auto& node = tree_.nodes_[static_cast<std::size_t>(index)];
    for (std::uint32_t c = 0; c < classes_; ++c) {
      if (counts[c] > 0) node.distribution.emplace_back(c, counts[c] / static_cast<double>(samples.size()));
    }
  }

  std::optional<Split> find_split(const std::vector<std::size_t>& samples, std::size_t depth) {
    const std::size_t n = samples.size();
    if (options_.max_depth && depth >= options_.max_depth) return std::nullopt;
    if (n < 2 * std::max<std::size_t>(options_.min_samples_leaf, 1)) return std::nullopt;
    bool pure = std::all_of(samples.begin(), samples.end(), [&](auto s) { return y_[s] == y_[samples[0]]; });
    if (pure) return std::nullopt;

    const std::size_t d = x_.cols;
    std::size_t mtry = options_.max_features;
    if (mtry == 0) mtry = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));
    mtry = std::min(mtry, d);

    std::vector<std::size_t> features(d);
    for (std::size_t i = 0; i < d; ++i) features[i] = i;
    std::vector<std::pair<double, std::uint32_t>> column(n);
    std::vector<double> left(classes_), right(classes_);
    std::optional<Split> best;
    double best_proxy = -1.0;
    std::size_t visited = 0;
    for (std::size_t i = 0; i < d && visited < mtry; ++i) {
      std::swap(features[i], features[i + below(rng_, d - i)]);
      const std::size_t f = features[i];
      const double first = x_.at(samples[0], f);
      bool constant = true;
      for (std::size_t k = 0; k < n; ++k) {
        column[k] = {x_.at(samples[k], f), y_[samples[k]]};
        constant = constant && column[k].first == first;
      }
      if (constant) continue;
      ++visited;
      std::sort(column.begin(), column.end());

      std::fill(left.begin(), left.end(), 0.0);
      std::fill(right.begin(), right.end(), 0.0);
      double sq_left = 0.0, sq_right = 0.0;
      for (const auto& [v, c] : column) right[c] += 1.0;
      for (double r : right) sq_right += r * r;
      const std::size_t leaf_min = std::max<std::size_t>(options_.min_samples_leaf, 1);
      for (std::size_t k = 0; k + 1 < n; ++k) {
        const auto c = column[k].second;
        sq_left += 2.0 * left[c] + 1.0;
        left[c] += 1.0;
        sq_right -= 2.0 * right[c] - 1.0;
        right[c] -= 1.0;
        if (column[k].first == column[k + 1].first) continue;
        const std::size_t nl = k + 1, nr = n - nl;
        if (nl < leaf_min || nr < leaf_min) continue;
        // Maximizing this minimizes the weighted Gini impurity of the children.
        const double proxy = sq_left / static_cast<double>(nl) + sq_right / static_cast<double>(nr);
        if (proxy > best_proxy) {
          best_proxy = proxy;
          double t = column[k].first + (column[k + 1].first - column[k].first) / 2.0;
          if (t == column[k + 1].first) t = column[k].first;
          best = Split{f, t};
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  const std::vector<std::uint32_t>& y_;
  std::size_t classes_;
  const ForestOptions& options_;
  std::mt19937_64 rng_;
  DecisionTree tree_;
};

const DecisionTree::Node& DecisionTree::leaf_for(const double* row) const {
  std::size_t i = 0;
  while (nodes_[i].feature >= 0) {
    const auto& n = nodes_[i];
    i = static_cast<std::size_t>(row[n.feature] <= n.threshold ? n.left : n.right);
  }
  return nodes_[i];
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (nodes_[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return deepest;
}

nlohmann::json DecisionTree::to_json() const {
  auto arr = nlohmann::json::array();
  for (const auto& n : nodes_) {
    if (n.feature >= 0) {
      arr.push_back({n.feature, n.threshold, n.left, n.right});
    } else {
      nlohmann::json leaf = nlohmann::json::array();
      for (const auto& [c, w] : n.distribution) leaf.push_back({c, w});
      arr.push_back({{"leaf", leaf}});
    }
  }
  return arr;
}

DecisionTree DecisionTree::from_json(const nlohmann::json& j) {
  DecisionTree t;
  for (const auto& e : j) {
    Node n;
    if (e.is_object()) {
      for (const auto& p : e.at("leaf")) n.distribution.emplace_back(p.at(0).get<std::uint32_t>(), p.at(1).get<double>());
    } else {
      n.feature = e.at(0).get<std::int32_t>();
      n.threshold = e.at(1).get<double>();
      n.left = e.at(2).get<std::int32_t>();
      n.right = e.at(3).get<std::int32_t>();
    }
    t.nodes_.push_back(std::move(n));
  }
  const auto size = static_cast<std::int32_t>(t.nodes_.size());
  for (const auto& n : t.nodes_) {
    if (n.feature >= 0 && (n.left <= 0 || n.right <= 0 || n.left >= size || n.right >= size)) {
      throw DataError("corrupt decision tree: child index out of range");
    }
  }
  if (t.nodes_.empty()) throw DataError("corrupt decision tree: no nodes");
  return t;
}

void RandomForest::fit(const Matrix& x, const std::vector<std::uint32_t>& y, std::size_t classes,
                       const ForestOptions& options) {
  if (x.rows == 0 || x.rows != y.size()) throw ValidationError("forest needs one label per non-empty row");
  if (options.trees == 0) throw ValidationError("forest needs at least one tree");
  classes_ = classes;
  trees_.assign(options.trees, {});
  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, options.trees));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t; (t = next++) < options.trees;) {
      TreeBuilder builder(x, y, classes, options, options.seed + 0x9E3779B97F4A7C15ULL * (t + 1));
      trees_[t] = builder.build();
    }
  };
  if (threads <= 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

std::vector<double> RandomForest::predict_proba(const double* row) const {
  std::vector<double> p(classes_, 0.0);
  for (const auto& t : trees_) {
    for (const auto& [c, w] : t.leaf_for(row).distribution) p[c] += w;
  }
  for (double& v : p) v /= static_cast<double>(trees_.size());
  return p;
}

std::uint32_t RandomForest::predict(const double* row) const {
  auto p = predict_proba(row);
  return static_cast<std::uint32_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

nlohmann::json RandomForest::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) trees.push_back(t.to_json());
  return {{"classes", classes_}, {"trees", trees}};
}

RandomForest RandomForest::from_json(const nlohmann::json& j) {
  RandomForest f;
  f.classes_ = j.at("classes").get<std::size_t>();
  for (const auto& t : j.at("trees")) f.trees_.push_back(DecisionTree::from_json(t));
  for (const auto& t : f.trees_) {
    for (const auto& n : t.nodes()) {
      for (const auto& [c, _] : n.distribution) {
        if (c >= f.classes_) throw DataError("corrupt forest: class index out of range");
      }
    }
  }
  return f;
}

}  // namespace halrm::predictor
