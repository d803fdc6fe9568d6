#pragma once

#include <cstdint>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <string_view>
#include <vector>

namespace halrm::text {

// Lower-cases, splits on anything that is not [a-z0-9_], drops one-character
// tokens and English stop words.
std::vector<std::string> tokenize(std::string_view text);

bool is_stop_word(std::string_view token);

struct SparseVector {
  std::vector<std::uint32_t> index;  // strictly increasing
  std::vector<double> value;

  std::size_t nnz() const { return index.size(); }
  double dot(const SparseVector& other) const;
  double norm() const;

  friend bool operator==(const SparseVector&, const SparseVector&) = default;
};

struct TfidfOptions {
  std::size_t min_df = 1;
  // 0 keeps every term; otherwise the terms with the highest document
  // frequency, ties broken alphabetically.
  std::size_t max_features = 0;
};

// TF-IDF with raw term counts, smoothed idf = ln((1 + n) / (1 + df)) + 1 and
// L2-normalized rows. The vocabulary is sorted, so column order does not
// depend on corpus order.
class TfidfVectorizer {
 public:
  TfidfVectorizer() = default;
  explicit TfidfVectorizer(TfidfOptions options) : options_(options) {}

  void fit(const std::vector<std::string>& documents);
  SparseVector transform(std::string_view document) const;
  std::vector<SparseVector> fit_transform(const std::vector<std::string>& documents);

  const std::vector<std::string>& vocabulary() const { return terms_; }
  const std::vector<double>& idf() const { return idf_; }
  std::size_t dimension() const { return terms_.size(); }

  nlohmann::json to_json() const;
  static TfidfVectorizer from_json(const nlohmann::json& j);

 private:
  TfidfOptions options_;
  std::vector<std::string> terms_;
  std::map<std::string, std::uint32_t, std::less<>> lookup_;
  std::vector<double> idf_;
};

}  // namespace halrm::text
