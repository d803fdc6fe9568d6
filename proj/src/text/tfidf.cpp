#include "halrm/text/tfidf.hpp"

#include <algorithm>
#include <iterator>
#include <cctype>
#include <cmath>
#include <set>

#include "halrm/core/errors.hpp"

namespace halrm::text {
namespace {

// Common English function words.
constexpr std::string_view kStopWords[] = {
    "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are",
    "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but",
    "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "few", "for",
    "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers", "herself",
    "him", "himself", "his", "how", "if", "in", "into", "is", "it", "its", "itself", "just",
    "me", "more", "most", "my", "myself", "no", "nor", "not", "now", "of", "off", "on", "once",
    "only", "or", "other", "ought", "our", "ours", "ourselves", "out", "over", "own", "same",
    "she", "should", "so", "some", "such", "than", "that", "the", "their", "theirs", "them",
    "themselves", "then", "there", "these", "they", "this", "those", "through", "to", "too",
    "under", "until", "up", "very", "was", "we", "were", "what", "when", "where", "which",
    "while", "who", "whom", "why", "will", "with", "would", "you", "your", "yours", "yourself",
    "yourselves", "also", "may", "via"};

}  // namespace

bool is_stop_word(std::string_view token) {
  static const std::set<std::string_view> words(std::begin(kStopWords), std::end(kStopWords));
  return words.count(token) != 0;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= 2 && !is_stop_word(cur)) out.push_back(cur);
    cur.clear();
  };
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c == '_') {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

double SparseVector::dot(const SparseVector& other) const {
  double sum = 0.0;
  std::size_t i = 0, j = 0;
  while (i < index.size() && j < other.index.size()) {
    if (index[i] == other.index[j]) {
      sum += value[i++] * other.value[j++];
    } else if (index[i] < other.index[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return sum;
}

double SparseVector::norm() const {
  double s = 0.0;
  for (double v : value) s += v * v;
  return std::sqrt(s);
}

void TfidfVectorizer::fit(const std::vector<std::string>& documents) {
  if (documents.empty()) throw ValidationError("cannot fit TF-IDF on an empty corpus");
  std::map<std::string, std::size_t, std::less<>> df;
  for (const auto& doc : documents) {
    auto tokens = tokenize(doc);
    std::set<std::string> unique(tokens.begin(), tokens.end());
    for (const auto& t : unique) ++df[t];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [term, count] : df) {
    if (count >= options_.min_df) kept.emplace_back(term, count);
  }
  if (options_.max_features > 0 && kept.size() > options_.max_features) {
    std::stable_sort(kept.begin(), kept.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    kept.resize(options_.max_features);
    std::sort(kept.begin(), kept.end());
  }
  const double n = static_cast<double>(documents.size());
  terms_.clear();
  lookup_.clear();
  idf_.clear();
  for (const auto& [term, count] : kept) {
    lookup_.emplace(term, static_cast<std::uint32_t>(terms_.size()));
    terms_.push_back(term);
    idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
}

SparseVector TfidfVectorizer::transform(std::string_view document) const {
  std::map<std::uint32_t, double> counts;
  for (const auto& t : tokenize(document)) {
    if (auto it = lookup_.find(t); it != lookup_.end()) counts[it->second] += 1.0;
  }
  SparseVector v;
  double sq = 0.0;
  for (const auto& [idx, tf] : counts) {
    double w = tf * idf_[idx];
    v.index.push_back(idx);
    v.value.push_back(w);
    sq += w * w;
  }
  if (sq > 0.0) {
    const double inv = 1.0 / std::sqrt(sq);
    for (double& w : v.value) w *= inv;
  }
  return v;
}

std::vector<SparseVector> TfidfVectorizer::fit_transform(const std::vector<std::string>& documents) {
  fit(documents);
  std::vector<SparseVector> rows;
  rows.reserve(documents.size());
  for (const auto& d : documents) rows.push_back(transform(d));
  return rows;
}

nlohmann::json TfidfVectorizer::to_json() const {
  return {{"min_df", options_.min_df},
          {"max_features", options_.max_features},
          {"terms", terms_},
          {"idf", idf_}};
}

TfidfVectorizer TfidfVectorizer::from_json(const nlohmann::json& j) {
  TfidfVectorizer v(TfidfOptions{j.at("min_df").get<std::size_t>(),
                                 j.at("max_features").get<std::size_t>()});
  v.terms_ = j.at("terms").get<std::vector<std::string>>();
  v.idf_ = j.at("idf").get<std::vector<double>>();
  if (v.terms_.size() != v.idf_.size()) throw DataError("TF-IDF vocabulary and idf differ in size");
  for (std::uint32_t i = 0; i < v.terms_.size(); ++i) v.lookup_.emplace(v.terms_[i], i);
  return v;
}

}  // namespace halrm::text
