#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <thread>

#include "halrm/clustering/clustering.hpp"
#include "halrm/core/errors.hpp"

namespace halrm::clustering {

std::string to_string(FeatureKind kind) {
  return kind == FeatureKind::BagOfWords ? "bow" : "embedding";
}

void FeatureMatrix::validate() const {
  if (ids.size() != rows.size()) {
    throw ValidationError("feature matrix has " + std::to_string(rows.size()) + " rows for " +
                          std::to_string(ids.size()) + " ids");
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.index.size() != row.value.size()) throw ValidationError("malformed sparse row " + ids[r]);
    for (std::size_t k = 0; k < row.nnz(); ++k) {
      if (!std::isfinite(row.value[k])) throw ValidationError("non-finite feature in row " + ids[r]);
      if (row.index[k] >= dimension) throw ValidationError("feature index out of range in row " + ids[r]);
    }
  }
}

FeatureMatrix featurize_bow(const std::vector<Document>& corpus, text::TfidfOptions options) {
  if (corpus.empty()) throw ValidationError("cannot featurize an empty corpus");
  std::vector<std::string> docs;
  docs.reserve(corpus.size());
  FeatureMatrix m;
  m.kind = FeatureKind::BagOfWords;
  for (const auto& [id, description] : corpus) {
    m.ids.push_back(id);
    docs.push_back(description);
  }
  text::TfidfVectorizer vectorizer(options);
  m.rows = vectorizer.fit_transform(docs);
  m.dimension = vectorizer.dimension();
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    if (m.rows[i].nnz() == 0) spdlog::warn("{}: description has no usable terms, zero feature row", m.ids[i]);
  }
  return m;
}

FeatureMatrix parse_embeddings(std::istream& in) {
  FeatureMatrix m;
  m.kind = FeatureKind::Embedding;
  std::string line;
  std::size_t line_no = 0;
  bool have_dim = false;
  auto fail = [&](const std::string& why) {
    return DataError("embeddings line " + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw fail(e.what());
    }
    if (!j.is_object()) throw fail("expected an object");
    if (!j.contains("id") || !j["id"].is_string()) throw fail("missing string field \"id\"");
    if (!j.contains("vector") || !j["vector"].is_array()) throw fail("missing array field \"vector\"");
    const auto& vec = j["vector"];
    if (vec.empty()) throw fail("empty vector");
    if (!have_dim) {
      m.dimension = vec.size();
      have_dim = true;
    } else if (vec.size() != m.dimension) {
      throw fail("dimension " + std::to_string(vec.size()) + " differs from " + std::to_string(m.dimension));
    }
    text::SparseVector row;
    for (std::size_t k = 0; k < vec.size(); ++k) {
      if (!vec[k].is_number()) throw fail("non-numeric vector entry at position " + std::to_string(k));
      double v = vec[k].get<double>();
      if (!std::isfinite(v)) throw fail("non-finite vector entry at position " + std::to_string(k));
      if (v != 0.0) {
        row.index.push_back(static_cast<std::uint32_t>(k));
        row.value.push_back(v);
      }
    }
    m.ids.push_back(j["id"].get<std::string>());
    m.rows.push_back(std::move(row));
  }
  return m;
}

FeatureMatrix load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embeddings file " + path.string());
  return parse_embeddings(in);
}

double cosine_distance(const text::SparseVector& a, const text::SparseVector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 1.0;
  return std::clamp(1.0 - a.dot(b) / (na * nb), 0.0, 2.0);
}

DistanceMatrix::DistanceMatrix(const FeatureMatrix& m, unsigned threads) : n_(m.size()) {
  d_.assign(n_ < 2 ? 0 : n_ * (n_ - 1) / 2, 0.0);
  std::vector<text::SparseVector> unit(m.rows);
  for (auto& row : unit) {
    double nrm = row.norm();
    if (nrm > 0.0) {
      for (double& v : row.value) v /= nrm;
    }
  }
  auto fill_row = [&](std::size_t i) {
    std::size_t base = i * n_ - i * (i + 1) / 2;
    for (std::size_t j = i + 1; j < n_; ++j) {
      double dist = 1.0;
      if (unit[i].nnz() != 0 && unit[j].nnz() != 0) {
        dist = std::clamp(1.0 - unit[i].dot(unit[j]), 0.0, 2.0);
      }
      d_[base + (j - i - 1)] = dist;
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n_ / 64, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n_; ++i) fill_row(i);
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n_; i += threads) fill_row(i);
    });
  }
  for (auto& th : pool) th.join();
}

double pairwise_percentile(const DistanceMatrix& d, double q) {
  std::vector<double> v = d.condensed();
  if (v.empty()) return 1.0;
  q = std::clamp(q, 0.0, 1.0);
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
  const double a = v[lo];
  double b = a;
  if (hi != lo) b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(hi), v.end());
  return a + (b - a) * (pos - static_cast<double>(lo));
}

}  // namespace halrm::clustering
