#include <algorithm>
#include <fstream>
#include <set>

#include "halrm/clustering/clustering.hpp"
#include "halrm/core/csv.hpp"
#include "halrm/core/errors.hpp"
#include "halrm/store/store.hpp"

namespace halrm::clustering {

std::optional<int> ClusterAssignment::label_of(const std::string& id) const {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == id) return labels[i];
  }
  return std::nullopt;
}

std::map<std::string, int> ClusterAssignment::as_map() const {
  std::map<std::string, int> out;
  for (std::size_t i = 0; i < ids.size(); ++i) out[ids[i]] = labels[i];
  return out;
}

std::size_t ClusterAssignment::cluster_count() const {
  std::set<int> distinct;
  for (int l : labels) {
    if (l >= 0) distinct.insert(l);
  }
  return distinct.size();
}

std::size_t ClusterAssignment::noise_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), -1));
}

AssignReport assign_clusters(store::VulnStore& store, const ClusterAssignment& assignment) {
  AssignReport report;
  store::Transaction tx;
  for (std::size_t i = 0; i < assignment.ids.size(); ++i) {
    const auto& id = assignment.ids[i];
    if (!store.contains(id)) {
      report.unknown_ids.push_back(id);
      continue;
    }
    const int label = assignment.labels[i];
    if (label < 0) {
      tx.labels.emplace_back(id, std::nullopt);
      ++report.cleared;
    } else {
      tx.labels.emplace_back(id, label);
      ++report.updated;
    }
  }
  if (!tx.empty()) store.commit(tx);
  return report;
}

void write_assignment_csv(std::ostream& out, const ClusterAssignment& assignment) {
  csv::write_row(out, {"cve_id", "label"});
  for (std::size_t i = 0; i < assignment.ids.size(); ++i) {
    csv::write_row(out, {assignment.ids[i], std::to_string(assignment.labels[i])});
  }
}

void write_assignment_csv(const std::filesystem::path& path, const ClusterAssignment& assignment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_assignment_csv(out, assignment);
}

ClusterAssignment read_assignment_csv(std::istream& in) {
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header || *header != csv::Row{"cve_id", "label"}) {
    throw DataError("assignment CSV must start with the header cve_id,label");
  }
  ClusterAssignment a;
  while (auto row = reader.next()) {
    if (row->size() != 2) throw DataError("assignment CSV line " + std::to_string(reader.line()) + ": expected 2 fields");
    try {
      std::size_t used = 0;
      int label = std::stoi((*row)[1], &used);
      if (used != (*row)[1].size()) throw std::invalid_argument("trailing");
      a.ids.push_back((*row)[0]);
      a.labels.push_back(label);
    } catch (const std::logic_error&) {
      throw DataError("assignment CSV line " + std::to_string(reader.line()) + ": bad label '" + (*row)[1] + "'");
    }
  }
  return a;
}

}  // namespace halrm::clustering
