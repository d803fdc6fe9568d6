#include "halrm/store/dataset.hpp"

#include <charconv>
#include <string>

#include "halrm/core/csv.hpp"
#include "halrm/core/errors.hpp"

namespace halrm::store {
namespace {

constexpr std::size_t kColumnCount = std::size(kDatasetColumns);

double parse_double(const std::string& s, std::size_t line, const char* column) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw DataError("line " + std::to_string(line) + ": invalid " + column + " '" + s + "'");
  }
  return v;
}

bool parse_bool(const std::string& s, std::size_t line, const char* column) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0" || s.empty()) return false;
  throw DataError("line " + std::to_string(line) + ": invalid " + column + " '" + s + "'");
}

}  // namespace

bool DatasetFilter::accepts(const VulnRecord& r) const {
  if (status && r.status != *status) return false;
  if (assessed_only &&
      !(r.status == Status::Analyzed && r.score_provenance == Provenance::NvdAssessed &&
        r.cvss_v3_score)) {
    return false;
  }
  return true;
}

void export_dataset(const std::vector<VulnRecord>& records, std::ostream& out,
                    const DatasetFilter& filter) {
  csv::write_row(out, csv::Row(std::begin(kDatasetColumns), std::end(kDatasetColumns)));
  for (const auto& r : records) {
    if (!filter.accepts(r)) continue;
    csv::write_row(out, {r.cve_id, r.description,
                         r.cvss_v3_metrics ? r.cvss_v3_metrics->to_string() : "",
                         r.cvss_v3_score ? csv::format_double(*r.cvss_v3_score) : "",
                         format_timestamp(r.published_date), r.patched ? "true" : "false",
                         r.exploited ? "true" : "false", csv::format_double(r.epss),
                         std::to_string(r.pulse_count)});
  }
}

void export_dataset(const VulnStore& store, std::ostream& out, const DatasetFilter& filter) {
  export_dataset(store.snapshot(), out, filter);
}

std::vector<VulnRecord> import_dataset(std::istream& in) {
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header) throw DataError("dataset CSV is empty (missing header)");
  if (header->size() != kColumnCount) {
    throw DataError("dataset CSV header has " + std::to_string(header->size()) +
                    " columns, expected " + std::to_string(kColumnCount));
  }
  for (std::size_t i = 0; i < kColumnCount; ++i) {
    std::string h = (*header)[i];
    if (i == 0 && h.rfind("\xEF\xBB\xBF", 0) == 0) h.erase(0, 3);
    if (h != kDatasetColumns[i]) {
      throw DataError("dataset CSV column " + std::to_string(i + 1) + " is '" + h +
                      "', expected '" + kDatasetColumns[i] + "'");
    }
  }
  std::vector<VulnRecord> out;
  while (auto row = reader.next()) {
    const std::size_t line = reader.line();
    if (row->size() == 1 && row->front().empty()) continue;
    if (row->size() != kColumnCount) {
      throw DataError("line " + std::to_string(line) + ": expected " +
                      std::to_string(kColumnCount) + " fields, got " +
                      std::to_string(row->size()));
    }
    const auto& f = *row;
    VulnRecord r;
    r.cve_id = f[0];
    r.description = f[1];
    try {
      if (!f[2].empty()) r.cvss_v3_metrics = MetricVector::parse(f[2]);
      r.published_date = require_timestamp(f[4]);
    } catch (const ValidationError& e) {
      throw DataError("line " + std::to_string(line) + ": " + e.what());
    }
    if (!f[3].empty()) r.cvss_v3_score = parse_double(f[3], line, "cvss_v3_score");
    r.last_modified = r.published_date;
    r.patched = parse_bool(f[5], line, "patched");
    r.exploited = parse_bool(f[6], line, "exploited");
    r.epss = f[7].empty() ? 0.0 : parse_double(f[7], line, "epss");
    r.pulse_count = f[8].empty() ? 0 : static_cast<int>(parse_double(f[8], line, "pulse_count"));
    r.status = r.cvss_v3_score ? Status::Analyzed : Status::Received;
    r.origin = Origin::Fixture;
    out.push_back(std::move(r));
  }
  return out;
}

void export_jsonl(const std::vector<VulnRecord>& records, std::ostream& out) {
  for (const auto& r : records) out << nlohmann::json(r).dump() << '\n';
}

std::vector<VulnRecord> import_jsonl(std::istream& in) {
  std::vector<VulnRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line == "\r") continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<VulnRecord>());
    } catch (const std::exception& e) {
      throw DataError("JSONL line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

void export_descriptions(const std::vector<VulnRecord>& records, std::ostream& out) {
  for (const auto& r : records) {
    out << nlohmann::json{{"id", r.cve_id}, {"description", r.description}}.dump() << '\n';
  }
}

}  // namespace halrm::store
