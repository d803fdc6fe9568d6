#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <vector>

#include "halrm/store/store.hpp"

namespace halrm::store {

// Column order of the dataset CSV.
inline constexpr const char* kDatasetColumns[] = {
    "cve_id", "description", "cvss_vector", "cvss_v3_score", "published_date",
    "patched", "exploited", "epss",        "pulse_count"};

struct DatasetFilter {
  std::optional<Status> status;
  // Only rows whose score came from an assessment (training data).
  bool assessed_only = false;

  bool accepts(const VulnRecord& r) const;
};

// RFC 4180, CRLF line ends, header always written. Rows follow id order.
void export_dataset(const VulnStore& store, std::ostream& out, const DatasetFilter& filter = {});
void export_dataset(const std::vector<VulnRecord>& records, std::ostream& out,
                    const DatasetFilter& filter = {});

// Parses a dataset CSV back into records. Columns the CSV does not carry take
// their defaults: last_modified = published_date, status follows score
// presence, origin = fixture. Throws DataError with the offending line.
std::vector<VulnRecord> import_dataset(std::istream& in);

// One VulnRecord JSON document per line; lossless for every field.
void export_jsonl(const std::vector<VulnRecord>& records, std::ostream& out);
std::vector<VulnRecord> import_jsonl(std::istream& in);

// {"id": ..., "description": ...} lines consumed by the embedding sidecar.
void export_descriptions(const std::vector<VulnRecord>& records, std::ostream& out);

}  // namespace halrm::store
