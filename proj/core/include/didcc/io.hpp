#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "didcc/data.hpp"

namespace didcc {

/// Names of the CSV columns used for each role.
struct ColumnMapping {
  std::string outcome;
  std::string treatment;
  std::string period;
  std::vector<std::string> continuous;
  std::vector<std::string> unordered;
  std::vector<std::string> ordered;
  std::optional<std::string> cluster;

  /// Every role filled and every name used once.
  void validate() const;
};

struct IngestOptions {
  /// Min-max rescale continuous covariates to [0, 1].
  bool rescale = true;
};

struct ColumnRange {
  double min = 0.0;
  double max = 0.0;
};

struct IngestResult {
  std::vector<Sample> samples;
  std::vector<ColumnRange> continuous_ranges;  // before rescaling
};

/// Splits one CSV record. Fields may be double-quoted with "" as an escaped quote.
std::vector<std::string> split_csv_line(const std::string& line);

/// Reads a header row and typed records. Errors name the data row (1-based),
/// the file line and the column.
IngestResult ingest_csv(std::istream& in, const ColumnMapping& mapping, const IngestOptions& options = {});
IngestResult ingest_csv(const std::filesystem::path& path, const ColumnMapping& mapping,
                        const IngestOptions& options = {});

}  // namespace didcc
