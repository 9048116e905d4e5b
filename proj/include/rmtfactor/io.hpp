#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>

#include "rmtfactor/data_model.hpp"

namespace rmtfactor {

struct CsvReadOptions {
  bool skip_header = false;
  char delimiter = ',';
};

/// Parses the ingestion format: one line per measured variable, one field per
/// sample. Parse failures raise Error(kParseError) naming the 1-based line and
/// field.
RawDataSource read_source_csv(std::istream& in, const CsvReadOptions& options = {});
RawDataSource read_source_csv(const std::filesystem::path& path,
                              const CsvReadOptions& options = {});

void write_source_csv(std::ostream& out, const RawDataSource& source);

/// Writes through a sibling temporary file and renames it into place, so a
/// failing writer never leaves a partial file at `path`.
void write_file_atomic(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& writer);

}  // namespace rmtfactor
