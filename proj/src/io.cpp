#include "rmtfactor/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include "rmtfactor/error.hpp"

namespace rmtfactor {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::string where(std::size_t line, std::size_t field) {
  return "line " + std::to_string(line) + ", field " + std::to_string(field);
}

}  // namespace

RawDataSource read_source_csv(std::istream& in, const CsvReadOptions& options) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = options.skip_header;

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    std::vector<double> values;
    std::size_t field = 0;
    while (true) {
      ++field;
      auto pos = view.find(options.delimiter);
      std::string_view token = trim(view.substr(0, pos));
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
      if (token.empty() || ec != std::errc() || ptr != token.data() + token.size()) {
        throw Error(ErrorCode::kParseError,
                    where(line_no, field) + ": cannot parse '" + std::string(token) + "'");
      }
      if (!std::isfinite(value)) {
        throw Error(ErrorCode::kParseError, where(line_no, field) + ": non-finite value");
      }
      values.push_back(value);
      if (pos == std::string_view::npos) break;
      view.remove_prefix(pos + 1);
    }
    if (!rows.empty() && values.size() != rows.front().size()) {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(line_no) + " has " +
                      std::to_string(values.size()) + " fields, expected " +
                      std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw Error(ErrorCode::kParseError, "no data rows");

  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  return RawDataSource(std::move(m));
}

RawDataSource read_source_csv(const std::filesystem::path& path,
                              const CsvReadOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return read_source_csv(in, options);
}

void write_source_csv(std::ostream& out, const RawDataSource& source) {
  out << std::setprecision(17);
  const auto& v = source.values();
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      if (j) out << ',';
      out << v(i, j);
    }
    out << '\n';
  }
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& writer) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
    try {
      writer(out);
    } catch (...) {
      out.close();
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw;
    }
    out.flush();
    if (!out) {
      out.close();
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw Error(ErrorCode::kIoError, "write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::kIoError, "cannot rename into " + path.string());
  }
}

}  // namespace rmtfactor
