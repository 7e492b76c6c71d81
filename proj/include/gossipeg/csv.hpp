#ifndef GOSSIPEG_CSV_HPP_
#define GOSSIPEG_CSV_HPP_

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "gossipeg/error.hpp"
#include "gossipeg/metrics.hpp"

namespace gossipeg {

inline constexpr const char* kRunCsvHeader = "k,gamma,dist2,mean_dist2,consensus_err,gap,avg_sq_opnorm";

/// Shortest text of at most 17 significant digits that parses back to v.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline std::string format_optional(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

inline std::string run_csv_row(const RunRecord& r) {
  std::string row = std::to_string(r.k);
  row += ',' + format_double(r.gamma);
  row += ',' + format_optional(r.dist2);
  row += ',' + format_optional(r.mean_dist2);
  row += ',' + format_double(r.consensus_err);
  row += ',' + format_optional(r.gap);
  row += ',' + format_double(r.avg_sq_opnorm);
  return row;
}

inline std::string run_csv(const std::vector<RunRecord>& records) {
  std::string out = kRunCsvHeader;
  out += '\n';
  for (const auto& r : records) {
    out += run_csv_row(r);
    out += '\n';
  }
  return out;
}

/// Writes to a sibling temporary and renames, so readers never see a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const auto parent = path.parent_path();
  std::error_code ec;
  if (!parent.empty()) std::filesystem::create_directories(parent, ec);
  if (ec) throw Error("cannot create output directory '" + parent.string() + "': " + ec.message());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw Error("csv: no column named '" + name + "'");
  }
  bool has_column(const std::string& name) const {
    for (const auto& h : header)
      if (h == name) return true;
    return false;
  }
  std::string joined_header() const {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
    return out;
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline CsvTable parse_csv(std::istream& in, const std::string& source = "<csv>") {
  CsvTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (table.header.empty()) {
      table.header = std::move(cells);
      continue;
    }
    if (cells.size() != table.header.size())
      throw Error(source + ":" + std::to_string(lineno) + ": expected " + std::to_string(table.header.size()) +
                  " fields, got " + std::to_string(cells.size()));
    table.rows.push_back(std::move(cells));
  }
  if (table.header.empty()) throw Error(source + ": empty csv file");
  return table;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open csv file '" + path + "'");
  return parse_csv(in, path);
}

inline std::optional<double> parse_cell(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size()) throw Error("csv: not a number: '" + cell + "'");
  return v;
}

}  // namespace gossipeg

#endif  // GOSSIPEG_CSV_HPP_
