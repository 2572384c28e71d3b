#ifndef BIPHOTON_IO_HPP
#define BIPHOTON_IO_HPP

#include <unistd.h>

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "biphoton/errors.hpp"

namespace biphoton {

// A parsed CSV: header names plus rows of doubles.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw IoError("CSV is missing required column '" + name + "'");
  }
};

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Parses "name1,name2,...\n" followed by numeric rows.  Blank lines and lines
// starting with '#' are ignored.  Malformed cells raise IoError with the
// 1-based line number.
inline CsvTable parse_csv(const std::string& text, const std::string& origin) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    if (!have_header) {
      table.header = cells;
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size())
      throw IoError(origin + ":" + std::to_string(line_no) + ": expected " +
                    std::to_string(table.header.size()) + " fields, got " +
                    std::to_string(cells.size()));
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& cl : cells) {
      try {
        std::size_t used = 0;
        double v = std::stod(cl, &used);
        while (used < cl.size() && std::isspace(static_cast<unsigned char>(cl[used]))) ++used;
        if (used != cl.size()) throw std::invalid_argument(cl);
        row.push_back(v);
      } catch (const std::exception&) {
        throw IoError(origin + ":" + std::to_string(line_no) +
                      ": cannot parse numeric field '" + cl + "'");
      }
    }
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw IoError(origin + ": empty CSV (no header)");
  return table;
}

inline CsvTable read_csv_file(const std::string& path) {
  return parse_csv(read_text_file(path), path);
}

// Atomic write: the payload goes to <path>.tmp-<pid> and is renamed into
// place, so readers never observe a half-written file.
inline void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  const fs::path tmp = target.string() + ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("atomic rename failed for " + path);
  }
}

// Fixed-format double serialisation: round-trippable and stable across runs.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace biphoton

#endif  // BIPHOTON_IO_HPP
