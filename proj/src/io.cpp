#include "spindiff/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace spindiff {

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, end);
}

void CsvTable::add_row(std::vector<double> row) {
  if (!columns.empty() && row.size() != columns.size())
    throw std::invalid_argument("CSV row width does not match the header");
  rows.push_back(std::move(row));
}

void write_csv(std::ostream& os, const CsvTable& t) {
  for (const auto& [k, v] : t.header) os << "# " << k << ": " << v << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
    os << '\n';
  }
}

CsvTable read_csv(std::istream& is) {
  CsvTable t;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    std::vector<double> row;
    bool numeric = true;
    for (auto& c : cells) {
      const auto first = c.find_first_not_of(" \t");
      const auto last = c.find_last_not_of(" \t");
      const std::string trimmed = first == std::string::npos ? "" : c.substr(first, last - first + 1);
      double v = 0.0;
      auto [p, ec] = std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), v);
      if (ec != std::errc() || p != trimmed.data() + trimmed.size()) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (t.columns.empty() && t.rows.empty()) {
        t.columns = cells;
        continue;
      }
      throw std::runtime_error("non-numeric CSV value on line " + std::to_string(lineno));
    }
    if (!t.rows.empty() && row.size() != t.rows.front().size())
      throw std::runtime_error("ragged CSV row on line " + std::to_string(lineno));
    t.rows.push_back(std::move(row));
  }
  return t;
}

OutputStage::OutputStage(std::filesystem::path out_dir, const std::string& tag)
    : out_dir_(std::move(out_dir)) {
  std::filesystem::create_directories(out_dir_);
  staging_ = out_dir_ / (".staging-" + tag);
  std::filesystem::remove_all(staging_);
  std::filesystem::create_directories(staging_);
}

OutputStage::~OutputStage() {
  if (!committed_) {
    std::error_code ec;
    std::filesystem::remove_all(staging_, ec);
  }
}

std::filesystem::path OutputStage::path(const std::string& name) {
  if (name.find('/') != std::string::npos || name.empty() || name[0] == '.')
    throw std::invalid_argument("output name must be a plain file name: " + name);
  files_.push_back(name);
  return staging_ / name;
}

void OutputStage::write_table(const std::string& name, const CsvTable& table) {
  std::ofstream os(path(name), std::ios::binary);
  write_csv(os, table);
  if (!os) throw std::runtime_error("failed to write " + name);
}

void OutputStage::write_text(const std::string& name, const std::string& text) {
  std::ofstream os(path(name), std::ios::binary);
  os << text;
  if (!os) throw std::runtime_error("failed to write " + name);
}

void OutputStage::commit() {
  for (const auto& f : files_) std::filesystem::rename(staging_ / f, out_dir_ / f);
  std::filesystem::remove_all(staging_);
  committed_ = true;
}

}  // namespace spindiff
