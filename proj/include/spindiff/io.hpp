#pragma once

// CSV tables with commented headers, and staged output directories that only
// become visible when a run succeeds.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace spindiff {

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

/// Shortest round-trip decimal form.
std::string format_double(double v);

struct CsvTable {
  std::vector<std::pair<std::string, std::string>> header;  ///< written as "# key: value"
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add_row(std::vector<double> row);
};

void write_csv(std::ostream& os, const CsvTable& table);

/// Reads numeric CSV, skipping '#' comments and one optional header line.
CsvTable read_csv(std::istream& is);

/// Files are written under <out_dir>/.staging-<tag> and moved into out_dir by
/// commit(). Dropping an uncommitted stage removes everything it wrote.
class OutputStage {
 public:
  OutputStage(std::filesystem::path out_dir, const std::string& tag);
  ~OutputStage();
  OutputStage(const OutputStage&) = delete;
  OutputStage& operator=(const OutputStage&) = delete;

  std::filesystem::path path(const std::string& name);
  void write_table(const std::string& name, const CsvTable& table);
  void write_text(const std::string& name, const std::string& text);
  const std::vector<std::string>& manifest() const { return files_; }
  void commit();

 private:
  std::filesystem::path out_dir_;
  std::filesystem::path staging_;
  std::vector<std::string> files_;
  bool committed_ = false;
};

}  // namespace spindiff
