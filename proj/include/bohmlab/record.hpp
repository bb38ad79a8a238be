#pragma once
// Run records: result tables, pass/fail checks and their on-disk form
// (summary.json plus one CSV per table).

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace bohmlab {

/// Library version written into every record.
std::string_view version() noexcept;

/// Shortest decimal form that round-trips to the same double.
std::string format_number(double value);

using Cell = std::variant<std::int64_t, double, std::string>;

struct Table {
  std::string name;  // file stem
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  /// Throws precondition if the row width differs from the column count.
  void add_row(std::vector<Cell> row);
  std::string to_csv() const;
};

/// Two-column (coordinate, value) table for a density on grid nodes.
Table density_table(std::string name, const std::vector<double>& coordinates,
                    const std::vector<double>& values);

struct Check {
  std::string name;
  double value = 0.0;
  std::string relation;  // "<", "<=", ">", ">=", "=="
  double threshold = 0.0;
  bool pass = false;
};

struct RunRecord {
  std::string scenario;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<Table> tables;
  std::vector<Check> checks;
  std::vector<std::string> warnings;
  double wall_clock_seconds = 0.0;
  std::string code_version{version()};
  std::uint64_t seed = 0;

  bool pass() const noexcept;
  const Table* table(std::string_view name) const noexcept;
  const Check* check(std::string_view name) const noexcept;

  void check_less(std::string name, double value, double threshold);
  void check_less_equal(std::string name, double value, double threshold);
  void check_greater(std::string name, double value, double threshold);
  void check_greater_equal(std::string name, double value, double threshold);
  void check_equal(std::string name, double value, double expected);
  /// |value - target| <= tolerance, recorded with the deviation as value.
  void check_within(std::string name, double value, double target, double tolerance);
};

std::string summary_json(const RunRecord& record);

/// Writes summary.json and <table>.csv for every table into dir (created if
/// missing).
void write_record(const RunRecord& record, const std::filesystem::path& dir);

}  // namespace bohmlab
