#include "bohmlab/record.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>

#include "bohmlab/error.hpp"

#ifndef BOHMLAB_VERSION
#define BOHMLAB_VERSION "0.0.0"
#endif

namespace bohmlab {

std::string_view version() noexcept { return BOHMLAB_VERSION; }

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string cell_text(const Cell& c) {
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
  return csv_field(std::get<std::string>(c));
}

nlohmann::json number_json(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

}  // namespace

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) {
    throw Error(ErrorKind::precondition, "row width does not match table " + name);
  }
  rows.push_back(std::move(row));
}

std::string Table::to_csv() const {
  std::string out;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c) out += ',';
    out += csv_field(columns[c]);
  }
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += cell_text(row[c]);
    }
    out += '\n';
  }
  return out;
}

Table density_table(std::string name, const std::vector<double>& coordinates,
                    const std::vector<double>& values) {
  if (coordinates.size() != values.size()) {
    throw Error(ErrorKind::precondition, "density table length mismatch");
  }
  Table t{std::move(name), {"coordinate", "value"}, {}};
  for (std::size_t j = 0; j < values.size(); ++j) t.add_row({coordinates[j], values[j]});
  return t;
}

bool RunRecord::pass() const noexcept {
  for (const auto& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

const Table* RunRecord::table(std::string_view name) const noexcept {
  for (const auto& t : tables) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

const Check* RunRecord::check(std::string_view name) const noexcept {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

void RunRecord::check_less(std::string name, double value, double threshold) {
  checks.push_back({std::move(name), value, "<", threshold, value < threshold});
}

void RunRecord::check_less_equal(std::string name, double value, double threshold) {
  checks.push_back({std::move(name), value, "<=", threshold, value <= threshold});
}

void RunRecord::check_greater(std::string name, double value, double threshold) {
  checks.push_back({std::move(name), value, ">", threshold, value > threshold});
}

void RunRecord::check_greater_equal(std::string name, double value, double threshold) {
  checks.push_back({std::move(name), value, ">=", threshold, value >= threshold});
}

void RunRecord::check_equal(std::string name, double value, double expected) {
  checks.push_back({std::move(name), value, "==", expected, value == expected});
}

void RunRecord::check_within(std::string name, double value, double target, double tolerance) {
  const double dev = std::abs(value - target);
  checks.push_back({std::move(name), dev, "<=", tolerance, dev <= tolerance});
}

std::string summary_json(const RunRecord& record) {
  nlohmann::ordered_json j;
  j["scenario"] = record.scenario;
  j["pass"] = record.pass();
  j["seed"] = record.seed;
  j["code_version"] = record.code_version;
  j["wall_clock_seconds"] = record.wall_clock_seconds;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : record.config) cfg[k] = v;
  j["config"] = cfg;
  j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : record.checks) {
    j["checks"].push_back({{"name", c.name},
                           {"value", number_json(c.value)},
                           {"relation", c.relation},
                           {"threshold", number_json(c.threshold)},
                           {"pass", c.pass}});
  }
  j["tables"] = nlohmann::ordered_json::array();
  for (const auto& t : record.tables) {
    j["tables"].push_back({{"name", t.name}, {"file", t.name + ".csv"}, {"columns", t.columns},
                           {"rows", t.rows.size()}});
  }
  j["warnings"] = record.warnings;
  return j.dump(2) + "\n";
}

void write_record(const RunRecord& record, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::configuration, "cannot create output directory " + dir.string());
  auto write = [&](const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw Error(ErrorKind::configuration, "cannot write " + p.string());
  };
  for (const auto& t : record.tables) write(dir / (t.name + ".csv"), t.to_csv());
  write(dir / "summary.json", summary_json(record));
}

}  // namespace bohmlab
