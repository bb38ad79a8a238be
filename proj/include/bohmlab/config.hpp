#pragma once
// Experiment configuration: INI-style files with [section] headers and
// key = value lines. Every key has a default; unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bohmlab/lattice.hpp"
#include "bohmlab/povm.hpp"

namespace bohmlab {

enum class Scenario {
  equivariance,
  fcpf,
  which_path,
  pointer_measurement,
  povm_reconstruct,
  velocity_record,
  measurability,
  marginal_sensitivity,
};

std::string_view to_string(Scenario s) noexcept;
/// Throws unknown_scenario.
Scenario scenario_from_string(std::string_view name);
const std::vector<Scenario>& all_scenarios();
std::string_view scenario_summary(Scenario s) noexcept;

struct GridSpec {
  std::size_t nx = 256;
  std::size_t ny = 256;
  double x_min = -12.0;
  double x_max = 12.0;
  double y_min = -12.0;
  double y_max = 12.0;

  Grid1 grid_x() const { return Grid1(nx, x_min, x_max); }
  Grid1 grid_y() const { return Grid1(ny, y_min, y_max); }
};

struct ExperimentConfig {
  Scenario scenario = Scenario::equivariance;
  PhysicalParams physics;
  GridSpec grid;
  ExampleStateParams packet;

  // [run]
  std::size_t n_samples = 10000;
  std::uint64_t seed = 1;
  double dt = 0.005;
  double t_final = 1.0;
  unsigned threads = 1;
  double eps_node = 1e-12;

  // [scenario]
  std::string potential = "all";  // equivariance: free | harmonic | two_packet | all
  double y_bin_width = 0.0;        // fcpf; 0 selects 4 grid spacings
  double branch_time = 0.3;        // fcpf: evolution time of the branching state
  double wavenumber = 5.0;         // measurability
  double theta = std::numbers::pi / 2;  // marginal_sensitivity
  std::string operation = "mixer";      // marginal_sensitivity: mixer | phase

  // [povm]
  RecordMode povm_mode = RecordMode::exact;
  std::vector<std::size_t> dims{2, 3};
  std::string basis = "hermite";  // hermite | branches
  double hermite_scale = 1.0;
  double sigma_ptr = 0.5;
  double separation = 6.0;
  std::size_t n_holdout = 20;

  // [output]
  std::filesystem::path output_path = "bohmlab-out";

  /// Canonical "section.key" -> value listing of every field.
  std::vector<std::pair<std::string, std::string>> echo() const;
};

/// Parses INI text. Throws configuration (naming the offending field) on
/// syntax errors, unknown sections or keys and unparsable values, and
/// unknown_scenario for an unrecognised scenario name. Calls validate().
ExperimentConfig parse_config(std::istream& in, std::string_view source = "<input>");
ExperimentConfig parse_config_string(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Range and consistency checks; throws configuration naming the field.
void validate(const ExperimentConfig& config);

}  // namespace bohmlab
