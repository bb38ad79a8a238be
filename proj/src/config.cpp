#include "bohmlab/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "bohmlab/record.hpp"

namespace bohmlab {

namespace {

struct ScenarioInfo {
  Scenario id;
  std::string_view name;
  std::string_view summary;
};

constexpr ScenarioInfo kScenarios[] = {
    {Scenario::equivariance, "equivariance",
     "ensembles stay |Psi_t|^2-distributed (free, harmonic, two-packet)"},
    {Scenario::fcpf, "fcpf", "conditional X given Y follows |psi(x)|^2 per y-bin, with a negative control"},
    {Scenario::which_path, "which_path", "branch from Y alone (chance) versus from sign(dY/dt)"},
    {Scenario::pointer_measurement, "pointer_measurement",
     "pointer outcome frequencies equal branch weights"},
    {Scenario::povm_reconstruct, "povm_reconstruct", "tomographic POVM of configurational pointer records"},
    {Scenario::velocity_record, "velocity_record", "same reconstruction on sign(dY/dt) records fails"},
    {Scenario::measurability, "measurability", "v[Re psi] = v[i Im psi] = 0 while v[psi] != 0"},
    {Scenario::marginal_sensitivity, "marginal_sensitivity",
     "local x-side unitary: y-marginal fixed, dY/dt distribution moves"},
};

[[noreturn]] void fail(std::string_view field, const std::string& why) {
  throw Error(ErrorKind::configuration, std::string(field) + ": " + why);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(std::string_view field, const std::string& text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
    fail(field, "expected a finite number, got '" + text + "'");
  }
  return v;
}

std::uint64_t parse_unsigned(std::string_view field, const std::string& text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    fail(field, "expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

std::vector<std::size_t> parse_size_list(std::string_view field, const std::string& text) {
  std::vector<std::size_t> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    const auto t = trim(item);
    if (t.empty()) fail(field, "empty list item");
    out.push_back(static_cast<std::size_t>(parse_unsigned(field, t)));
  }
  if (out.empty()) fail(field, "expected a comma-separated list");
  return out;
}

RecordMode parse_mode(std::string_view field, const std::string& text) {
  if (text == "exact") return RecordMode::exact;
  if (text == "sampled") return RecordMode::sampled;
  fail(field, "expected 'exact' or 'sampled', got '" + text + "'");
}

struct Field {
  std::string_view section;
  std::string_view key;
  std::function<void(ExperimentConfig&, const std::string&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class T>
Field number_field(std::string_view section, std::string_view key, T ExperimentConfig::*member) {
  return {section, key,
          [member](ExperimentConfig& c, const std::string& v, std::string_view f) {
            if constexpr (std::is_floating_point_v<T>) c.*member = parse_double(f, v);
            else c.*member = static_cast<T>(parse_unsigned(f, v));
          },
          [member](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_number(c.*member);
            else return std::to_string(c.*member);
          }};
}

template <class S, class T>
Field nested_field(std::string_view section, std::string_view key, S ExperimentConfig::*outer,
                   T S::*member) {
  return {section, key,
          [outer, member](ExperimentConfig& c, const std::string& v, std::string_view f) {
            if constexpr (std::is_floating_point_v<T>) (c.*outer).*member = parse_double(f, v);
            else (c.*outer).*member = static_cast<T>(parse_unsigned(f, v));
          },
          [outer, member](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_number((c.*outer).*member);
            else return std::to_string((c.*outer).*member);
          }};
}

Field string_field(std::string_view section, std::string_view key,
                   std::string ExperimentConfig::*member) {
  return {section, key,
          [member](ExperimentConfig& c, const std::string& v, std::string_view) { c.*member = v; },
          [member](const ExperimentConfig& c) { return c.*member; }};
}

const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  static const std::vector<Field> table = {
      {"scenario", "name",
       [](C& c, const std::string& v, std::string_view) { c.scenario = scenario_from_string(v); },
       [](const C& c) { return std::string(to_string(c.scenario)); }},
      string_field("scenario", "potential", &C::potential),
      number_field("scenario", "y_bin_width", &C::y_bin_width),
      number_field("scenario", "branch_time", &C::branch_time),
      number_field("scenario", "wavenumber", &C::wavenumber),
      number_field("scenario", "theta", &C::theta),
      string_field("scenario", "operation", &C::operation),
      nested_field("grid", "nx", &C::grid, &GridSpec::nx),
      nested_field("grid", "ny", &C::grid, &GridSpec::ny),
      nested_field("grid", "x_min", &C::grid, &GridSpec::x_min),
      nested_field("grid", "x_max", &C::grid, &GridSpec::x_max),
      nested_field("grid", "y_min", &C::grid, &GridSpec::y_min),
      nested_field("grid", "y_max", &C::grid, &GridSpec::y_max),
      nested_field("physics", "hbar", &C::physics, &PhysicalParams::hbar),
      nested_field("physics", "mass_x", &C::physics, &PhysicalParams::mass_x),
      nested_field("physics", "mass_y", &C::physics, &PhysicalParams::mass_y),
      nested_field("packet", "a", &C::packet, &ExampleStateParams::a),
      nested_field("packet", "p", &C::packet, &ExampleStateParams::p),
      nested_field("packet", "sigma_x", &C::packet, &ExampleStateParams::sigma_x),
      nested_field("packet", "sigma_y", &C::packet, &ExampleStateParams::sigma_y),
      number_field("run", "n_samples", &C::n_samples),
      number_field("run", "seed", &C::seed),
      number_field("run", "dt", &C::dt),
      number_field("run", "t_final", &C::t_final),
      number_field("run", "threads", &C::threads),
      number_field("run", "eps_node", &C::eps_node),
      {"povm", "mode",
       [](C& c, const std::string& v, std::string_view f) { c.povm_mode = parse_mode(f, v); },
       [](const C& c) { return std::string(c.povm_mode == RecordMode::exact ? "exact" : "sampled"); }},
      {"povm", "dims",
       [](C& c, const std::string& v, std::string_view f) { c.dims = parse_size_list(f, v); },
       [](const C& c) {
         std::string s;
         for (std::size_t i = 0; i < c.dims.size(); ++i) {
           if (i) s += ",";
           s += std::to_string(c.dims[i]);
         }
         return s;
       }},
      string_field("povm", "basis", &C::basis),
      number_field("povm", "hermite_scale", &C::hermite_scale),
      number_field("povm", "sigma_ptr", &C::sigma_ptr),
      number_field("povm", "separation", &C::separation),
      number_field("povm", "n_holdout", &C::n_holdout),
      {"output", "path",
       [](C& c, const std::string& v, std::string_view) { c.output_path = v; },
       [](const C& c) { return c.output_path.string(); }},
  };
  return table;
}

bool is_multiple(double t, double dt) {
  const double r = t / dt;
  return std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, r);
}

}  // namespace

std::string_view to_string(Scenario s) noexcept {
  for (const auto& info : kScenarios) {
    if (info.id == s) return info.name;
  }
  return "unknown";
}

std::string_view scenario_summary(Scenario s) noexcept {
  for (const auto& info : kScenarios) {
    if (info.id == s) return info.summary;
  }
  return {};
}

Scenario scenario_from_string(std::string_view name) {
  for (const auto& info : kScenarios) {
    if (info.name == name) return info.id;
  }
  throw Error(ErrorKind::unknown_scenario, "scenario.name: unknown scenario '" + std::string(name) + "'");
}

const std::vector<Scenario>& all_scenarios() {
  static const std::vector<Scenario> list = [] {
    std::vector<Scenario> v;
    for (const auto& info : kScenarios) v.push_back(info.id);
    return v;
  }();
  return list;
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::echo() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields()) {
    out.emplace_back(std::string(f.section) + "." + std::string(f.key), f.get(*this));
  }
  return out;
}

ExperimentConfig parse_config(std::istream& in, std::string_view source) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    std::ostringstream os;
    os << source << ":" << e.line() << ": " << e.message();
    throw Error(ErrorKind::configuration, os.str());
  }
  ExperimentConfig config;
  bool have_name = false;
  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) fail(section, "key outside of any [section]");
    for (const auto& [key, value] : body) {
      const std::string field = section + "." + key;
      const Field* match = nullptr;
      for (const auto& f : fields()) {
        if (f.section == section && f.key == key) match = &f;
      }
      if (!match) fail(field, "unknown configuration key");
      match->set(config, trim(value.data()), field);
      have_name = have_name || field == "scenario.name";
    }
  }
  if (!have_name) fail("scenario.name", "missing");
  validate(config);
  return config;
}

ExperimentConfig parse_config_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_config(in);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::configuration, "cannot open config file " + path.string());
  return parse_config(in, path.string());
}

void validate(const ExperimentConfig& c) {
  auto power_of_two = [](std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; };
  if (!power_of_two(c.grid.nx)) fail("grid.nx", "must be a power of two >= 2");
  if (!power_of_two(c.grid.ny)) fail("grid.ny", "must be a power of two >= 2");
  if (!(c.grid.x_max > c.grid.x_min)) fail("grid.x_max", "must exceed grid.x_min");
  if (!(c.grid.y_max > c.grid.y_min)) fail("grid.y_max", "must exceed grid.y_min");
  if (!(c.physics.hbar > 0)) fail("physics.hbar", "must be positive");
  if (!(c.physics.mass_x > 0)) fail("physics.mass_x", "must be positive");
  if (!(c.physics.mass_y > 0)) fail("physics.mass_y", "must be positive");
  if (!(c.packet.sigma_x > 0)) fail("packet.sigma_x", "must be positive");
  if (!(c.packet.sigma_y > 0)) fail("packet.sigma_y", "must be positive");
  const bool uses_example = c.scenario == Scenario::fcpf || c.scenario == Scenario::which_path ||
                            c.scenario == Scenario::marginal_sensitivity;
  if (uses_example && c.packet.a < 6.0 * c.packet.sigma_x) {
    fail("packet.a", "must be at least 6 * packet.sigma_x for disjoint x-branches");
  }
  if (c.n_samples < 100) fail("run.n_samples", "must be at least 100");
  if (!(c.dt > 0)) fail("run.dt", "must be positive");
  if (!(c.t_final > 0)) fail("run.t_final", "must be positive");
  if (!is_multiple(c.t_final, c.dt)) fail("run.t_final", "must be a whole number of run.dt");
  {
    const double kx = std::numbers::pi * static_cast<double>(c.grid.nx) / (c.grid.x_max - c.grid.x_min);
    const double ky = std::numbers::pi * static_cast<double>(c.grid.ny) / (c.grid.y_max - c.grid.y_min);
    const double rate =
        c.physics.hbar * (kx * kx / (2 * c.physics.mass_x) + ky * ky / (2 * c.physics.mass_y));
    if (!(0.5 * c.dt * rate < std::numbers::pi)) {
      std::ostringstream os;
      os << "half step " << 0.5 * c.dt << " aliases the fastest grid mode (needs < "
         << std::numbers::pi / rate << ")";
      fail("run.dt", os.str());
    }
  }
  if (c.threads < 1) fail("run.threads", "must be at least 1");
  if (!(c.eps_node > 0 && c.eps_node < 1)) fail("run.eps_node", "must lie in (0, 1)");
  if (c.potential != "all" && c.potential != "free" && c.potential != "harmonic" &&
      c.potential != "two_packet") {
    fail("scenario.potential", "expected all, free, harmonic or two_packet");
  }
  if (!(c.y_bin_width >= 0)) fail("scenario.y_bin_width", "must be non-negative");
  if (!(c.branch_time > 0) || !is_multiple(c.branch_time, c.dt)) {
    fail("scenario.branch_time", "must be a positive whole number of run.dt");
  }
  if (c.operation != "mixer" && c.operation != "phase") {
    fail("scenario.operation", "expected mixer or phase");
  }
  for (auto d : c.dims) {
    if (d < 1 || d > 4) fail("povm.dims", "dimensions must lie in 1..4");
    if (c.basis == "branches" && d != 2) fail("povm.dims", "the branch basis has dimension 2");
  }
  if (c.basis != "hermite" && c.basis != "branches") fail("povm.basis", "expected hermite or branches");
  if (!(c.hermite_scale > 0)) fail("povm.hermite_scale", "must be positive");
  if (!(c.sigma_ptr > 0)) fail("povm.sigma_ptr", "must be positive");
  if (!(c.separation > 0)) fail("povm.separation", "must be positive");
  if (c.n_holdout < 1) fail("povm.n_holdout", "must be at least 1");
  if (c.output_path.empty()) fail("output.path", "must not be empty");
}

}  // namespace bohmlab
