#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "bohmlab/config.hpp"
#include "bohmlab/experiments.hpp"
#include "bohmlab/record.hpp"

using namespace bohmlab;

namespace {

ErrorKind kind_of(auto&& fn, std::string* message = nullptr) {
  try {
    fn();
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::precondition;
}

const Grid1 G(256, -12.0, 12.0);

std::string ini_from_echo(const std::vector<std::pair<std::string, std::string>>& echo) {
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections;
  for (const auto& [k, v] : echo) {
    const auto dot = k.find('.');
    sections[k.substr(0, dot)].emplace_back(k.substr(dot + 1), v);
  }
  std::ostringstream os;
  for (const auto& [s, kvs] : sections) {
    os << "[" << s << "]\n";
    for (const auto& [k, v] : kvs) os << k << " = " << v << "\n";
  }
  return os.str();
}

double max_abs_diff(const WaveFunction2& a, const WaveFunction2& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.amplitudes().size(); ++k) {
    worst = std::max(worst, std::abs(a.amplitudes()[k] - b.amplitudes()[k]));
  }
  return worst;
}

}  // namespace

TEST_CASE("scenario names") {
  CHECK(all_scenarios().size() == 8);
  for (auto s : all_scenarios()) {
    CHECK(scenario_from_string(to_string(s)) == s);
    CHECK_FALSE(scenario_summary(s).empty());
  }
  CHECK(kind_of([] { scenario_from_string("teleportation"); }) == ErrorKind::unknown_scenario);
}

TEST_CASE("parsing a minimal config applies the defaults") {
  const auto c = parse_config_string("[scenario]\nname = which_path\n");
  CHECK(c.scenario == Scenario::which_path);
  CHECK(c.grid.nx == 256);
  CHECK(c.n_samples == 10000);
  CHECK(c.seed == 1);
  CHECK(c.dt == 0.005);
  CHECK(c.packet.a == 5.0);
  CHECK(c.packet.p == 10.0);
}

TEST_CASE("parsing sets every section") {
  const auto c = parse_config_string(
      "# comment\n[scenario]\nname = povm_reconstruct\n; another\n[grid]\nnx = 128\nx_min = -8\n"
      "[run]\nseed = 77\nthreads = 3\n[povm]\nmode = sampled\ndims = 2, 3, 4\nbasis = hermite\nhermite_scale = 1.5\n"
      "[output]\npath = out/here\n");
  CHECK(c.grid.nx == 128);
  CHECK(c.grid.x_min == -8.0);
  CHECK(c.seed == 77);
  CHECK(c.threads == 3);
  CHECK(c.povm_mode == RecordMode::sampled);
  CHECK(c.dims == std::vector<std::size_t>{2, 3, 4});
  CHECK(c.hermite_scale == 1.5);
  CHECK(c.output_path == "out/here");
}

TEST_CASE("config errors name the offending field") {
  std::string msg;
  CHECK(kind_of([] { parse_config_string("[scenario]\nname = teleportation\n"); }) ==
        ErrorKind::unknown_scenario);
  CHECK(kind_of([] { parse_config_string("[scenario]\nname = fcpf\n[grid]\nnz = 4\n"); }, &msg) ==
        ErrorKind::configuration);
  CHECK(msg.find("grid.nz") != std::string::npos);
  CHECK(kind_of([] { parse_config_string("[scenario]\nname = fcpf\n[run]\nn_samples = lots\n"); }, &msg) ==
        ErrorKind::configuration);
  CHECK(msg.find("run.n_samples") != std::string::npos);
  CHECK(kind_of([] { parse_config_string("[grid]\nnx = 64\n"); }, &msg) == ErrorKind::configuration);
  CHECK(msg.find("scenario.name") != std::string::npos);
  CHECK(kind_of([] { parse_config_string("[scenario]\nname = fcpf\n[grid]\nnx = 100\n"); }, &msg) ==
        ErrorKind::configuration);
  CHECK(msg.find("grid.nx") != std::string::npos);
  CHECK(kind_of([] { parse_config_string("[scenario]\nname = equivariance\n[run]\ndt = 0.01\n"); }, &msg) ==
        ErrorKind::configuration);
  CHECK(msg.find("run.dt") != std::string::npos);
  CHECK(kind_of([] { parse_config_string("[scenario]\nname = fcpf\n[packet]\na = 1\n"); }, &msg) ==
        ErrorKind::configuration);
  CHECK(msg.find("packet.a") != std::string::npos);
  CHECK(kind_of([] { parse_config_string("[scenario\nname = fcpf\n"); }) == ErrorKind::configuration);
  CHECK(kind_of([] { load_config("/nonexistent/config.ini"); }) == ErrorKind::configuration);
}

TEST_CASE("the config echo parses back to the same config") {
  auto c = parse_config_string("[scenario]\nname = marginal_sensitivity\ntheta = 0.25\n[run]\nseed = 9\n");
  const auto echo = c.echo();
  const auto back = parse_config_string(ini_from_echo(echo));
  CHECK(back.echo() == echo);
  CHECK(back.theta == 0.25);
}

TEST_CASE("identity unitary and zero phase leave Psi bitwise unchanged") {
  const auto psi = example_state(G, G, ExampleStateParams{});
  const auto basis = SystemBasis::branches(G, 5.0, 0.5);
  const auto same = apply_local_x_unitary(psi, basis, branch_mixer(0.0));
  const auto same2 = apply_phase_imprint(psi, 0.0);
  bool equal = true;
  for (std::size_t k = 0; k < psi.amplitudes().size(); ++k) {
    equal = equal && same.amplitudes()[k] == psi.amplitudes()[k] && same2.amplitudes()[k] == psi.amplitudes()[k];
  }
  CHECK(equal);
}

TEST_CASE("branch mixer is unitary and mixes the branches") {
  const auto u = branch_mixer(std::numbers::pi / 2);
  CHECK((u.adjoint() * u - Eigen::MatrixXcd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(std::abs(std::abs(u(0, 1)) - std::sqrt(0.5)) < 1e-15);
  const auto psi = example_state(G, G, ExampleStateParams{});
  const auto basis = SystemBasis::branches(G, 5.0, 0.5);
  const auto mixed = apply_local_x_unitary(psi, basis, u);
  CHECK(std::abs(mixed.norm() - 1.0) < 1e-12);
  // Local on x: the y-marginal is unchanged.
  const auto a = marginal_density(psi, Axis::y);
  const auto b = marginal_density(mixed, Axis::y);
  double worst = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) worst = std::max(worst, std::abs(a[j] - b[j]));
  CHECK(worst < 1e-12);
}

TEST_CASE("phase imprint preserves the density") {
  const auto psi = example_state(G, G, ExampleStateParams{});
  const auto out = apply_phase_imprint(psi, 1.1);
  const auto a = psi.density();
  const auto b = out.density();
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
  CHECK(worst < 1e-14);
  CHECK(max_abs_diff(psi, out) > 0.1);
}

TEST_CASE("which-path accuracies") {
  const ExampleStateParams shape;
  const auto r = which_path_accuracies(G, G, shape, {}, 10000, 1);
  CHECK(std::abs(r.config_accuracy - 0.5) < 0.015);
  CHECK(r.velocity_accuracy >= 0.99);
  CHECK(r.n_config_ties == 10000);

  ExampleStateParams null = shape;
  null.p = 0.0;
  const auto z = which_path_accuracies(G, G, null, {}, 10000, 1);
  CHECK(std::abs(z.velocity_accuracy - 0.5) < 0.015);
}

TEST_CASE("marginal sensitivity of the example state under a branch mixer") {
  const auto psi = example_state(G, G, ExampleStateParams{});
  const auto basis = SystemBasis::branches(G, 5.0, 0.5);
  const Grid1 bins(64, -15.0, 15.0);
  const auto mixed = apply_local_x_unitary(psi, basis, branch_mixer(std::numbers::pi / 2));
  const auto r = marginal_sensitivity(psi, mixed, {}, bins, 10000, 1);
  CHECK(r.tv_y_marginal < 1e-9);
  CHECK(r.tv_ydot > 0.1);
  const auto id = marginal_sensitivity(psi, psi, {}, bins, 10000, 1);
  CHECK(id.tv_y_marginal < 1e-9);
  CHECK(id.tv_ydot < 1e-9);
}

TEST_CASE("scenario runs are deterministic and independent of threads") {
  auto c = parse_config_string("[scenario]\nname = velocity_record\n[povm]\nmode = sampled\n[run]\nn_samples = 2000\n");
  const auto a = run_scenario(c);
  c.threads = 4;
  const auto b = run_scenario(c);
  REQUIRE(a.tables.size() == b.tables.size());
  for (std::size_t t = 0; t < a.tables.size(); ++t) CHECK(a.tables[t].to_csv() == b.tables[t].to_csv());
  CHECK(a.scenario == "velocity_record");
  CHECK(a.seed == 1);
  CHECK(a.pass());
}

TEST_CASE("measurability scenario record") {
  const auto r = run_scenario(parse_config_string("[scenario]\nname = measurability\n"));
  CHECK(r.pass());
  REQUIRE(r.check("packet.sup_full") != nullptr);
  CHECK(r.check("packet.sup_full")->value > 0.1);
  const auto json = summary_json(r);
  CHECK(json.find("\"scenario\": \"measurability\"") != std::string::npos);
  CHECK(json.find("\"code_version\": \"" + std::string(version()) + "\"") != std::string::npos);
}

TEST_CASE("number formatting round-trips") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1e-300) == "1e-300");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(format_number(-INFINITY) == "-inf");
}

TEST_CASE("tables write CSV in their column order") {
  Table t{"t", {"name", "n", "value"}, {}};
  t.add_row({std::string("a,b"), std::int64_t{3}, 0.5});
  CHECK(t.to_csv() == "name,n,value\n\"a,b\",3,0.5\n");
  CHECK_THROWS_AS(t.add_row({1.0}), Error);
  const auto d = density_table("rho", {0.0, 1.0}, {0.25, 0.75});
  CHECK(d.to_csv() == "coordinate,value\n0,0.25\n1,0.75\n");
}

TEST_CASE("record checks") {
  RunRecord r;
  r.check_less("a", 1.0, 2.0);
  r.check_within("b", 0.51, 0.5, 0.015);
  CHECK(r.pass());
  CHECK(r.check("b")->value == doctest::Approx(0.01));
  r.check_greater("c", 0.0, 0.1);
  CHECK_FALSE(r.pass());
  CHECK(r.check("missing") == nullptr);
}
