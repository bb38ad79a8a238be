// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "bohmlab/config.hpp"
#include "bohmlab/dynamics.hpp"
#include "bohmlab/experiments.hpp"
#include "bohmlab/lattice.hpp"

using namespace bohmlab;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

ExperimentConfig defaults(std::string_view scenario) {
  return parse_config_string("[scenario]\nname = " + std::string(scenario) + "\n");
}

// Folds every check of a scenario record into the outcome.
void absorb(Outcome& out, const RunRecord& rec) {
  for (const auto& c : rec.checks) {
    if (c.pass) continue;
    out.pass = false;
    std::ostringstream os;
    os << " " << rec.scenario << ":" << c.name << "=" << c.value << " (need " << c.relation << " "
       << c.threshold << ")";
    out.detail += os.str();
  }
}

void note(Outcome& out, const std::string& what, double value, const char* rel, double threshold,
          bool ok) {
  std::ostringstream os;
  os << " " << what << "=" << value;
  if (!ok) os << " (need " << rel << " " << threshold << ")";
  out.detail += os.str();
  out.pass = out.pass && ok;
}

const RunRecord* find_record(const std::deque<RunRecord>& recs, std::string_view scenario) {
  for (const auto& r : recs) {
    if (r.scenario == scenario) return &r;
  }
  return nullptr;
}

std::deque<RunRecord> g_records;

const RunRecord& scenario(std::string_view name, unsigned threads = 1) {
  if (threads == 1) {
    if (const auto* r = find_record(g_records, name)) return *r;
  }
  auto c = defaults(name);
  c.threads = threads;
  g_records.push_back(run_scenario(c));
  return g_records.back();
}

Outcome unitarity_and_equilibrium() {
  Outcome out;
  const Grid1 g(256, -12.0, 12.0);
  auto psi = product_state(gaussian_packet(g, -1.0, 0.5, 2.0), gaussian_packet(g, 0.5, 0.7, -1.0));
  SplitStepEvolver ev(g, g, FreePotential{}, PhysicalParams{});
  const double n0 = psi.norm();
  double worst = 0.0;
  for (int s = 0; s < 10000; ++s) {
    ev.step(psi, 0.0025);
    worst = std::max(worst, std::abs(psi.norm() - n0));
  }
  note(out, "norm_drift_1e4_steps", worst, "<=", 1e-8, worst <= 1e-8);
  const auto& rec = scenario("equivariance");
  double max_ks = 0.0;
  for (const auto& c : rec.checks) {
    if (c.name.find(".ks_") != std::string::npos) max_ks = std::max(max_ks, c.value);
  }
  note(out, "max_ks", max_ks, "<", 0.02, max_ks < 0.02);
  absorb(out, rec);
  return out;
}

Outcome analytic_dynamics() {
  Outcome out;
  const Grid1 g(256, -12.0, 12.0);
  const double s0 = 0.5;
  auto psi = product_state(gaussian_packet(g, 0.0, s0, 0.0), gaussian_packet(g, 0.0, 1.0, 0.0));
  SplitStepEvolver ev(g, g, FreePotential{}, PhysicalParams{});
  for (int s = 0; s < 400; ++s) ev.step(psi, 0.0025);
  const auto m = marginal_density(psi, Axis::x);
  double var = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) var += m[i] * g.coordinate(i) * g.coordinate(i) * g.spacing();
  const double want = s0 * std::sqrt(1.0 + std::pow(1.0 / (2 * s0 * s0), 2));
  const double rel = std::abs(std::sqrt(var) / want - 1.0);
  note(out, "width_rel_error", rel, "<=", 1e-4, rel <= 1e-4);

  const double k = 2 * std::numbers::pi * 4 / g.length();
  WaveFunction1 plane(g), flat(g), standing(g);
  for (std::size_t j = 0; j < g.size(); ++j) {
    plane[j] = std::polar(1.0, k * g.coordinate(j));
    flat[j] = 1.0;
    standing[j] = std::cos(k * g.coordinate(j));
  }
  plane.normalize();
  flat.normalize();
  standing.normalize();
  IntegrationOptions opt;
  opt.t_final = 1.0;
  opt.dt = 0.005;
  const auto tr = integrate_trajectory(product_state(plane, flat), {-5.0, 1.0}, FreePotential{}, {}, opt);
  double straight = 0.0;
  for (std::size_t s = 0; s < tr.configs.size(); ++s) {
    straight = std::max(straight, std::hypot(tr.configs[s].x - (-5.0 + k * tr.times[s]), tr.configs[s].y - 1.0));
  }
  note(out, "plane_wave_deviation", straight, "<", 1e-6, straight < 1e-6);
  const auto still = integrate_trajectory(product_state(standing, flat), {0.7, -0.3}, FreePotential{}, {}, opt);
  const double disp = std::hypot(still.configs.back().x - 0.7, still.configs.back().y + 0.3);
  note(out, "standing_wave_displacement", disp, "<", 1e-10, disp < 1e-10);
  return out;
}

Outcome scenario_outcome(std::string_view name) {
  Outcome out;
  const auto& rec = scenario(name);
  absorb(out, rec);
  if (out.pass) out.detail = " " + std::to_string(rec.checks.size()) + " checks";
  if (rec.checks.empty()) out.pass = false;
  return out;
}

Outcome velocity_record() {
  Outcome out = scenario_outcome("velocity_record");
  const auto& rec = scenario("velocity_record");
  if (const auto* c = rec.check("hermite.holdout_residual")) {
    out.detail += " holdout=" + std::to_string(c->value);
  }
  return out;
}

Outcome which_path() {
  Outcome out = scenario_outcome("which_path");
  const auto& rec = scenario("which_path");
  if (const auto* c = rec.check("default.accuracy_gap")) out.detail += " gap=" + std::to_string(c->value);
  return out;
}

Outcome determinism() {
  Outcome out;
  for (const char* name : {"equivariance", "fcpf", "velocity_record"}) {
    auto c = defaults(name);
    if (std::string_view(name) == "velocity_record") c.povm_mode = RecordMode::sampled;
    const auto a = run_scenario(c);
    const auto b = run_scenario(c);
    c.threads = 4;
    const auto d = run_scenario(c);
    bool same = a.tables.size() == b.tables.size() && a.tables.size() == d.tables.size();
    for (std::size_t t = 0; same && t < a.tables.size(); ++t) {
      const auto csv = a.tables[t].to_csv();
      same = csv == b.tables[t].to_csv() && csv == d.tables[t].to_csv();
    }
    out.detail += std::string(" ") + name + (same ? "=identical" : "=DIFFERS");
    out.pass = out.pass && same;
  }
  return out;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"unitarity and equilibrium", unitarity_and_equilibrium},
      {"analytic-oracle dynamics", analytic_dynamics},
      {"conditional probability formula", [] { return scenario_outcome("fcpf"); }},
      {"pointer statistics", [] { return scenario_outcome("pointer_measurement"); }},
      {"POVM reconstruction", [] { return scenario_outcome("povm_reconstruct"); }},
      {"velocity record is not a POVM", velocity_record},
      {"which-path asymmetry", which_path},
      {"velocity measurability", [] { return scenario_outcome("measurability"); }},
      {"marginal sensitivity", [] { return scenario_outcome("marginal_sensitivity"); }},
      {"determinism across runs and threads", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string(" error: ") + e.what();
    }
    failures += !o.pass;
    std::printf("criterion %2zu %s: %s:%s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
