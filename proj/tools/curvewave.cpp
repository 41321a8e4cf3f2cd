// curvewave: command-line driver for the circular step potential simulator.
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "curvewave/corefn.hpp"
#include "curvewave/errors.hpp"
#include "curvewave/scenario.hpp"

using namespace curvewave;
using scenario::json;

namespace {

struct Flags {
  std::string preset;
  std::string config;
  scenario::RunOptions run;
  std::optional<int> m;
  std::optional<double> kmax;
  std::optional<double> v_max, v_min, x_b, e0, sigma;
};

scenario::ScenarioConfig make_config(const Flags& f) {
  scenario::ScenarioConfig c;
  if (!f.config.empty()) {
    c = scenario::load_config(f.config);
    if (!f.preset.empty() && f.preset != c.name) throw DomainError("--preset conflicts with the preset in --config");
  } else if (!f.preset.empty()) {
    c = scenario::preset(f.preset);
  }
  if (f.m) {
    c.window.m_lo = *f.m;
    c.window.m_hi = *f.m;
  }
  if (f.kmax) c.window.k_max = *f.kmax;
  auto& b = c.barrier1d;
  if (f.v_max) b.rect.v_max = *f.v_max;
  if (f.v_min) b.rect.v_min = *f.v_min;
  if (f.x_b) b.rect.x_b = *f.x_b;
  if (f.e0) b.e0 = *f.e0;
  if (f.sigma) b.sigma = *f.sigma;
  c.validate();
  return c;
}

int fail(const std::string& kind, const std::string& message, scenario::Artifacts* out) {
  if (out) out->discard();
  json j{{"error", {{"kind", kind}, {"message", message}}}};
  std::cerr << j.dump() << "\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral wave-packet simulator for a 2D circular step potential"};
  app.require_subcommand(1);
  Flags f;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--preset", f.preset, "Packet preset")->check(CLI::IsMember({"A", "B", "C", "D"}));
    sub->add_option("--config", f.config, "INI configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", f.run.out_dir, "Output directory");
    sub->add_option("--jobs", f.run.jobs, "Worker cap (0: runtime default)")->check(CLI::NonNegativeNumber);
    sub->add_flag("--solve", f.run.solve, "Solve the mode table when none is present");
    sub->add_option("--tolerance-scale", f.run.tolerance_scale, "Multiply every report tolerance")
        ->check(CLI::PositiveNumber);
  };

  auto* modes = app.add_subcommand("modes", "Solve and serialise the spectrum for an (m, k) window");
  common(modes);
  modes->add_option("--m", f.m, "Single angular momentum")->check(CLI::NonNegativeNumber);
  modes->add_option("--kmax", f.kmax, "Largest Re k")->check(CLI::PositiveNumber);
  auto* expand = app.add_subcommand("expand", "Expansion coefficients and t=0 reconstruction");
  common(expand);
  auto* evolve = app.add_subcommand("evolve", "Frames at the configured times");
  common(evolve);
  auto* gh = app.add_subcommand("gh", "Goos-Haenchen trajectory fit and theory");
  common(gh);
  auto* husimi = app.add_subcommand("husimi", "Emission Husimi scan, Delta and alpha_T");
  common(husimi);
  auto* tunnel = app.add_subcommand("tunnel1d", "1D barrier phases, delays and packets");
  common(tunnel);
  tunnel->add_option("--v-max", f.v_max, "Barrier height");
  tunnel->add_option("--v-min", f.v_min, "Exit plateau");
  tunnel->add_option("--xb", f.x_b, "Barrier right edge");
  tunnel->add_option("--e0", f.e0, "Packet energy");
  tunnel->add_option("--sigma", f.sigma, "Window width in k");
  auto* report = app.add_subcommand("report", "All metrics against reference values");
  common(report);

  auto* corefn_cmd = app.add_subcommand("corefn", "")->group("");
  auto* eval = corefn_cmd->add_subcommand("eval", "J, H1 and K at complex argument");
  int order = 0;
  double re = 0.0, im = 0.0;
  eval->add_option("order", order)->required();
  eval->add_option("re", re)->required();
  eval->add_option("im", im)->required();
  corefn_cmd->require_subcommand(1);

  CLI11_PARSE(app, argc, argv);

  if (corefn_cmd->parsed()) {
    try {
      const corefn::cplx z{re, im};
      auto pair = [](corefn::cplx v) -> json { return json::array({v.real(), v.imag()}); };
      json j{{"order", order}, {"z", pair(z)},
             {"J", pair(corefn::bessel_j(order, z))}, {"H1", pair(corefn::hankel1(order, z))}};
      if (im == 0.0 && re > 0.0) j["K"] = corefn::bessel_k(order, re);
      std::cout << j.dump(2) << "\n";
      return 0;
    } catch (const Error& e) {
      return fail(e.kind(), e.what(), nullptr);
    } catch (const std::exception& e) {
      return fail("internal", e.what(), nullptr);
    }
  }

  std::optional<scenario::Artifacts> out;
  try {
    if (f.preset.empty() && f.config.empty() && !tunnel->parsed() && !modes->parsed())
      throw DomainError("pass --preset or --config");
    const auto cfg = make_config(f);
    out.emplace(f.run.out_dir);
    scenario::Pipeline p(cfg, f.run);
    json result;
    if (modes->parsed()) result = p.run_modes(*out);
    else if (expand->parsed()) result = p.run_expand(*out);
    else if (evolve->parsed()) result = p.run_evolve(*out);
    else if (gh->parsed()) result = p.run_gh(*out);
    else if (husimi->parsed()) result = p.run_husimi(*out);
    else if (tunnel->parsed()) result = p.run_tunnel1d(*out);
    else if (report->parsed()) result = p.run_report(*out);
    std::cout << result.dump(2) << "\n";
    return 0;
  } catch (const Error& e) {
    return fail(e.kind(), e.what(), out ? &*out : nullptr);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), out ? &*out : nullptr);
  }
}
