#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "curvewave/barrier1d.hpp"
#include "curvewave/observables.hpp"
#include "curvewave/packet.hpp"
#include "curvewave/spectrum.hpp"

namespace curvewave::scenario {

using json = nlohmann::ordered_json;

struct TableWindow {
  int m_lo = -1;  // -1: derived from the packet
  int m_hi = -1;
  double k_max = -1.0;
};

struct BarrierConfig {
  barrier1d::RectBarrier rect;
  double e_lo = 60.01;  // transmission phase window
  double e_hi = 100.0;
  double e_step = 0.01;
  double e0 = 80.0;     // local delay and the peak-timing packet
  double sigma = 0.5;
  double e0_alt = 50.0;  // second peak-timing packet
  double sigma_alt = 1.0;
  double r_lo = 0.01;   // reflection phase window
  double r_hi = 100.0;
  int mod_m = 17;
  double mod_v0 = 100.0;
  double mod_e0 = 118.0;
  double mod_sigma = 0.3;
  std::vector<double> mod_xb{2.6, 2.7, 2.8};
  std::vector<double> packet_times{0.0, 0.05, 0.1};
};

struct ScenarioConfig {
  std::string name = "custom";
  spectrum::PotentialSpec potential;
  packet::PacketSpec packet;
  double threshold = 0.0005;
  TableWindow window;
  std::string mode_table;  // empty: <out>/modes.txt
  packet::GridSpec grid;
  std::vector<double> times{0.5, 1.5};
  bool gh = false;
  std::vector<double> gh_pre{0.4, 0.5, 0.6};
  std::vector<double> gh_post{1.4, 1.5, 1.6};
  bool husimi = false;
  std::vector<double> husimi_times{7.5, 10.0};
  double alpha_lo = -0.15, alpha_hi = 0.05, alpha_step = 0.005;
  observables::HusimiGrid husimi_grid;
  bool fractions = false;
  double fraction_time = 3.0;
  std::vector<double> track_times{1.6, 1.8, 2.0, 2.2, 2.4};
  bool barrier = true;
  BarrierConfig barrier1d;

  /// Window actually used: explicit values or m0 -+ ceil(5 sqrt(sigma/2) R),
  /// k <= k0 + 5 sqrt(sigma/2) rounded up to a multiple of 5.
  [[nodiscard]] TableWindow resolved_window() const;
  void validate() const;
};

/// Named presets "A".."D"; throws DomainError for an unknown name.
ScenarioConfig preset(const std::string& name);
/// INI file; [scenario] preset = X seeds the defaults, other keys override.
ScenarioConfig load_config(const std::string& path);

struct RunOptions {
  std::string out_dir = "out";
  int jobs = 0;
  bool solve = false;
  double tolerance_scale = 1.0;
};

/// Files written by one subcommand; removed again when the run fails.
class Artifacts {
 public:
  explicit Artifacts(std::string dir);
  [[nodiscard]] std::string path(const std::string& name) const;
  void write_text(const std::string& name, const std::string& text);
  void write_json(const std::string& name, const json& j);
  /// Opens for writing and records the path; the caller streams into it.
  std::string claim(const std::string& name);
  void discard();
  [[nodiscard]] const std::vector<std::string>& written() const { return written_; }

 private:
  std::string dir_;
  std::vector<std::string> written_;
};

/// Lazily built stages shared by the subcommands of one run.
class Pipeline {
 public:
  Pipeline(ScenarioConfig cfg, RunOptions opt);
  ~Pipeline();

  [[nodiscard]] const ScenarioConfig& config() const { return cfg_; }
  [[nodiscard]] const RunOptions& options() const { return opt_; }

  const spectrum::ModeTable& modes();
  const packet::Expansion& expansion();
  const packet::ProfileCache& cache();
  packet::FieldFrame frame(double t);

  json run_modes(Artifacts& out);
  json run_expand(Artifacts& out);
  json run_evolve(Artifacts& out);
  json run_gh(Artifacts& out);
  json run_husimi(Artifacts& out);
  json run_fractions(Artifacts& out);
  json run_tunnel1d(Artifacts& out);
  /// Every enabled stage plus report.json with {value, paper_value, tolerance, pass}.
  json run_report(Artifacts& out);

  /// Seconds spent in the named stages (not written to any artifact).
  [[nodiscard]] double elapsed(const std::string& stage) const;

 private:
  struct State;
  ScenarioConfig cfg_;
  RunOptions opt_;
  std::unique_ptr<State> st_;
};

/// Resonance search around (m, Re k) used by the report and the acceptance run.
std::optional<spectrum::EigenMode> resonance_near(const spectrum::PotentialSpec& pot, int m, double re_k, double half_width);

struct Metric {
  std::string name;
  double value = 0.0;
  double paper_value = 0.0;
  double tolerance = 0.0;
  std::string kind = "abs";  // abs, rel, min, factor, range
  bool pass = false;
};

/// Pass rule per kind; tolerance is scaled by `scale`.
Metric make_metric(std::string name, double value, double paper_value, double tolerance, const std::string& kind,
                   double scale = 1.0);
json to_json(const Metric& m);

json units_json(const spectrum::PotentialSpec& pot);
/// Compact decimal for file names (7.5 -> "7.5", -0.045 -> "-0.045").
std::string format_number(double v);

}  // namespace curvewave::scenario
