#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "curvewave/errors.hpp"
#include "curvewave/scenario.hpp"

using namespace curvewave;
using namespace curvewave::scenario;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("curvewave_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("presets carry the reference packets") {
  CHECK(preset("A").packet.m0 == 75.0);
  CHECK(preset("A").packet.k0 == 75.0);
  CHECK(preset("B").packet.m0 == 120.0);
  CHECK(preset("B").packet.k0 == 90.0);
  CHECK(preset("C").packet.k0 == 122.065);
  CHECK(preset("D").packet.k0 == 140.0);
  for (const char* n : {"A", "B", "C", "D"}) {
    CHECK(preset(n).packet.sigma == 100.0);
    CHECK(preset(n).threshold == 0.0005);
  }
  CHECK_THROWS_AS(preset("E"), DomainError);
}

TEST_CASE("automatic mode window") {
  const auto w = preset("A").resolved_window();
  CHECK(w.m_lo == 75 - 71);
  CHECK(w.m_hi == 75 + 71);
  CHECK(w.k_max == 115.0);
  CHECK(preset("C").resolved_window().k_max == 160.0);
}

TEST_CASE("INI configuration overrides the preset") {
  const auto dir = scratch("ini");
  const auto path = dir / "b.ini";
  std::ofstream(path) << "[scenario]\npreset = B\n[packet]\nsigma = 80\n[evolve]\ntimes = 0.25, 0.5 ,1\n"
                         "[husimi]\nenabled = false\n[barrier1d]\nmod_xb = 2.7\n";
  const auto c = load_config(path.string());
  CHECK(c.name == "B");
  CHECK(c.packet.m0 == 120.0);
  CHECK(c.packet.sigma == 80.0);
  CHECK(c.times == std::vector<double>{0.25, 0.5, 1.0});
  CHECK_FALSE(c.husimi);
  CHECK(c.barrier1d.mod_xb == std::vector<double>{2.7});

  std::ofstream(dir / "bad.ini") << "[packet]\nk0 = fast\n";
  CHECK_THROWS_AS(load_config((dir / "bad.ini").string()), FormatError);
  std::ofstream(dir / "broken.ini") << "[packet\nk0 = 3\n";
  CHECK_THROWS_AS(load_config((dir / "broken.ini").string()), FormatError);
  std::ofstream(dir / "domain.ini") << "[scenario]\npreset = A\n[packet]\nm0 = 200\n";
  CHECK_THROWS_AS(load_config((dir / "domain.ini").string()), DomainError);
}

TEST_CASE("metric pass rules") {
  CHECK(make_metric("a", 0.016, 0.015, 0.003, "abs").pass);
  CHECK_FALSE(make_metric("a", 0.019, 0.015, 0.003, "abs").pass);
  CHECK(make_metric("a", 0.019, 0.015, 0.003, "abs", 2.0).pass);
  CHECK(make_metric("r", 2427, 2474, 0.02, "rel").pass);
  CHECK_FALSE(make_metric("r", 2400, 2474, 0.02, "rel").pass);
  CHECK(make_metric("m", 0.995, 0.99, 0.0, "min").pass);
  CHECK(make_metric("x", 0.02, 0.0, 0.03, "max").pass);
  CHECK(make_metric("f", -4e-6, -1.57e-6, 3.0, "factor").pass);
  CHECK_FALSE(make_metric("f", -5e-6, -1.57e-6, 3.0, "factor").pass);
  CHECK_FALSE(make_metric("n", std::nan(""), 1.0, 1.0, "abs").pass);
  const auto j = to_json(make_metric("n", std::nan(""), 1.0, 1.0, "abs"));
  CHECK(j["value"].is_null());
  CHECK(j.contains("paper_value"));
  CHECK(j.contains("tolerance"));
  CHECK(j.contains("pass"));
  CHECK(format_number(7.5) == "7.5");
  CHECK(format_number(-0.045) == "-0.045");
}

TEST_CASE("artifacts are removed on discard") {
  const auto dir = scratch("artifacts");
  Artifacts a(dir.string());
  a.write_text("x.csv", "1\n");
  a.write_json("sub/y.json", json{{"k", 1}});
  CHECK(fs::exists(dir / "x.csv"));
  CHECK(fs::exists(dir / "sub" / "y.json"));
  a.discard();
  CHECK_FALSE(fs::exists(dir / "x.csv"));
  CHECK_FALSE(fs::exists(dir / "sub" / "y.json"));
}

TEST_CASE("missing mode table without --solve is an error") {
  const auto dir = scratch("missing");
  RunOptions o;
  o.out_dir = dir.string();
  Pipeline p(preset("A"), o);
  Artifacts a(o.out_dir);
  CHECK_THROWS_AS(p.run_expand(a), FormatError);
}

TEST_CASE("tunnel1d artifacts are byte-identical across runs") {
  auto c = preset("A");
  c.barrier1d.e_step = 0.05;
  c.barrier1d.mod_xb = {2.7};
  c.barrier1d.packet_times = {0.05};
  std::string first;
  for (const char* tag : {"det1", "det2"}) {
    const auto dir = scratch(tag);
    RunOptions o;
    o.out_dir = dir.string();
    Pipeline p(c, o);
    Artifacts a(o.out_dir);
    const auto j = p.run_tunnel1d(a);
    CHECK(j["delta_t_T_secant"].get<double>() == doctest::Approx(0.0515).epsilon(0.02));
    std::string all;
    for (const char* f : {"phase_T.csv", "phase_R.csv", "packet1d_0.05.csv", "tunnel1d.json"}) {
      REQUIRE(fs::exists(dir / f));
      all += slurp(dir / f);
    }
    if (first.empty()) {
      first = all;
    } else {
      CHECK(all == first);
    }
  }
}
