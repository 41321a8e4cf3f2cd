#include <benchmark/benchmark.h>

#include <cmath>
#include <memory>

#include "curvewave/barrier1d.hpp"
#include "curvewave/corefn.hpp"
#include "curvewave/observables.hpp"
#include "curvewave/packet.hpp"
#include "curvewave/spectrum.hpp"

using namespace curvewave;

namespace {

// Small packet shared by the expansion-level benchmarks.
struct Fixture {
  spectrum::PotentialSpec pot;
  packet::PacketSpec spec;
  spectrum::ModeTable table;
  packet::Expansion expansion;
  packet::GridSpec grid;
  std::unique_ptr<packet::ProfileCache> cache;

  Fixture() {
    spec.m0 = 20;
    spec.k0 = 30;
    spec.sigma = 40;
    table = spectrum::solve_table(pot, 0, 50, 50.0, 0);
    packet::ExpandOptions o;
    o.check_coverage = false;
    expansion = packet::expand(spec, table, 5e-4, o);
    grid.n_r = 300;
    grid.r_max = 4.0;
    grid.n_theta = 256;
    cache = std::make_unique<packet::ProfileCache>(expansion, table, grid);
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

void BM_BesselJ(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const corefn::cplx z{113.0, -1e-6};
  for (auto _ : state) benchmark::DoNotOptimize(corefn::bessel_j(m, z));
}
BENCHMARK(BM_BesselJ)->Arg(10)->Arg(120)->Arg(200);

void BM_Hankel1(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const corefn::cplx z{2.0 * 113.0, -2e-6};
  for (auto _ : state) benchmark::DoNotOptimize(corefn::hankel1(m, z));
}
BENCHMARK(BM_Hankel1)->Arg(10)->Arg(120)->Arg(200);

void BM_BoundModes(benchmark::State& state) {
  spectrum::PotentialSpec pot;
  for (auto _ : state) benchmark::DoNotOptimize(spectrum::find_bound_modes(pot, 120));
}
BENCHMARK(BM_BoundModes)->Unit(benchmark::kMillisecond);

void BM_Evolve(benchmark::State& state) {
  auto& f = fixture();
  const auto exec = state.range(0) == 0 ? Exec::Serial : Exec::Parallel;
  for (auto _ : state) benchmark::DoNotOptimize(packet::evolve(*f.cache, 1.5, f.spec, exec));
}
BENCHMARK(BM_Evolve)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Husimi(benchmark::State& state) {
  auto& f = fixture();
  const auto frame = packet::evolve(*f.cache, 1.5, f.spec);
  observables::HusimiGrid g;
  g.d_hi = 3.5;
  g.h_hi = 3.0;
  const auto exec = state.range(0) == 0 ? Exec::Serial : Exec::Parallel;
  for (auto _ : state) benchmark::DoNotOptimize(observables::emission_husimi(frame, 0.0, g, 2.0, {}, false, exec));
}
BENCHMARK(BM_Husimi)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_RectPacket(benchmark::State& state) {
  barrier1d::RectBarrier bar;
  const barrier1d::Window w{std::sqrt(160.0), 0.5};
  for (auto _ : state) benchmark::DoNotOptimize(barrier1d::tunneling_packet_1d(w, bar, 1.0, 0.04));
}
BENCHMARK(BM_RectPacket);

}  // namespace

BENCHMARK_MAIN();
