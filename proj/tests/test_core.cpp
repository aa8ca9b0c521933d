#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>
#include <numbers>

#include "doctest.h"
#include "edlab/errors.hpp"
#include "edlab/fft.hpp"
#include "edlab/grid.hpp"
#include "edlab/parallel.hpp"
#include "edlab/rng.hpp"
#include "edlab/state.hpp"
#include "edlab/system.hpp"

using namespace edlab;

TEST_CASE("grid indexing round-trips and strides agree") {
  const GridSpec g(2, 2, {8, 12, 16, 10}, {4.0, 6.0, 8.0, 5.0});
  CHECK(g.dim() == 4);
  CHECK(g.total_points() == 8 * 12 * 16 * 10);
  CHECK(g.rotation_dim() == 1);
  std::vector<std::int64_t> idx(4);
  for (std::int64_t flat : {0L, 1L, 1537L, 8L * 12 * 16 * 10 - 1}) {
    g.unflatten(flat, idx);
    CHECK(g.flat_index(idx) == flat);
    for (int ax = 0; ax < 4; ++ax) CHECK(g.axis_index(flat, ax) == idx[static_cast<std::size_t>(ax)]);
  }
  CHECK(g.particle_of_axis(3) == 1);
  CHECK(g.component_of_axis(3) == 1);
  CHECK(g.axis_of(1, 0) == 2);
}

TEST_CASE("grid geometry: coords, spacing, min_image") {
  const GridSpec g = GridSpec::uniform(1, 1, 8, 4.0);
  CHECK(g.spacing(0) == doctest::Approx(0.5));
  CHECK(g.coord(0, 0) == doctest::Approx(-2.0));
  CHECK(g.coord(0, 4) == doctest::Approx(0.0));  // origin on a grid point
  CHECK(g.min_image(0, 3.7) == doctest::Approx(-0.3));
  CHECK(g.min_image(0, -2.0) == doctest::Approx(-2.0));  // [-L/2, L/2) keeps -L/2
  CHECK(g.min_image(0, 2.0) == doctest::Approx(-2.0));
}

TEST_CASE("wavenumbers: signed layout, Nyquist conventions") {
  const GridSpec g = GridSpec::uniform(1, 1, 8, 8.0);  // h = 1, dk = 2pi/8
  const double dk = 2.0 * std::numbers::pi / 8.0;
  CHECK(g.wavenumber(0, 0) == doctest::Approx(0.0));
  CHECK(g.wavenumber(0, 3) == doctest::Approx(3 * dk));
  CHECK(g.wavenumber(0, 4) == doctest::Approx(-4 * dk));  // Nyquist negative
  CHECK(g.wavenumber(0, 7) == doctest::Approx(-dk));
  CHECK(g.wavenumber_deriv(0, 4) == doctest::Approx(0.0));  // odd-derivative Nyquist zero
  CHECK(g.wavenumber_deriv(0, 3) == doctest::Approx(3 * dk));
}

TEST_CASE("grid validation rejects bad shapes") {
  CHECK_THROWS_AS(GridSpec(4, 1, {8, 8, 8, 8}, {1, 1, 1, 1}), DimensionError);
  CHECK_THROWS_AS(GridSpec(1, 5, {8, 8, 8, 8, 8}, {1, 1, 1, 1, 1}), DimensionError);
  CHECK_THROWS_AS(GridSpec(1, 1, {4}, {1.0}), DimensionError);  // below minimum points
  CHECK_THROWS_AS(GridSpec(1, 1, {8}, {-1.0}), DimensionError);
  CHECK_THROWS_AS(GridSpec(2, 1, {8}, {1.0, 1.0}), DimensionError);
}

TEST_CASE("block_sum is deterministic across thread counts") {
  const std::int64_t n = 100000;
  auto f = [](std::int64_t i) {
    return std::sin(0.001 * static_cast<double>(i)) * 1e-3 + 1e-18 * static_cast<double>(i % 7);
  };
  set_thread_count(1);
  const double s1 = block_sum(n, f);
  set_thread_count(4);
  const double s4 = block_sum(n, f);
  set_thread_count(0);
  const double s0 = block_sum(n, f);
  CHECK(s1 == s4);  // bitwise equal, not approx
  CHECK(s1 == s0);
}

TEST_CASE("parallel_for covers the range exactly once") {
  const std::int64_t n = 12345;
  std::vector<int> hits(static_cast<std::size_t>(n), 0);
  parallel_for(n, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i) hits[static_cast<std::size_t>(i)] += 1;
  });
  for (int h : hits) CHECK(h == 1);
}

TEST_CASE("counter rng: reproducible, stream-separated, sane moments") {
  const CounterRng a(42), b(42), c(43);
  CHECK(a.bits(1, 2, 3) == b.bits(1, 2, 3));
  CHECK(a.bits(1, 2, 3) != c.bits(1, 2, 3));
  CHECK(a.bits(1, 2, 3) != a.bits(2, 2, 3));
  CHECK(a.bits(1, 2, 3) != a.bits(1, 3, 3));

  // moments over a modest sample: mean ~ N(0, 1/n), var ~ 1 +- sqrt(2/n)
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = a.normal(7, static_cast<std::uint64_t>(i), 0);
    s += x;
    s2 += x * x;
  }
  const double mean = s / n, var = s2 / n - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("uniform slots consumed by normal do not collide") {
  const CounterRng r(11);
  // normal(chain, step, slot) uses uniform slots 2*slot and 2*slot+1
  const double n0 = r.normal(1, 1, 0);
  const double n1 = r.normal(1, 1, 1);
  CHECK(n0 != n1);
  CHECK(r.uniform(1, 1, 0) != r.uniform(1, 1, 1));
}

TEST_CASE("system: masses map to axes via the particle layout") {
  const GridSpec g(2, 2, {8, 8, 8, 8}, {4, 4, 4, 4});
  const ParticleSystem sys({1.0, 3.0}, 1.0);
  CHECK(sys.total_mass() == doctest::Approx(4.0));
  CHECK(sys.mass_for_axis(g, 0) == doctest::Approx(1.0));
  CHECK(sys.mass_for_axis(g, 1) == doctest::Approx(1.0));
  CHECK(sys.mass_for_axis(g, 2) == doctest::Approx(3.0));
  CHECK(sys.mass_for_axis(g, 3) == doctest::Approx(3.0));
  CHECK_THROWS_AS(ParticleSystem({1.0, -1.0}, 1.0), ValidationError);
  CHECK_THROWS_AS(ParticleSystem({1.0}, 0.0), ValidationError);
}

TEST_CASE("gaussian packet: normalized, centered, correct widths and kicks") {
  const GridSpec g = GridSpec::uniform(1, 1, 128, 20.0);
  GaussianSpec gs;
  gs.centers = {0.75};
  gs.widths = {1.2};
  gs.wavevectors = {0.5};
  const WaveFunction psi = gaussian_packet(g, gs);
  CHECK(norm_squared(psi) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(position_expectation(psi, 0) == doctest::Approx(0.75).epsilon(1e-10));
  const double var =
      position_second_moment(psi, 0) - position_expectation(psi, 0) * position_expectation(psi, 0);
  CHECK(var == doctest::Approx(1.2 * 1.2).epsilon(1e-8));
}

TEST_CASE("gaussian packet guards: width resolution and boundary leak") {
  const GridSpec g = GridSpec::uniform(1, 1, 16, 16.0);  // h = 1
  GaussianSpec gs;
  gs.centers = {0.0};
  gs.widths = {2.0};  // below 4h
  gs.wavevectors = {0.0};
  CHECK_THROWS_AS(gaussian_packet(g, gs), UnresolvableWidth);

  const GridSpec g2 = GridSpec::uniform(1, 1, 64, 16.0);
  GaussianSpec gs2;
  gs2.centers = {7.0};  // pressed against the edge
  gs2.widths = {1.5};
  gs2.wavevectors = {0.0};
  CHECK_THROWS_AS(gaussian_packet(g2, gs2), BoundaryLeak);
}

TEST_CASE("chart round trip preserves rho and phi on nodeless states") {
  const GridSpec g = GridSpec::uniform(1, 1, 64, 12.0);
  const ParticleSystem sys({1.0}, 1.0);
  WaveFunction psi;
  psi.grid = g;
  psi.amp.resize(64);
  for (std::int64_t i = 0; i < 64; ++i) {
    const double x = g.coord(0, i);
    psi.amp[static_cast<std::size_t>(i)] =
        std::polar(1.0 + 0.3 * std::cos(2.0 * std::numbers::pi * x / 12.0),
                   1.7 * std::sin(2.0 * std::numbers::pi * x / 12.0));
  }
  normalize(psi);
  const EpistemicState s = wf_to_epistemic(psi, sys);
  const WaveFunction back = epistemic_to_wf(s, sys);
  for (std::size_t i = 0; i < psi.amp.size(); ++i)
    CHECK(std::abs(back.amp[i] - psi.amp[i]) < 1e-12);
}

TEST_CASE("chart map refuses states with near-nodes") {
  const GridSpec g = GridSpec::uniform(1, 1, 128, 20.0);
  const ParticleSystem sys({1.0}, 1.0);
  GaussianSpec gs;
  gs.centers = {0.0};
  gs.widths = {1.0};
  gs.wavevectors = {0.0};
  const WaveFunction psi = gaussian_packet(g, gs);  // tails far below the floor
  CHECK_THROWS_AS(wf_to_epistemic(psi, sys), NodeError);
}

TEST_CASE("overlap, infidelity, and state distance") {
  const GridSpec g = GridSpec::uniform(1, 1, 64, 16.0);
  GaussianSpec gs;
  gs.centers = {0.0};
  gs.widths = {1.0};
  gs.wavevectors = {0.0};
  const WaveFunction a = gaussian_packet(g, gs);
  CHECK(std::abs(overlap(a, a) - 1.0) < 1e-12);
  CHECK(infidelity(a, a) < 1e-12);
  WaveFunction b = a;
  for (auto& v : b.amp) v *= std::polar(1.0, 0.3);  // global phase
  CHECK(infidelity(a, b) < 1e-12);
  CHECK(state_distance(a, b) > 0.1);  // L2 distance sees the phase
}

TEST_CASE("spectral derivative is exact on resolved modes") {
  const GridSpec g = GridSpec::uniform(1, 1, 32, 2.0 * std::numbers::pi);
  std::vector<std::complex<double>> f(32);
  for (std::int64_t i = 0; i < 32; ++i) {
    const double x = g.coord(0, i);
    f[static_cast<std::size_t>(i)] = std::exp(std::complex<double>(0.0, 3.0 * x));
  }
  const auto df = spectral::derivative(g, f, 0);
  for (std::int64_t i = 0; i < 32; ++i) {
    const std::complex<double> want = std::complex<double>(0.0, 3.0) * f[static_cast<std::size_t>(i)];
    CHECK(std::abs(df[static_cast<std::size_t>(i)] - want) < 1e-12);
  }
}

TEST_CASE("spectral round trip and multi-axis gradient") {
  const GridSpec g = GridSpec::uniform(2, 1, 16, 4.0);
  std::vector<std::complex<double>> f(g.total_points() > 0 ? 256 : 0);
  for (std::int64_t i = 0; i < 256; ++i) {
    const double x = g.coord(0, g.axis_index(i, 0));
    const double y = g.coord(1, g.axis_index(i, 1));
    f[static_cast<std::size_t>(i)] =
        std::exp(std::complex<double>(0.0, std::numbers::pi * (x - 2.0 * y)));
  }
  auto fw = f;
  spectral::forward(g, fw.data());
  spectral::inverse(g, fw.data());
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::abs(fw[i] - f[i]) < 1e-12);

  const auto grad = spectral::gradient(g, f);
  for (std::int64_t i = 0; i < 256; ++i) {
    const auto s = static_cast<std::size_t>(i);
    CHECK(std::abs(grad[0][s] - std::complex<double>(0.0, std::numbers::pi) * f[s]) < 1e-11);
    CHECK(std::abs(grad[1][s] - std::complex<double>(0.0, -2.0 * std::numbers::pi) * f[s]) < 1e-11);
  }
}

TEST_CASE("riemann quadrature uses the cell volume") {
  const GridSpec g = GridSpec::uniform(1, 1, 100, 10.0);
  WaveFunction psi;
  psi.grid = g;
  psi.amp.assign(100, std::complex<double>(0.1, 0.0));  // |psi|^2 = 0.01, integral 0.1
  CHECK(norm_squared(psi) == doctest::Approx(0.1).epsilon(1e-14));
}
