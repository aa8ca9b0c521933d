#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>
#include <numbers>

#include "doctest.h"
#include "edlab/observables.hpp"
#include "edlab/potential.hpp"
#include "edlab/state.hpp"

using namespace edlab;

namespace {

// Vortex with unit winding: amp = (x + i y) exp(-r^2 / 4 sigma^2).
// Exact angular momentum hbar; <r^2> = 4 sigma^2, so I_zz = 4 m sigma^2.
WaveFunction vortex(const GridSpec& g, double sigma) {
  WaveFunction psi;
  psi.grid = g;
  psi.amp.resize(static_cast<std::size_t>(g.total_points()));
  for (std::int64_t i = 0; i < g.total_points(); ++i) {
    const double x = g.coord(0, g.axis_index(i, 0));
    const double y = g.coord(1, g.axis_index(i, 1));
    psi.amp[static_cast<std::size_t>(i)] =
        std::complex<double>(x, y) * std::exp(-(x * x + y * y) / (4.0 * sigma * sigma));
  }
  normalize(psi);
  return psi;
}

}  // namespace

TEST_CASE("plane wave: exact kinetic energy and momentum") {
  const GridSpec g = GridSpec::uniform(1, 1, 32, 8.0);
  const ParticleSystem sys({2.0}, 0.5);  // m = 2, hbar = 1/2
  const WaveFunction psi = plane_wave(g, {3});
  const double k = 3.0 * 2.0 * std::numbers::pi / 8.0;
  const std::vector<double> v(static_cast<std::size_t>(g.total_points()), 0.0);

  const auto p = momentum_expectation(psi, sys);
  CHECK(p[0] == doctest::Approx(sys.hbar * k).epsilon(1e-12));
  const double e = hamiltonian_expectation(psi, sys, v, ShiftVelocity::zero(1));
  CHECK(e == doctest::Approx(sys.hbar * sys.hbar * k * k / (2.0 * 2.0)).epsilon(1e-12));
}

TEST_CASE("harmonic trap ground state energy is hbar omega / 2 per axis") {
  // sigma^2 = hbar / (2 m omega) with m = omega = hbar = 1
  const GridSpec g = GridSpec::uniform(1, 1, 96, 12.0);
  const ParticleSystem sys({1.0}, 1.0);
  GaussianSpec gs;
  gs.centers = {0.0};
  gs.widths = {1.0 / std::sqrt(2.0)};
  gs.wavevectors = {0.0};
  const WaveFunction psi = gaussian_packet(g, gs);
  const auto v = potential_grid(g, sys, PotentialSpec::external_harmonic(1.0));
  const double e = hamiltonian_expectation(psi, sys, v, ShiftVelocity::zero(1));
  CHECK(e == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("boosted packet carries momentum hbar k per particle") {
  const GridSpec g = GridSpec::uniform(1, 2, 96, 28.0);
  const ParticleSystem sys({1.0, 4.0}, 0.5);
  GaussianSpec gs;
  gs.centers = {1.0, -2.0};
  gs.widths = {1.5, 1.5};
  gs.wavevectors = {2.0, -1.0};  // phase gradients, not hbar-scaled
  const WaveFunction psi = gaussian_packet(g, gs);
  const auto p = momentum_expectation(psi, sys);
  // P_a sums over particles for each spatial component a; d=1 has one slot
  CHECK(p[0] == doctest::Approx(sys.hbar * (2.0 - 1.0)).epsilon(1e-10));
}

TEST_CASE("vortex: frozen angular momentum and inertia oracle") {
  const GridSpec g = GridSpec::uniform(2, 1, 80, 12.0);
  const ParticleSystem sys({1.0}, 1.0);
  const double sigma2 = 0.5;
  const WaveFunction psi = vortex(g, std::sqrt(sigma2));

  const auto l = angular_momentum_expectation(psi, sys);
  CHECK(l[0] == doctest::Approx(1.0).epsilon(1e-10));  // hbar, exact winding

  const auto inertia = inertia_expectation(psi, sys);
  CHECK(inertia[0][0] == doctest::Approx(4.0 * sigma2).epsilon(1e-9));  // I_zz = 2
}

TEST_CASE("three-dimensional inertia tensor matches second moments") {
  const GridSpec g = GridSpec::uniform(3, 1, 72, 16.0);
  const ParticleSystem sys({1.5}, 1.0);
  GaussianSpec gs;
  gs.centers = {0.0, 0.0, 0.0};
  gs.widths = {0.9, 1.0, 1.1};
  gs.wavevectors = {0.0, 0.0, 0.0};
  const WaveFunction psi = gaussian_packet(g, gs);
  const auto inertia = inertia_expectation(psi, sys);
  const double x2 = position_second_moment(psi, 0);
  const double y2 = position_second_moment(psi, 1);
  const double z2 = position_second_moment(psi, 2);
  const double m = sys.masses[0];
  CHECK(inertia[0][0] == doctest::Approx(m * (y2 + z2)).epsilon(1e-11));
  CHECK(inertia[1][1] == doctest::Approx(m * (x2 + z2)).epsilon(1e-11));
  CHECK(inertia[2][2] == doctest::Approx(m * (x2 + y2)).epsilon(1e-11));
  CHECK(std::abs(inertia[0][1]) < 1e-11);
  CHECK(inertia[0][1] == inertia[1][0]);
}

TEST_CASE("effective potential includes the quadratic shift energy") {
  const GridSpec g = GridSpec::uniform(2, 1, 16, 8.0);
  const ParticleSystem sys({2.0}, 1.0);
  ShiftVelocity shift = ShiftVelocity::zero(2);
  shift.lambda_dot = {0.3, -0.1};
  shift.zeta_dot = {0.7};
  std::vector<double> v(static_cast<std::size_t>(g.total_points()), 1.5);
  const HamiltonianOp op(g, sys, v, shift);
  const auto& w = op.effective_potential();
  for (std::int64_t i : {0L, 37L, 200L}) {
    const double x = g.coord(0, g.axis_index(i, 0));
    const double y = g.coord(1, g.axis_index(i, 1));
    // xi = lambda + zeta x r: (0.3 - 0.7 y, -0.1 + 0.7 x)
    const double xx = 0.3 - 0.7 * y, yy = -0.1 + 0.7 * x;
    CHECK(w[static_cast<std::size_t>(i)] ==
          doctest::Approx(1.5 + 0.5 * 2.0 * (xx * xx + yy * yy)).epsilon(1e-12));
  }
}

TEST_CASE("shifted hamiltonian stays hermitian on the grid") {
  const GridSpec g = GridSpec::uniform(2, 1, 96, 20.0);
  const ParticleSystem sys({1.0}, 1.0);
  ShiftVelocity shift = ShiftVelocity::zero(2);
  shift.lambda_dot = {0.2, 0.1};
  shift.zeta_dot = {0.5};
  GaussianSpec gs;
  gs.centers = {0.4, -0.3};
  gs.widths = {1.0, 1.2};
  gs.wavevectors = {0.5, 0.0};
  const WaveFunction psi = gaussian_packet(g, gs);
  const auto v = potential_grid(g, sys, PotentialSpec::external_harmonic(1.0));
  const auto rep = observable_report(psi, sys, v, shift);
  CHECK(rep.hermiticity_defect < 1e-10);
  CHECK(rep.norm == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("shifted energy decomposes into parts") {
  // H~ = H0 - lambda.P - zeta.L + sum (m/2)<|xi|^2>
  const GridSpec g = GridSpec::uniform(2, 1, 64, 16.0);
  const ParticleSystem sys({1.0}, 1.0);
  GaussianSpec gs;
  gs.centers = {0.5, 0.0};
  gs.widths = {1.0, 1.0};
  gs.wavevectors = {0.8, -0.3};
  const WaveFunction psi = gaussian_packet(g, gs);
  const auto v = potential_grid(g, sys, PotentialSpec::external_harmonic(1.0));

  ShiftVelocity shift = ShiftVelocity::zero(2);
  shift.lambda_dot = {0.25, -0.15};
  shift.zeta_dot = {0.4};

  const double h_shifted = hamiltonian_expectation(psi, sys, v, shift);
  const double h0 = hamiltonian_expectation(psi, sys, v, ShiftVelocity::zero(2));
  const auto p = momentum_expectation(psi, sys);
  const auto l = angular_momentum_expectation(psi, sys);

  // quadratic shift energy via quadrature of |xi|^2 against rho
  const auto xi = shift_field(g, shift);
  double quad = 0.0;
  for (std::int64_t i = 0; i < g.total_points(); ++i) {
    const auto s = static_cast<std::size_t>(i);
    const double rho = std::norm(psi.amp[s]);
    quad += 0.5 * sys.masses[0] * (xi[0][s] * xi[0][s] + xi[1][s] * xi[1][s]) * rho;
  }
  quad *= g.cell_volume();

  const double want = h0 - shift.lambda_dot[0] * p[0] - shift.lambda_dot[1] * p[1] -
                      shift.zeta_dot[0] * l[0] + quad;
  CHECK(h_shifted == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("current velocity on a plane wave is hbar k / m minus the shift") {
  const GridSpec g = GridSpec::uniform(2, 1, 16, 8.0);
  const ParticleSystem sys({2.0}, 1.0);
  const WaveFunction psi = plane_wave(g, {2, -1});
  const EpistemicState s = wf_to_epistemic(psi, sys);
  ShiftVelocity shift = ShiftVelocity::zero(2);
  shift.lambda_dot = {0.1, 0.2};
  shift.zeta_dot = {0.3};
  const auto v = current_velocity(s, sys, shift);
  const double kx = 2.0 * 2.0 * std::numbers::pi / 8.0;
  const double ky = -1.0 * 2.0 * std::numbers::pi / 8.0;
  const auto xi = shift_field(g, shift);
  for (std::int64_t i : {0L, 100L, 255L}) {
    const auto s_i = static_cast<std::size_t>(i);
    CHECK(v[0][s_i] == doctest::Approx(sys.hbar * kx / 2.0 - xi[0][s_i]).epsilon(1e-10));
    CHECK(v[1][s_i] == doctest::Approx(sys.hbar * ky / 2.0 - xi[1][s_i]).epsilon(1e-10));
  }
}

TEST_CASE("report in two dimensions uses the z slots") {
  const GridSpec g = GridSpec::uniform(2, 1, 48, 12.0);
  const ParticleSystem sys({1.0}, 1.0);
  const WaveFunction psi = vortex(g, std::sqrt(0.5));
  const std::vector<double> v(static_cast<std::size_t>(g.total_points()), 0.0);
  const auto rep = observable_report(psi, sys, v, ShiftVelocity::zero(2));
  CHECK(rep.angular[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(rep.inertia[0][0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(rep.angular[1] == 0.0);
  CHECK(rep.angular[2] == 0.0);
}

TEST_CASE("pair potentials are relational, the trap is not") {
  CHECK(PotentialSpec::pair_spring(1.0).relational());
  CHECK(PotentialSpec::pair_gaussian(1.0, 1.0).relational());
  CHECK(PotentialSpec::free().relational());
  CHECK(!PotentialSpec::external_harmonic(1.0).relational());
}

TEST_CASE("pair spring potential on the grid uses min-image separations") {
  const GridSpec g(1, 2, {8, 8}, {8.0, 8.0});
  const ParticleSystem sys({1.0, 1.0}, 1.0);
  const auto v = potential_grid(g, sys, PotentialSpec::pair_spring(2.0));
  // point (x1, x2) = (-4, -4): separation 0
  std::vector<std::int64_t> idx = {0, 0};
  CHECK(v[static_cast<std::size_t>(g.flat_index(idx))] == doctest::Approx(0.0));
  // (-4, -1): separation 3 -> (k/2) d^2 = 9
  idx = {0, 3};
  CHECK(v[static_cast<std::size_t>(g.flat_index(idx))] == doctest::Approx(9.0));
  // (-4, 3): naive separation 7 wraps to -1 -> (k/2) = 1
  idx = {0, 7};
  CHECK(v[static_cast<std::size_t>(g.flat_index(idx))] == doctest::Approx(1.0));
}
