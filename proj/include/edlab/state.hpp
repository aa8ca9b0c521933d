#pragma once
// The two state charts and conversions between them:
//   WaveFunction    psi on the grid, normalized by the Riemann sum;
//   EpistemicState  (rho, phi) with psi = rho^{1/2} exp(i phi / hbar).
// phi carries units of action and is stored unwrapped (continuous across the
// sweep order, not reduced mod 2*pi*hbar).

#include <complex>
#include <cstdint>
#include <vector>

#include "edlab/grid.hpp"
#include "edlab/system.hpp"

namespace edlab {

struct WaveFunction {
  GridSpec grid;
  std::vector<std::complex<double>> amp;  // row-major
  double t = 0.0;
};

struct EpistemicState {
  GridSpec grid;
  std::vector<double> rho;
  std::vector<double> phi;
  double t = 0.0;
};

// Riemann-sum quadrature: sum(f) * h^D.
double integrate(const GridSpec& grid, const std::vector<double>& f);

double norm_squared(const WaveFunction& psi);

// <a|b> = sum conj(a) b h^D. Throws GridMismatch on shape disagreement.
std::complex<double> overlap(const WaveFunction& a, const WaveFunction& b);

// 1 - |<a|b>|^2 for unit-norm states.
double infidelity(const WaveFunction& a, const WaveFunction& b);

// L2 distance sqrt(int |a-b|^2).
double state_distance(const WaveFunction& a, const WaveFunction& b);

// Rescales to unit norm; throws NodeError if the state is numerically zero.
void normalize(WaveFunction& psi);

bool all_finite(const WaveFunction& psi);

// Smallest |psi|^2 relative to the maximum; used by nodeless preconditions.
double min_relative_density(const WaveFunction& psi);

// --- chart conversions ------------------------------------------------------

// Throws NodeError when min |psi|^2 <= 1e-10 * max |psi|^2. The phase is
// unwrapped by a deterministic axis-major sweep (each point referenced to its
// lexicographic predecessor) and shifted so phi at flat index 0 lies in
// [-pi*hbar, pi*hbar).
EpistemicState wf_to_epistemic(const WaveFunction& psi, const ParticleSystem& sys);

// Exact inverse up to the 2*pi*hbar phase sheet; preserves norm and t.
WaveFunction epistemic_to_wf(const EpistemicState& s, const ParticleSystem& sys);

// --- factories ---------------------------------------------------------------

struct GaussianSpec {
  std::vector<double> centers;      // per configuration axis
  std::vector<double> widths;       // per configuration axis, >= 4h
  std::vector<double> wavevectors;  // per configuration axis (plane-wave phase)
};

// Normalized product Gaussian exp(-(x-c)^2/(4 sigma^2) + i k.x) with
// min-image displacements. Throws UnresolvableWidth when sigma < 4h and
// BoundaryLeak when the relative density within two cells of any box edge
// exceeds 1e-10.
WaveFunction gaussian_packet(const GridSpec& grid, const GaussianSpec& spec);

// Single exact grid mode exp(i k.x) with k_A = 2 pi integer / L_A.
WaveFunction plane_wave(const GridSpec& grid, const std::vector<std::int64_t>& mode);

// Per-axis moments of |psi|^2 in box-centered coordinates.
double position_expectation(const WaveFunction& psi, int axis);
double position_second_moment(const WaveFunction& psi, int axis);

// Mass-weighted center of mass, one entry per spatial component.
std::vector<double> center_of_mass(const WaveFunction& psi, const ParticleSystem& sys);

}  // namespace edlab
