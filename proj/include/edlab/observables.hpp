#pragma once
// Expectation values, the shifted-frame Hamiltonian, and the current velocity.
//
// All expectations use spectral derivatives and the Riemann-sum quadrature.
// The shifted kinetic term (1/2m)|p - m xi_dot|^2 expands, for divergence-free
// shift fields, into p^2/2m - xi_dot.p + (m/2)|xi_dot|^2; on the grid the
// cross term is applied in symmetrized form so the operator stays Hermitian.

#include <array>
#include <complex>
#include <vector>

#include "edlab/grid.hpp"
#include "edlab/potential.hpp"
#include "edlab/shift.hpp"
#include "edlab/state.hpp"
#include "edlab/system.hpp"

namespace edlab {

using cvector = std::vector<std::complex<double>>;

struct ObservableReport {
  double t = 0.0;
  double norm = 0.0;
  double energy = 0.0;                        // H~ in the shifted frame
  std::array<double, 3> momentum{};           // P~_a (first d entries)
  std::array<double, 3> angular{};            // L~: d=2 uses [0] = L_z
  std::array<std::array<double, 3>, 3> inertia{};  // d=2 uses [0][0] = I_zz
  double hermiticity_defect = 0.0;            // max |Im| across the pieces
};

// H psi for the shifted-frame Hamiltonian; fields are prepared once so the
// reference propagator can apply it repeatedly.
class HamiltonianOp {
 public:
  HamiltonianOp(const GridSpec& grid, const ParticleSystem& sys,
                std::vector<double> potential, const ShiftVelocity& shift);

  cvector apply(const cvector& psi) const;

  const std::vector<double>& effective_potential() const { return w_; }
  const GridSpec& grid() const { return grid_; }

 private:
  GridSpec grid_;
  ParticleSystem sys_;
  ShiftVelocity shift_;
  std::vector<double> w_;                      // V + sum_n (m_n/2)|xi_dot_n|^2
  std::vector<std::vector<double>> shift_field_;  // empty when shift is zero
};

double hamiltonian_expectation(const WaveFunction& psi, const ParticleSystem& sys,
                               const std::vector<double>& potential,
                               const ShiftVelocity& shift);

// P~_a = sum_n <psi| (hbar/i) d_na |psi>.
std::array<double, 3> momentum_expectation(const WaveFunction& psi,
                                           const ParticleSystem& sys);

// L~^a = sum_n eps^{abc} <x_nb p_nc>; d=2 returns the z component in [0].
std::array<double, 3> angular_momentum_expectation(const WaveFunction& psi,
                                                   const ParticleSystem& sys);

// I~^{ab} = sum_n m_n <delta^{ab} r_n^2 - x_n^a x_n^b> (d=3);
// d=2 returns the scalar I_zz = sum_n m_n <r_n^2> in [0][0].
std::array<std::array<double, 3>, 3> inertia_expectation(const WaveFunction& psi,
                                                         const ParticleSystem& sys);

ObservableReport observable_report(const WaveFunction& psi, const ParticleSystem& sys,
                                   const std::vector<double>& potential,
                                   const ShiftVelocity& shift);

// Current velocity fields v^A = (1/m_A) d_A phi - xi_dot^A, with the phase
// gradient extracted through psi (winding-safe). Throws NodeError on nodes.
std::vector<std::vector<double>> current_velocity(const EpistemicState& state,
                                                  const ParticleSystem& sys,
                                                  const ShiftVelocity& shift);

}  // namespace edlab
