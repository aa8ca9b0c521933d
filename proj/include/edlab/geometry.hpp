#pragma once
// Geometry of the epistemic phase space, restricted to the eta == hbar locus
// where it reproduces quantum theory.
//
// Charts for tangent vectors at a base state (rho, phi):
//   RhoPhi: components (drho, dphi);
//   Psi:    components (dpsi, i hbar conj(dpsi)) with
//           dpsi = (drho / 2 sqrt(rho) + i sqrt(rho) dphi / hbar) e^{i phi/hbar}.
// Quadratic forms (lattice measure h^D throughout):
//   Omega(V,U) = int (drho_V dphi_U - dphi_V drho_U)
//   G(V,U)     = int [(hbar/2rho) drho_V drho_U + (2rho/hbar) dphi_V dphi_U]
//   J          = -G^{-1} Omega,  J(drho, dphi) = (-(2rho/hbar) dphi, (hbar/2rho) drho)
// and in the Psi chart J is multiplication of dpsi by i.

#include <complex>
#include <vector>

#include "edlab/state.hpp"
#include "edlab/system.hpp"

namespace edlab {

enum class Chart { RhoPhi, Psi };

struct TangentVector {
  Chart chart = Chart::RhoPhi;
  EpistemicState base;

  // RhoPhi chart components.
  std::vector<double> drho, dphi;

  // Psi chart components; comp2 = i hbar conj(comp1) by construction, stored
  // explicitly so the layout itself is testable.
  std::vector<std::complex<double>> dpsi, dpsi2;
};

TangentVector make_tangent_rho_phi(EpistemicState base, std::vector<double> drho,
                                   std::vector<double> dphi);

TangentVector make_tangent_psi(EpistemicState base,
                               std::vector<std::complex<double>> dpsi, double hbar);

// Makes int drho = 0 by subtracting (int drho) * rho (valid since int rho = 1).
void project_to_simplex(TangentVector& v);

TangentVector to_psi_chart(const TangentVector& v, const ParticleSystem& sys);
TangentVector to_rho_phi_chart(const TangentVector& v, const ParticleSystem& sys);

// Antisymmetric symplectic form; charts must match.
double symplectic_eval(const TangentVector& v, const TangentVector& u,
                       const ParticleSystem& sys);

// Information metric; refuses eta != hbar (EtaHbarMismatch).
double metric_eval(const TangentVector& v, const TangentVector& u,
                   const ParticleSystem& sys);

// J applied in the vector's own chart; refuses eta != hbar.
TangentVector complex_structure_apply(const TangentVector& v, const ParticleSystem& sys);

// Max over grid points of the 2x2 fiber identity |J + G^{-1} Omega| (the h^D
// factors cancel pointwise).
double complex_structure_fiber_defect(const EpistemicState& base,
                                      const ParticleSystem& sys);

// <a|b> by quadrature; with verify=true also assembles
// (1/2 hbar) int (G + i Omega)[Psi, X] over the pairs (psi, i hbar psi*) and
// throws IdentityViolation if the two routes differ by more than 1e-12.
std::complex<double> inner_product(const WaveFunction& a, const WaveFunction& b,
                                   const ParticleSystem& sys, bool verify = false);

}  // namespace edlab
