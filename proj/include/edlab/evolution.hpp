#pragma once
// Time evolution in the shifted frame.
//
// split-step: Strang composition kinetic/angular/potential/angular/kinetic.
//   The kinetic factor absorbs -lambda_dot.p (diagonal in momentum space); the
//   angular factor handles -zeta_dot.L term by term, each x_b p_c applied in
//   its mixed position/momentum representation, composed palindromically so
//   the whole step stays second order. Every factor is a pure phase, so the
//   step is unitary to roundoff.
// crank-nicolson: matrix-free Cayley step (1 + i dt H / 2 hbar) psi' =
//   (1 - i dt H / 2 hbar) psi solved by CGNR on the spectral operator; the
//   reference backend (exactly energy-conserving for time-independent H, norm
//   drift bounded by the solve tolerance).
//
// The shift is held piecewise constant across a run segment; callers that
// re-match recompute it between segments.

#include <cstdint>
#include <vector>

#include "edlab/observables.hpp"

namespace edlab {

enum class Backend { SplitStep, CrankNicolson };

struct SolverParams {
  Backend backend = Backend::SplitStep;
  double dt = 1e-3;
  std::int64_t steps = 0;
  std::int64_t record_stride = 1;
  double cn_tol = 1e-12;   // relative residual for the Cayley solve
  int cn_max_iter = 400;
  bool boundary_check = true;  // warn when rotation meets edge density
};

class Propagator {
 public:
  Propagator(const GridSpec& grid, const ParticleSystem& sys, std::vector<double> potential,
             const ShiftVelocity& shift, const SolverParams& params);

  // Advances by dt (rebuilding cached phase tables only when dt changes).
  void step(WaveFunction& psi, double dt) const;

  const std::vector<double>& potential() const { return v_; }
  const ShiftVelocity& shift() const { return shift_; }

 private:
  void step_split(WaveFunction& psi, double dt) const;
  void step_crank_nicolson(WaveFunction& psi, double dt) const;
  void rebuild_tables(double dt) const;
  void apply_kinetic_half(cvector& a, double dt) const;
  void apply_angular_half(cvector& a, double dt) const;
  void apply_angular_term(cvector& a, std::size_t term, bool half_step) const;
  void apply_potential_full(cvector& a) const;

  GridSpec grid_;
  ParticleSystem sys_;
  std::vector<double> v_;  // raw potential (the quadratic shift energy lives in hop_)
  ShiftVelocity shift_;
  SolverParams params_;
  HamiltonianOp hop_;

  struct AngularTerm {
    int coord_axis;  // x_b
    int deriv_axis;  // p_c
    double weight;   // coefficient of x_b p_c in -zeta_dot . L
  };
  std::vector<AngularTerm> angular_;

  // dt-keyed caches (mutable: step() is logically const).
  mutable double cached_dt_ = 0.0;
  mutable std::vector<std::vector<std::complex<double>>> kinetic_half_;  // per axis
  mutable cvector potential_full_;
  mutable std::vector<std::vector<std::complex<double>>> angular_quarter_, angular_half_tab_;
};

WaveFunction step_schrodinger(const WaveFunction& psi, const ParticleSystem& sys,
                              const std::vector<double>& potential,
                              const ShiftVelocity& shift, double dt,
                              const SolverParams& params = {});

struct EvolutionRecord {
  WaveFunction psi;
  ObservableReport obs;
};

struct EvolutionResult {
  std::vector<EvolutionRecord> records;  // step 0, every record_stride, final
  int boundary_warnings = 0;
};

EvolutionResult evolve(const WaveFunction& psi0, const ParticleSystem& sys,
                       const std::vector<double>& potential, const ShiftVelocity& shift,
                       const SolverParams& params);

// L2 norm of (rho1 - rho0)/dt + div J at the interval midpoint, with
// J_A = hbar Im(psi* d_A psi)/m_A - rho xi_dot^A averaged over the endpoints.
// Second order in dt for solver-consistent state pairs.
double continuity_residual(const EpistemicState& s0, const EpistemicState& s1,
                           const ParticleSystem& sys, const ShiftVelocity& shift);

// --- label-time evolution ----------------------------------------------------

struct LapseProfile {
  double base = 1.0, amp = 0.0, freq = 1.0, phase0 = 0.0;

  double operator()(double x0) const;

  static LapseProfile constant(double b) { return {b, 0.0, 1.0, 0.0}; }
  static LapseProfile sinusoidal(double base, double amp, double freq,
                                 double phase0 = 0.0) {
    return {base, amp, freq, phase0};
  }
};

struct ParametrizedRecord {
  double x0 = 0.0;    // label time
  double t = 0.0;     // physical time accumulated through the lapse
  double beta = 0.0;  // lapse at the step midpoint
  double energy = 0.0;
  double pi0 = 0.0;   // conjugate of the label: pi0 = -H~, so pi0 + H~ = 0
  WaveFunction psi;
};

struct ParametrizedResult {
  std::vector<ParametrizedRecord> records;
  int boundary_warnings = 0;
};

// Steps the label x0 uniformly by dx0; each step advances physical time by
// dt_eff = beta(x0 + dx0/2) * dx0. Throws NegativeLapse when beta <= 0.
// With beta == 1 the call is bit-identical to evolve() at dt = dx0.
ParametrizedResult parametrized_evolve(const WaveFunction& psi0, const ParticleSystem& sys,
                                       const std::vector<double>& potential,
                                       const ShiftVelocity& shift, const LapseProfile& lapse,
                                       double x0_start, double dx0, std::int64_t label_steps,
                                       const SolverParams& params);

// Relative density within two cells of any box edge (rotation-compatibility
// diagnostic).
double edge_density(const WaveFunction& psi);

}  // namespace edlab
