#pragma once
// Ontic trajectory sampling. Particles hold definite configurations x^A that
// hop by the short-step kernel
//   dx^A = dt m^{AB} d_B varphi(x) - dt xi_dot^A(x) + dw^A,
//   <dw dw> = eta dt m^{AB},   varphi = phi + eta log rho^{1/2},
// Euler-Maruyama at the solver step, drift interpolated multilinearly from
// the grid. A 1D maximum-entropy oracle re-derives the Gaussian kernel from
// the constrained-entropy problem, and a histogram comparison ties ensemble
// densities back to |psi|^2.

#include <cstdint>
#include <vector>

#include "edlab/rng.hpp"
#include "edlab/shift.hpp"
#include "edlab/state.hpp"
#include "edlab/system.hpp"

namespace edlab {

struct SamplerParams {
  std::int64_t record_stride = 1;
  double fluctuation_scale = 1.0;  // scales the noise only (negative controls)
  double density_floor_rel = 1e-12;
  double flag_fraction = 1e-3;     // clamp fraction that flags the run
};

// Gradient of the drift potential varphi on the grid, extracted through psi
// so winding phases stay exact; the density floor guards the osmotic log.
struct DriftField {
  GridSpec grid;
  std::vector<std::vector<double>> grad_varphi;  // one field per axis
  std::vector<double> rho;
  double floor = 0.0;                 // absolute density floor
  std::int64_t floored_points = 0;    // grid points held at the floor
};

DriftField make_drift_field(const EpistemicState& state, const ParticleSystem& sys,
                            double density_floor_rel = 1e-12);

// Periodic multilinear interpolation of a grid field at configuration x.
double interpolate(const GridSpec& grid, const std::vector<double>& field,
                   const std::vector<double>& x);

struct StepCounters {
  std::int64_t clamps = 0;  // chain-steps whose drift was clamped
  std::int64_t steps = 0;
};

// One Euler-Maruyama step of a single configuration (all particles at once).
// Noise comes from counter (chain, step, axis); the drift displacement is
// capped at one cell per axis and zeroed where interpolated rho sits below
// the floor, with every such event counted.
std::vector<double> sample_step(const std::vector<double>& x, const DriftField& drift,
                                const ParticleSystem& sys, const ShiftVelocity& shift,
                                double dt, const CounterRng& rng, std::int64_t chain,
                                std::int64_t step, const SamplerParams& params,
                                StepCounters& counters);

// Convenience overload building the drift field from the state.
std::vector<double> sample_step(const std::vector<double>& x, const EpistemicState& state,
                                const ParticleSystem& sys, const ShiftVelocity& shift,
                                double dt, const CounterRng& rng, std::int64_t chain,
                                std::int64_t step, const SamplerParams& params,
                                StepCounters& counters);

struct TrajectoryEnsemble {
  std::int64_t chains = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> times;                   // recorded instants
  std::vector<std::vector<double>> positions;  // [instant][chain * D + axis]
  std::int64_t clamp_count = 0;
  std::int64_t total_steps = 0;  // chains * time steps
  bool flagged = false;          // clamp fraction above the threshold
  GridSpec grid;
};

// Advances `chains` independent walkers against the recorded state series
// (one entry per solver step, uniform dt). Initial positions are drawn from
// series.front() by inverse CDF over the row-major cell masses plus uniform
// in-cell jitter. Bit-reproducible for a fixed seed at any thread count.
TrajectoryEnsemble sample_ensemble(const std::vector<EpistemicState>& series,
                                   const ParticleSystem& sys, const ShiftVelocity& shift,
                                   std::int64_t chains, std::uint64_t seed,
                                   const SamplerParams& params = {});

// --- maximum-entropy oracle ---------------------------------------------------

// One composite axis of the transition kernel: maximize S[P,Q] over the
// displacement lattice subject to normalization and <dx dphi> = kappa.
// The prior is Q proportional to exp(-alpha dx^2 / 2).
struct MaxEntProblem {
  std::vector<double> lattice;  // uniform ascending displacement candidates
  double alpha = 1.0;           // prior concentration
  double dphi = 0.0;            // drift-potential slope along this axis
  double kappa = 0.0;           // constraint value

  std::vector<std::string> validate() const;  // empty when well-posed
};

struct MaxEntSolution {
  std::vector<double> p;       // lattice masses, sums to 1
  double multiplier = 0.0;     // exponent slope c solving the constraint
  double alpha_prime = 0.0;    // c / dphi
  double mean = 0.0;
  double variance = 0.0;
  double kl_to_analytic = 0.0; // KL(P || h N(mean c/alpha, var 1/alpha))
  long iterations = 0;
};

// Solves the one-dimensional dual (exponential family in the multiplier) by
// bracketing plus bisection on the strictly increasing constraint function.
// Throws InfeasibleConstraint when kappa/dphi lies outside the lattice range
// or dphi == 0 with kappa != 0.
MaxEntSolution maxent_transition_oracle(const MaxEntProblem& problem);

// --- ensemble validation --------------------------------------------------------

struct DensityCompareReport {
  std::int64_t coarsen_factor = 1;  // cells per bin per axis
  std::int64_t big_bins = 0;        // bins with expected count >= 100
  double tv_distance = 0.0;         // big bins plus one lumped remainder
  double chi_square = 0.0;
  std::int64_t dof = 0;
  double p_value = 0.0;             // upper tail of chi-square
};

// Histogram of the ensemble's final instant against |psi|^2, coarsened until
// bins holding >= 100 expected counts cover 99% of the mass. Throws
// UndersampledBins when no power-of-two coarsening achieves two such bins.
DensityCompareReport ensemble_density_compare(const TrajectoryEnsemble& ensemble,
                                              const WaveFunction& psi_final);

}  // namespace edlab
