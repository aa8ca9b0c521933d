#include "edlab/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>

#include "edlab/errors.hpp"
#include "edlab/fft.hpp"
#include "edlab/log.hpp"
#include "edlab/parallel.hpp"

namespace edlab {

DriftField make_drift_field(const EpistemicState& state, const ParticleSystem& sys,
                            double density_floor_rel) {
  const GridSpec& grid = state.grid;
  sys.require_match(grid);

  DriftField out;
  out.grid = grid;
  out.rho = state.rho;

  double rho_max = 0.0;
  for (double r : state.rho) rho_max = std::max(rho_max, r);
  out.floor = density_floor_rel * rho_max;

  const WaveFunction psi = epistemic_to_wf(state, sys);
  const auto grad = spectral::gradient(grid, psi.amp);
  const std::int64_t total = grid.total_points();
  const int D = grid.dim();
  const double hbar = sys.hbar, eta = sys.eta;

  std::atomic<std::int64_t> floored{0};
  out.grad_varphi.assign(static_cast<std::size_t>(D), {});
  for (int ax = 0; ax < D; ++ax)
    out.grad_varphi[static_cast<std::size_t>(ax)].resize(static_cast<std::size_t>(total));
  parallel_for(total, [&](std::int64_t b, std::int64_t e) {
    std::int64_t local = 0;
    for (std::int64_t i = b; i < e; ++i) {
      const auto s = static_cast<std::size_t>(i);
      double rho = state.rho[s];
      if (rho < out.floor) {
        rho = out.floor;
        ++local;
      }
      for (int ax = 0; ax < D; ++ax) {
        const std::complex<double> g =
            std::conj(psi.amp[s]) * grad[static_cast<std::size_t>(ax)][s];
        // hbar Im -> grad phi, eta Re -> osmotic (eta/2) grad log rho
        out.grad_varphi[static_cast<std::size_t>(ax)][s] =
            (hbar * std::imag(g) + eta * std::real(g)) / rho;
      }
    }
    floored += local;
  });
  out.floored_points = floored.load();
  return out;
}

double interpolate(const GridSpec& grid, const std::vector<double>& field,
                   const std::vector<double>& x) {
  const int D = grid.dim();
  std::int64_t base[kMaxConfigDim];
  double frac[kMaxConfigDim];
  for (int ax = 0; ax < D; ++ax) {
    const std::int64_t n = grid.points(ax);
    const double u = (x[static_cast<std::size_t>(ax)] + 0.5 * grid.length(ax)) / grid.spacing(ax);
    const double uf = std::floor(u);
    frac[ax] = u - uf;
    std::int64_t j = static_cast<std::int64_t>(uf) % n;
    if (j < 0) j += n;
    base[ax] = j;
  }
  double acc = 0.0;
  const int corners = 1 << D;
  for (int corner = 0; corner < corners; ++corner) {
    double w = 1.0;
    std::int64_t flat = 0;
    for (int ax = 0; ax < D; ++ax) {
      const bool hi = (corner >> ax) & 1;
      w *= hi ? frac[ax] : 1.0 - frac[ax];
      std::int64_t j = base[ax] + (hi ? 1 : 0);
      if (j == grid.points(ax)) j = 0;
      flat += j * grid.stride(ax);
    }
    acc += w * field[static_cast<std::size_t>(flat)];
  }
  return acc;
}

namespace {

// Advances one configuration in place-free style: reads x, writes out.
void step_config(const double* x, double* out, const DriftField& drift,
                 const ParticleSystem& sys, const ShiftVelocity& shift, double dt,
                 const CounterRng& rng, std::int64_t chain, std::int64_t step,
                 const SamplerParams& params, StepCounters& counters) {
  const GridSpec& grid = drift.grid;
  const int D = grid.dim();
  const int d = grid.spatial_dim();

  std::vector<double> xv(x, x + D);
  const double rho_at = interpolate(grid, drift.rho, xv);
  bool clamped = rho_at < drift.floor;

  for (int ax = 0; ax < D; ++ax) {
    const double m = sys.mass_for_axis(grid, ax);
    const double h = grid.spacing(ax);

    double drift_disp = 0.0;
    if (!clamped) {
      drift_disp = dt * interpolate(grid, drift.grad_varphi[static_cast<std::size_t>(ax)], xv) / m;
      if (std::abs(drift_disp) > h) {  // one cell per step
        drift_disp = std::copysign(h, drift_disp);
        clamped = true;
      }
    }

    const int p = grid.particle_of_axis(ax);
    std::array<double, 3> pos{0.0, 0.0, 0.0};
    for (int a = 0; a < d; ++a)
      pos[static_cast<std::size_t>(a)] = x[grid.axis_of(p, a)];
    const double xi = shift.at(pos)[static_cast<std::size_t>(grid.component_of_axis(ax))];

    const double noise = params.fluctuation_scale * std::sqrt(sys.eta * dt / m) *
                         rng.normal(static_cast<std::uint64_t>(chain),
                                    static_cast<std::uint64_t>(step),
                                    static_cast<std::uint64_t>(ax));
    out[ax] = grid.min_image(ax, x[ax] + drift_disp - dt * xi + noise);
  }

  ++counters.steps;
  if (clamped) ++counters.clamps;
}

}  // namespace

std::vector<double> sample_step(const std::vector<double>& x, const DriftField& drift,
                                const ParticleSystem& sys, const ShiftVelocity& shift,
                                double dt, const CounterRng& rng, std::int64_t chain,
                                std::int64_t step, const SamplerParams& params,
                                StepCounters& counters) {
  if (static_cast<int>(x.size()) != drift.grid.dim())
    throw DimensionError("configuration size must equal the grid dimension");
  if (dt <= 0.0) throw ValidationError("sampler step requires dt > 0");
  shift.validate(drift.grid);
  std::vector<double> out(x.size());
  step_config(x.data(), out.data(), drift, sys, shift, dt, rng, chain, step, params, counters);
  return out;
}

std::vector<double> sample_step(const std::vector<double>& x, const EpistemicState& state,
                                const ParticleSystem& sys, const ShiftVelocity& shift,
                                double dt, const CounterRng& rng, std::int64_t chain,
                                std::int64_t step, const SamplerParams& params,
                                StepCounters& counters) {
  const DriftField drift = make_drift_field(state, sys, params.density_floor_rel);
  return sample_step(x, drift, sys, shift, dt, rng, chain, step, params, counters);
}

TrajectoryEnsemble sample_ensemble(const std::vector<EpistemicState>& series,
                                   const ParticleSystem& sys, const ShiftVelocity& shift,
                                   std::int64_t chains, std::uint64_t seed,
                                   const SamplerParams& params) {
  if (series.empty()) throw ValidationError("state series is empty");
  if (chains < 1) throw ValidationError("chain count must be positive");
  const GridSpec& grid = series.front().grid;
  sys.require_match(grid);
  shift.validate(grid);
  for (const auto& s : series)
    if (!grid.same_shape(s.grid)) throw GridMismatch("state series mixes grids");

  const std::int64_t steps = static_cast<std::int64_t>(series.size()) - 1;
  double dt = 0.0;
  if (steps > 0) {
    dt = (series.back().t - series.front().t) / static_cast<double>(steps);
    if (dt <= 0.0) throw ValidationError("state series must advance in time");
    for (std::int64_t k = 0; k < steps; ++k) {
      const double step_dt = series[static_cast<std::size_t>(k + 1)].t -
                             series[static_cast<std::size_t>(k)].t;
      if (std::abs(step_dt - dt) > 1e-9 * std::max(1.0, std::abs(dt)))
        throw ValidationError("state series must be uniformly spaced in time");
    }
  }

  const int D = grid.dim();
  const std::int64_t total = grid.total_points();
  const CounterRng rng(seed);

  TrajectoryEnsemble out;
  out.chains = chains;
  out.dt = dt;
  out.seed = seed;
  out.grid = grid;
  out.total_steps = chains * steps;

  // inverse CDF over row-major cell masses (unnormalized prefix sums)
  std::vector<double> cum(static_cast<std::size_t>(total));
  double acc = 0.0;
  for (std::int64_t i = 0; i < total; ++i) {
    acc += series.front().rho[static_cast<std::size_t>(i)];
    cum[static_cast<std::size_t>(i)] = acc;
  }
  if (acc <= 0.0) throw NodeError("initial density has no mass to draw from");

  std::vector<double> cur(static_cast<std::size_t>(chains * D));
  parallel_for(chains, [&](std::int64_t b, std::int64_t e) {
    std::vector<std::int64_t> idx;
    for (std::int64_t c = b; c < e; ++c) {
      const double u = rng.uniform(static_cast<std::uint64_t>(c), 0, 0) * acc;
      const auto it = std::upper_bound(cum.begin(), cum.end(), u);
      const std::int64_t cell = std::min<std::int64_t>(it - cum.begin(), total - 1);
      grid.unflatten(cell, idx);
      for (int ax = 0; ax < D; ++ax) {
        const double jitter =
            rng.uniform(static_cast<std::uint64_t>(c), 0, static_cast<std::uint64_t>(1 + ax));
        cur[static_cast<std::size_t>(c * D + ax)] =
            grid.min_image(ax, grid.coord(ax, idx[static_cast<std::size_t>(ax)]) +
                                   jitter * grid.spacing(ax));
      }
    }
  });

  auto record = [&](double t) {
    out.times.push_back(t);
    out.positions.push_back(cur);
  };
  record(series.front().t);

  std::atomic<std::int64_t> clamps{0};
  std::vector<double> next(cur.size());
  for (std::int64_t k = 0; k < steps; ++k) {
    const DriftField drift = make_drift_field(series[static_cast<std::size_t>(k)], sys,
                                              params.density_floor_rel);
    parallel_for(chains, [&](std::int64_t b, std::int64_t e) {
      StepCounters local;
      for (std::int64_t c = b; c < e; ++c)
        step_config(cur.data() + c * D, next.data() + c * D, drift, sys, shift, dt, rng, c,
                    k + 1, params, local);
      clamps += local.clamps;
    });
    cur.swap(next);
    if (k + 1 == steps || (params.record_stride > 0 && (k + 1) % params.record_stride == 0))
      record(series[static_cast<std::size_t>(k + 1)].t);
  }

  out.clamp_count = clamps.load();
  out.flagged = out.total_steps > 0 &&
                static_cast<double>(out.clamp_count) >
                    params.flag_fraction * static_cast<double>(out.total_steps);
  if (out.flagged)
    log::warn("sampler clamped " + std::to_string(out.clamp_count) + " of " +
              std::to_string(out.total_steps) + " chain-steps");
  return out;
}

// --- maximum-entropy oracle ---------------------------------------------------

std::vector<std::string> MaxEntProblem::validate() const {
  std::vector<std::string> v;
  if (lattice.size() < 8) v.push_back("displacement lattice needs at least 8 points");
  if (!(alpha > 0.0)) v.push_back("prior concentration alpha must be positive");
  if (lattice.size() >= 2) {
    const double h = lattice[1] - lattice[0];
    if (!(h > 0.0)) {
      v.push_back("lattice must be strictly ascending");
    } else {
      for (std::size_t i = 1; i + 1 < lattice.size(); ++i)
        if (std::abs((lattice[i + 1] - lattice[i]) - h) > 1e-9 * h) {
          v.push_back("lattice must be uniformly spaced");
          break;
        }
    }
  }
  if (alpha > 0.0 && lattice.size() >= 2) {
    // prior tail mass beyond the lattice support
    const double sigma = 1.0 / std::sqrt(alpha);
    const double tail = 0.5 * std::erfc(lattice.back() / (sigma * std::numbers::sqrt2)) +
                        0.5 * std::erfc(-lattice.front() / (sigma * std::numbers::sqrt2));
    if (tail >= 1e-12) v.push_back("lattice too narrow: prior tail mass exceeds 1e-12");
  }
  return v;
}

namespace {

struct LatticeMoments {
  double mean = 0.0, variance = 0.0, log_z = 0.0;
};

// Moments of P(c) proportional to exp(-alpha x^2/2 + c x) on the lattice.
LatticeMoments lattice_moments(const std::vector<double>& x, double alpha, double c) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double xi : x) peak = std::max(peak, -0.5 * alpha * xi * xi + c * xi);
  double w = 0.0, wx = 0.0, wxx = 0.0;
  for (double xi : x) {
    const double e = std::exp(-0.5 * alpha * xi * xi + c * xi - peak);
    w += e;
    wx += e * xi;
    wxx += e * xi * xi;
  }
  LatticeMoments m;
  m.mean = wx / w;
  m.variance = wxx / w - m.mean * m.mean;
  m.log_z = peak + std::log(w);
  return m;
}

}  // namespace

MaxEntSolution maxent_transition_oracle(const MaxEntProblem& problem) {
  const auto violations = problem.validate();
  if (!violations.empty()) throw ValidationError(violations);

  const auto& x = problem.lattice;
  const double alpha = problem.alpha;

  MaxEntSolution sol;

  double c = 0.0;
  if (problem.dphi == 0.0) {
    if (problem.kappa != 0.0)
      throw InfeasibleConstraint("kappa must vanish when the drift slope is zero");
    // constraint inactive: P is the normalized prior
  } else {
    const double target = problem.kappa / problem.dphi;
    if (!(target > x.front() && target < x.back()))
      throw InfeasibleConstraint("required mean displacement lies outside the lattice");

    // mean(c) is strictly increasing; bracket around the continuum answer
    double lo = alpha * target, hi = lo;
    double radius = std::max(1.0, std::abs(lo));
    long iters = 0;
    while (lattice_moments(x, alpha, lo).mean > target) {
      lo -= radius;
      radius *= 2.0;
      if (++iters > 200) throw InfeasibleConstraint("constraint bracket search diverged");
    }
    radius = std::max(1.0, std::abs(hi));
    while (lattice_moments(x, alpha, hi).mean < target) {
      hi += radius;
      radius *= 2.0;
      if (++iters > 200) throw InfeasibleConstraint("constraint bracket search diverged");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-16 * std::max(1.0, std::abs(hi) + std::abs(lo));
         ++it) {
      const double mid = 0.5 * (lo + hi);
      if (lattice_moments(x, alpha, mid).mean < target)
        lo = mid;
      else
        hi = mid;
      ++iters;
    }
    c = 0.5 * (lo + hi);
    sol.iterations = iters;
  }

  const auto m = lattice_moments(x, alpha, c);
  sol.multiplier = c;
  sol.alpha_prime = problem.dphi != 0.0 ? c / problem.dphi : 0.0;
  sol.mean = m.mean;
  sol.variance = m.variance;

  sol.p.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    sol.p[i] = std::exp(-0.5 * alpha * x[i] * x[i] + c * x[i] - m.log_z);

  // KL against the analytic kernel: Gaussian with mean c/alpha, variance
  // 1/alpha, discretized as density times cell width.
  const double h = x[1] - x[0];
  const double mu = c / alpha;
  const double log_norm = std::log(h) + 0.5 * std::log(alpha / (2.0 * std::numbers::pi));
  double kl = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double log_p = -0.5 * alpha * x[i] * x[i] + c * x[i] - m.log_z;
    const double log_g = log_norm - 0.5 * alpha * (x[i] - mu) * (x[i] - mu);
    kl += sol.p[i] * (log_p - log_g);
  }
  sol.kl_to_analytic = kl;
  return sol;
}

// --- ensemble validation --------------------------------------------------------

DensityCompareReport ensemble_density_compare(const TrajectoryEnsemble& ensemble,
                                              const WaveFunction& psi_final) {
  const GridSpec& grid = ensemble.grid;
  if (!grid.same_shape(psi_final.grid))
    throw GridMismatch("ensemble and state live on different grids");
  if (ensemble.times.empty() || ensemble.positions.empty())
    throw ValidationError("ensemble holds no recorded instants");
  if (std::abs(ensemble.times.back() - psi_final.t) > 1e-9)
    throw ValidationError("ensemble and state final times differ");

  const int D = grid.dim();
  const std::int64_t chains = ensemble.chains;
  const double cellw = grid.cell_volume();

  // pick the smallest power-of-two coarsening whose >=100-count bins carry
  // 99% of the expected mass
  std::int64_t factor = 0;
  std::vector<double> expected;
  std::vector<std::int64_t> bins_per_axis(static_cast<std::size_t>(D));
  for (std::int64_t f = 1;; f *= 2) {
    bool divides = true;
    for (int ax = 0; ax < D; ++ax) divides = divides && grid.points(ax) % f == 0;
    if (!divides || f > grid.points(0)) break;

    std::vector<std::int64_t> nb(static_cast<std::size_t>(D));
    std::int64_t bin_total = 1;
    for (int ax = 0; ax < D; ++ax) {
      nb[static_cast<std::size_t>(ax)] = grid.points(ax) / f;
      bin_total *= nb[static_cast<std::size_t>(ax)];
    }
    std::vector<double> exp_f(static_cast<std::size_t>(bin_total), 0.0);
    for (std::int64_t i = 0; i < grid.total_points(); ++i) {
      std::int64_t bin = 0;
      for (int ax = 0; ax < D; ++ax)
        bin = bin * nb[static_cast<std::size_t>(ax)] + grid.axis_index(i, ax) / f;
      exp_f[static_cast<std::size_t>(bin)] +=
          std::norm(psi_final.amp[static_cast<std::size_t>(i)]) * cellw *
          static_cast<double>(chains);
    }
    double covered = 0.0;
    std::int64_t big = 0;
    for (double e : exp_f)
      if (e >= 100.0) {
        covered += e;
        ++big;
      }
    if (big >= 2 && covered >= 0.99 * static_cast<double>(chains)) {
      factor = f;
      expected = std::move(exp_f);
      bins_per_axis = nb;
      break;
    }
  }
  if (factor == 0)
    throw UndersampledBins("no coarsening yields two bins with 100 expected counts");

  // observed counts at the final instant
  std::vector<std::int64_t> counts(expected.size(), 0);
  const auto& pos = ensemble.positions.back();
  for (std::int64_t cidx = 0; cidx < chains; ++cidx) {
    std::int64_t bin = 0;
    for (int ax = 0; ax < D; ++ax) {
      const double u = (pos[static_cast<std::size_t>(cidx * D + ax)] + 0.5 * grid.length(ax)) /
                       grid.spacing(ax);
      std::int64_t j = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(u)), 0,
                                                grid.points(ax) - 1);
      bin = bin * bins_per_axis[static_cast<std::size_t>(ax)] + j / factor;
    }
    ++counts[static_cast<std::size_t>(bin)];
  }

  DensityCompareReport rep;
  rep.coarsen_factor = factor;

  double tv = 0.0, chi2 = 0.0;
  double rest_expected = 0.0;
  std::int64_t rest_observed = 0, terms = 0;
  for (std::size_t b = 0; b < expected.size(); ++b) {
    if (expected[b] >= 100.0) {
      ++rep.big_bins;
      const double diff = static_cast<double>(counts[b]) - expected[b];
      tv += std::abs(diff);
      chi2 += diff * diff / expected[b];
      ++terms;
    } else {
      rest_expected += expected[b];
      rest_observed += counts[b];
    }
  }
  tv += std::abs(static_cast<double>(rest_observed) - rest_expected);
  rep.tv_distance = 0.5 * tv / static_cast<double>(chains);
  if (rest_expected >= 5.0) {
    const double diff = static_cast<double>(rest_observed) - rest_expected;
    chi2 += diff * diff / rest_expected;
    ++terms;
  }
  rep.chi_square = chi2;
  rep.dof = terms - 1;
  rep.p_value = rep.dof > 0
                    ? boost::math::gamma_q(0.5 * static_cast<double>(rep.dof), 0.5 * chi2)
                    : 1.0;
  return rep;
}

}  // namespace edlab
