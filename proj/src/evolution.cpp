#include "edlab/evolution.hpp"

#include <cmath>
#include <complex>
#include <cstddef>
#include <utility>

#include "edlab/errors.hpp"
#include "edlab/fft.hpp"
#include "edlab/log.hpp"
#include "edlab/parallel.hpp"

namespace edlab {

namespace {

constexpr std::complex<double> kI{0.0, 1.0};

double levi_civita(int a, int b, int c) {
  if (a == b || b == c || a == c) return 0.0;
  // parity of the permutation (a b c) of (0 1 2)
  return ((b - a + 3) % 3 == 1) ? 1.0 : -1.0;
}

}  // namespace

Propagator::Propagator(const GridSpec& grid, const ParticleSystem& sys,
                       std::vector<double> potential, const ShiftVelocity& shift,
                       const SolverParams& params)
    : grid_(grid),
      sys_(sys),
      v_(std::move(potential)),
      shift_(shift),
      params_(params),
      hop_(grid, sys, v_, shift) {
  sys_.require_match(grid_);
  shift_.validate(grid_);
  if (static_cast<std::int64_t>(v_.size()) != grid_.total_points())
    throw GridMismatch("potential field does not match the grid");

  // Enumerate the x_b p_c pieces of -zeta_dot.L, one set per particle, in a
  // fixed (particle, b, c) order so the composition is reproducible.
  const int d = grid_.spatial_dim();
  if (shift_.has_rotation()) {
    for (int n = 0; n < grid_.particle_count(); ++n) {
      for (int b = 0; b < d; ++b) {
        for (int c = 0; c < d; ++c) {
          if (b == c) continue;
          double w = 0.0;
          if (d == 2) {
            // embed the scalar zeta_dot as the z component
            w = -shift_.zeta_dot[0] * levi_civita(2, b, c);
          } else {
            for (int a = 0; a < 3; ++a)
              w -= shift_.zeta_dot[static_cast<std::size_t>(a)] * levi_civita(a, b, c);
          }
          if (w != 0.0)
            angular_.push_back({grid_.axis_of(n, b), grid_.axis_of(n, c), w});
        }
      }
    }
  }
}

void Propagator::rebuild_tables(double dt) const {
  const double hbar = sys_.hbar;
  const int D = grid_.dim();

  kinetic_half_.assign(static_cast<std::size_t>(D), {});
  for (int ax = 0; ax < D; ++ax) {
    const std::int64_t n = grid_.points(ax);
    const double m = sys_.mass_for_axis(grid_, ax);
    const double lam = shift_.lambda_dot[static_cast<std::size_t>(grid_.component_of_axis(ax))];
    auto& tab = kinetic_half_[static_cast<std::size_t>(ax)];
    tab.resize(static_cast<std::size_t>(n));
    for (std::int64_t j = 0; j < n; ++j) {
      const double k = grid_.wavenumber(ax, j);
      const double kd = grid_.wavenumber_deriv(ax, j);
      const double phase =
          -(0.5 * dt / hbar) * (hbar * hbar * k * k / (2.0 * m) - lam * hbar * kd);
      tab[static_cast<std::size_t>(j)] = std::polar(1.0, phase);
    }
  }

  const auto& w = hop_.effective_potential();
  potential_full_.resize(w.size());
  parallel_for(static_cast<std::int64_t>(w.size()), [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i)
      potential_full_[static_cast<std::size_t>(i)] =
          std::polar(1.0, -dt / hbar * w[static_cast<std::size_t>(i)]);
  });

  angular_quarter_.assign(angular_.size(), {});
  angular_half_tab_.assign(angular_.size(), {});
  for (std::size_t t = 0; t < angular_.size(); ++t) {
    const auto& term = angular_[t];
    const std::int64_t nb = grid_.points(term.coord_axis);
    const std::int64_t nc = grid_.points(term.deriv_axis);
    auto& quarter = angular_quarter_[t];
    auto& half = angular_half_tab_[t];
    quarter.resize(static_cast<std::size_t>(nb * nc));
    half.resize(static_cast<std::size_t>(nb * nc));
    for (std::int64_t jb = 0; jb < nb; ++jb) {
      const double x = grid_.coord(term.coord_axis, jb);
      for (std::int64_t jc = 0; jc < nc; ++jc) {
        // exp(-(i/hbar) tau w x_b (hbar k_c)): hbar cancels
        const double theta = -term.weight * x * grid_.wavenumber_deriv(term.deriv_axis, jc);
        quarter[static_cast<std::size_t>(jb * nc + jc)] = std::polar(1.0, 0.25 * dt * theta);
        half[static_cast<std::size_t>(jb * nc + jc)] = std::polar(1.0, 0.5 * dt * theta);
      }
    }
  }

  cached_dt_ = dt;
}

void Propagator::apply_kinetic_half(cvector& a, double /*dt*/) const {
  spectral::forward(grid_, a.data());
  const int D = grid_.dim();
  parallel_for(grid_.total_points(), [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i) {
      std::complex<double> fac = kinetic_half_[0][static_cast<std::size_t>(grid_.axis_index(i, 0))];
      for (int ax = 1; ax < D; ++ax)
        fac *= kinetic_half_[static_cast<std::size_t>(ax)]
                            [static_cast<std::size_t>(grid_.axis_index(i, ax))];
      a[static_cast<std::size_t>(i)] *= fac;
    }
  });
  spectral::inverse(grid_, a.data());
}

void Propagator::apply_angular_term(cvector& a, std::size_t term, bool half_step) const {
  const auto& T = angular_[term];
  const auto& tab = half_step ? angular_half_tab_[term] : angular_quarter_[term];
  const std::int64_t nc = grid_.points(T.deriv_axis);
  spectral::forward_axis(grid_, T.deriv_axis, a.data());
  parallel_for(grid_.total_points(), [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i) {
      const std::int64_t jb = grid_.axis_index(i, T.coord_axis);
      const std::int64_t jc = grid_.axis_index(i, T.deriv_axis);
      a[static_cast<std::size_t>(i)] *= tab[static_cast<std::size_t>(jb * nc + jc)];
    }
  });
  spectral::inverse_axis(grid_, T.deriv_axis, a.data());
}

void Propagator::apply_angular_half(cvector& a, double /*dt*/) const {
  if (angular_.empty()) return;
  const std::size_t m = angular_.size();
  // palindromic within the half step, so the full K/A/W/A/K sandwich stays
  // second order even though the x_b p_c pieces do not commute
  for (std::size_t j = 0; j + 1 < m; ++j) apply_angular_term(a, j, false);
  apply_angular_term(a, m - 1, true);
  for (std::size_t j = m - 1; j-- > 0;) apply_angular_term(a, j, false);
}

void Propagator::apply_potential_full(cvector& a) const {
  parallel_for(grid_.total_points(), [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i)
      a[static_cast<std::size_t>(i)] *= potential_full_[static_cast<std::size_t>(i)];
  });
}

void Propagator::step_split(WaveFunction& psi, double dt) const {
  if (dt != cached_dt_) rebuild_tables(dt);
  apply_kinetic_half(psi.amp, dt);
  apply_angular_half(psi.amp, dt);
  apply_potential_full(psi.amp);
  apply_angular_half(psi.amp, dt);
  apply_kinetic_half(psi.amp, dt);
}

void Propagator::step_crank_nicolson(WaveFunction& psi, double dt) const {
  const double alpha = dt / (2.0 * sys_.hbar);
  const std::int64_t n = grid_.total_points();

  auto apply_op = [&](const cvector& x, double sign) {
    cvector hx = hop_.apply(x);
    parallel_for(n, [&](std::int64_t b, std::int64_t e) {
      for (std::int64_t i = b; i < e; ++i) {
        const auto s = static_cast<std::size_t>(i);
        hx[s] = x[s] + sign * kI * alpha * hx[s];
      }
    });
    return hx;
  };
  auto dot_norm2 = [&](const cvector& x) {
    return block_sum(n, [&](std::int64_t i) { return std::norm(x[static_cast<std::size_t>(i)]); });
  };

  // b = (1 - i alpha H) psi; solve (1 + i alpha H) x = b by CGNR. The normal
  // operator has spectrum 1 + (alpha E)^2, so conditioning is mild.
  cvector b = apply_op(psi.amp, -1.0);
  const double bnorm2 = dot_norm2(b);
  if (bnorm2 == 0.0) {
    psi.amp.assign(psi.amp.size(), {0.0, 0.0});
    return;
  }

  cvector x = psi.amp;
  cvector r = apply_op(x, +1.0);
  parallel_for(n, [&](std::int64_t bg, std::int64_t e) {
    for (std::int64_t i = bg; i < e; ++i) {
      const auto s = static_cast<std::size_t>(i);
      r[s] = b[s] - r[s];
    }
  });
  cvector z = apply_op(r, -1.0);
  cvector p = z;
  double znorm2 = dot_norm2(z);
  double rnorm2 = dot_norm2(r);
  const double target2 = params_.cn_tol * params_.cn_tol * bnorm2;

  int iter = 0;
  while (rnorm2 > target2) {
    if (iter++ >= params_.cn_max_iter)
      throw SolverDivergence("implicit step failed to converge within the iteration budget");
    cvector w = apply_op(p, +1.0);
    const double wnorm2 = dot_norm2(w);
    if (wnorm2 == 0.0 || !std::isfinite(wnorm2))
      throw SolverDivergence("implicit step broke down (non-finite search direction)");
    const double lam = znorm2 / wnorm2;
    parallel_for(n, [&](std::int64_t bg, std::int64_t e) {
      for (std::int64_t i = bg; i < e; ++i) {
        const auto s = static_cast<std::size_t>(i);
        x[s] += lam * p[s];
        r[s] -= lam * w[s];
      }
    });
    rnorm2 = dot_norm2(r);
    z = apply_op(r, -1.0);
    const double znorm2_new = dot_norm2(z);
    const double beta = znorm2_new / znorm2;
    znorm2 = znorm2_new;
    parallel_for(n, [&](std::int64_t bg, std::int64_t e) {
      for (std::int64_t i = bg; i < e; ++i) {
        const auto s = static_cast<std::size_t>(i);
        p[s] = z[s] + beta * p[s];
      }
    });
  }

  psi.amp = std::move(x);
}

void Propagator::step(WaveFunction& psi, double dt) const {
  if (!grid_.same_shape(psi.grid)) throw GridMismatch("state grid does not match the propagator");
  if (dt != 0.0) {
    if (params_.backend == Backend::SplitStep)
      step_split(psi, dt);
    else
      step_crank_nicolson(psi, dt);
  }
  psi.t += dt;
}

WaveFunction step_schrodinger(const WaveFunction& psi, const ParticleSystem& sys,
                              const std::vector<double>& potential,
                              const ShiftVelocity& shift, double dt,
                              const SolverParams& params) {
  Propagator prop(psi.grid, sys, potential, shift, params);
  WaveFunction out = psi;
  prop.step(out, dt);
  return out;
}

double edge_density(const WaveFunction& psi) {
  const GridSpec& grid = psi.grid;
  const int D = grid.dim();
  double global_max = 0.0, edge_max = 0.0;
  const std::int64_t total = grid.total_points();
  for (std::int64_t i = 0; i < total; ++i) {
    const double d = std::norm(psi.amp[static_cast<std::size_t>(i)]);
    if (d > global_max) global_max = d;
    bool edge = false;
    for (int ax = 0; ax < D && !edge; ++ax) {
      const std::int64_t j = grid.axis_index(i, ax);
      edge = j < 2 || j >= grid.points(ax) - 2;
    }
    if (edge && d > edge_max) edge_max = d;
  }
  return global_max > 0.0 ? edge_max / global_max : 0.0;
}

namespace {

void check_finite_or_throw(const WaveFunction& psi) {
  if (!all_finite(psi)) throw SolverDivergence("state amplitude became non-finite");
}

}  // namespace

EvolutionResult evolve(const WaveFunction& psi0, const ParticleSystem& sys,
                       const std::vector<double>& potential, const ShiftVelocity& shift,
                       const SolverParams& params) {
  Propagator prop(psi0.grid, sys, potential, shift, params);
  WaveFunction psi = psi0;
  EvolutionResult out;
  const bool check_edges = params.boundary_check && shift.has_rotation();

  auto record = [&]() {
    check_finite_or_throw(psi);
    out.records.push_back({psi, observable_report(psi, sys, potential, shift)});
    if (check_edges && edge_density(psi) > 1e-8) {
      if (out.boundary_warnings == 0)
        log::warn("rotating shift with non-negligible edge density; "
                  "rigid rotation is not periodic-compatible at the box edge");
      ++out.boundary_warnings;
    }
  };

  record();
  for (std::int64_t k = 1; k <= params.steps; ++k) {
    prop.step(psi, params.dt);
    if (k == params.steps || (params.record_stride > 0 && k % params.record_stride == 0))
      record();
  }
  return out;
}

double continuity_residual(const EpistemicState& s0, const EpistemicState& s1,
                           const ParticleSystem& sys, const ShiftVelocity& shift) {
  const GridSpec& grid = s0.grid;
  if (!grid.same_shape(s1.grid)) throw GridMismatch("continuity check needs matching grids");
  shift.validate(grid);
  const double dt = s1.t - s0.t;
  if (dt == 0.0) throw DimensionError("continuity check needs states at distinct times");

  const WaveFunction w0 = epistemic_to_wf(s0, sys);
  const WaveFunction w1 = epistemic_to_wf(s1, sys);
  const auto g0 = spectral::gradient(grid, w0.amp);
  const auto g1 = spectral::gradient(grid, w1.amp);
  const auto xi = shift_field(grid, shift);

  const std::int64_t total = grid.total_points();
  const int D = grid.dim();
  std::vector<double> divJ(static_cast<std::size_t>(total), 0.0);
  std::vector<double> J(static_cast<std::size_t>(total));
  for (int ax = 0; ax < D; ++ax) {
    const double m = sys.mass_for_axis(grid, ax);
    parallel_for(total, [&](std::int64_t b, std::int64_t e) {
      for (std::int64_t i = b; i < e; ++i) {
        const auto s = static_cast<std::size_t>(i);
        const double f0 = sys.hbar * std::imag(std::conj(w0.amp[s]) * g0[static_cast<std::size_t>(ax)][s]) / m -
                          s0.rho[s] * xi[static_cast<std::size_t>(ax)][s];
        const double f1 = sys.hbar * std::imag(std::conj(w1.amp[s]) * g1[static_cast<std::size_t>(ax)][s]) / m -
                          s1.rho[s] * xi[static_cast<std::size_t>(ax)][s];
        J[s] = 0.5 * (f0 + f1);
      }
    });
    const auto dJ = spectral::derivative_real(grid, J, ax);
    parallel_for(total, [&](std::int64_t b, std::int64_t e) {
      for (std::int64_t i = b; i < e; ++i)
        divJ[static_cast<std::size_t>(i)] += dJ[static_cast<std::size_t>(i)];
    });
  }

  const double h = grid.cell_volume();
  const double sq = block_sum(total, [&](std::int64_t i) {
    const auto s = static_cast<std::size_t>(i);
    const double r = (s1.rho[s] - s0.rho[s]) / dt + divJ[s];
    return r * r;
  });
  return std::sqrt(sq * h);
}

double LapseProfile::operator()(double x0) const {
  return base + amp * std::sin(freq * x0 + phase0);
}

ParametrizedResult parametrized_evolve(const WaveFunction& psi0, const ParticleSystem& sys,
                                       const std::vector<double>& potential,
                                       const ShiftVelocity& shift, const LapseProfile& lapse,
                                       double x0_start, double dx0, std::int64_t label_steps,
                                       const SolverParams& params) {
  if (dx0 <= 0.0) throw ValidationError(std::string("label step dx0 must be positive"));
  Propagator prop(psi0.grid, sys, potential, shift, params);
  WaveFunction psi = psi0;
  ParametrizedResult out;
  const bool check_edges = params.boundary_check && shift.has_rotation();

  auto record = [&](double x0, double beta) {
    check_finite_or_throw(psi);
    const auto rep = observable_report(psi, sys, potential, shift);
    out.records.push_back({x0, psi.t, beta, rep.energy, -rep.energy, psi});
    if (check_edges && edge_density(psi) > 1e-8) ++out.boundary_warnings;
  };

  record(x0_start, lapse(x0_start));
  for (std::int64_t k = 1; k <= label_steps; ++k) {
    // midpoint sampling keeps t(x0) second order in dx0 and makes beta == 1
    // reproduce the unparametrized stepping exactly
    const double x0_mid = x0_start + (static_cast<double>(k) - 0.5) * dx0;
    const double beta = lapse(x0_mid);
    if (beta <= 0.0) throw NegativeLapse("lapse must stay positive along the label interval");
    prop.step(psi, beta * dx0);
    if (k == label_steps || (params.record_stride > 0 && k % params.record_stride == 0))
      record(x0_start + static_cast<double>(k) * dx0, beta);
  }
  return out;
}

}  // namespace edlab
