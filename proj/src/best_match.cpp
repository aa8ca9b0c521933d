#include "edlab/best_match.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "edlab/errors.hpp"
#include "edlab/fft.hpp"
#include "edlab/parallel.hpp"

namespace edlab {

namespace {

std::vector<double> resolve_potential(const GridSpec& grid, const std::vector<double>& v) {
  if (v.empty()) return std::vector<double>(static_cast<std::size_t>(grid.total_points()), 0.0);
  if (static_cast<std::int64_t>(v.size()) != grid.total_points())
    throw GridMismatch("potential field does not match the grid");
  return v;
}

double closed_form_mismatch(const WaveFunction& psi, const ParticleSystem& sys,
                            const std::vector<double>& v, const ShiftVelocity& shift,
                            double dt) {
  const double e = hamiltonian_expectation(psi, sys, v, shift);
  const double x = dt * e / sys.hbar;
  return x * x;
}

// H~ as an exact quadratic in the concatenated (lambda_dot, zeta_dot)
// coordinates; every coefficient is a grid expectation of the unshifted state,
// so evaluation costs one report regardless of how many points are probed.
struct ShiftQuadratic {
  int d = 0;
  double e0 = 0.0, mass = 0.0;
  std::array<double, 3> p{}, l{}, xcm{};
  std::array<std::array<double, 3>, 3> inertia{};

  ShiftQuadratic(const WaveFunction& psi, const ParticleSystem& sys,
                 const std::vector<double>& v) {
    d = psi.grid.spatial_dim();
    const auto rep = observable_report(psi, sys, v, ShiftVelocity::zero(d));
    e0 = rep.energy;
    mass = sys.total_mass();
    p = rep.momentum;
    l = rep.angular;
    inertia = rep.inertia;
    const auto cm = center_of_mass(psi, sys);
    for (int a = 0; a < d; ++a) xcm[static_cast<std::size_t>(a)] = cm[static_cast<std::size_t>(a)];
  }

  double operator()(const std::vector<double>& c) const {
    double h = e0;
    for (int a = 0; a < d; ++a) {
      const auto s = static_cast<std::size_t>(a);
      h += -c[s] * p[s] + 0.5 * mass * c[s] * c[s];
    }
    if (d == 2 && c.size() >= 3) {
      const double z = c[2];
      h += -z * l[0] + 0.5 * z * z * inertia[0][0];
      h += mass * (c[0] * (-z * xcm[1]) + c[1] * (z * xcm[0]));
    } else if (d == 3 && c.size() >= 6) {
      const double* z = c.data() + 3;
      for (int a = 0; a < 3; ++a) {
        h += -z[a] * l[static_cast<std::size_t>(a)];
        for (int b = 0; b < 3; ++b)
          h += 0.5 * z[a] * inertia[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] * z[b];
      }
      // cross term M lambda.(zeta x x_cm)
      const std::array<double, 3> cr{z[1] * xcm[2] - z[2] * xcm[1],
                                     z[2] * xcm[0] - z[0] * xcm[2],
                                     z[0] * xcm[1] - z[1] * xcm[0]};
      for (int a = 0; a < 3; ++a) h += mass * c[static_cast<std::size_t>(a)] * cr[static_cast<std::size_t>(a)];
    }
    return h;
  }
};

}  // namespace

MismatchReport mismatch(const WaveFunction& psi, const ParticleSystem& sys,
                        const std::vector<double>& potential, const ShiftVelocity& shift,
                        double dt, const SolverParams& params) {
  const auto v = resolve_potential(psi.grid, potential);
  MismatchReport rep;
  rep.closed_form = closed_form_mismatch(psi, sys, v, shift, dt);
  if (dt == 0.0) {
    rep.direct = 0.0;
    rep.ratio = 1.0;
    return rep;
  }
  const WaveFunction stepped = step_schrodinger(psi, sys, v, shift, dt, params);
  rep.direct = std::norm(overlap(psi, stepped) - 1.0);
  if (rep.closed_form != 0.0)
    rep.ratio = rep.direct / rep.closed_form;
  else
    rep.ratio = rep.direct == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return rep;
}

BestMatchResult best_match_translation(const WaveFunction& psi, const ParticleSystem& sys,
                                       const std::vector<double>& potential, double probe_dt) {
  sys.require_match(psi.grid);
  const auto v = resolve_potential(psi.grid, potential);
  const int d = psi.grid.spatial_dim();
  const auto p = momentum_expectation(psi, sys);
  const double mass = sys.total_mass();

  BestMatchResult out;
  out.shift = ShiftVelocity::zero(d);
  for (int a = 0; a < d; ++a)
    out.shift.lambda_dot[static_cast<std::size_t>(a)] = p[static_cast<std::size_t>(a)] / mass;
  out.mismatch = closed_form_mismatch(psi, sys, v, out.shift, probe_dt);
  out.method = BmMethod::Analytic;
  return out;
}

BestMatchResult best_match_rotation(const WaveFunction& psi, const ParticleSystem& sys,
                                    const std::vector<double>& potential, double probe_dt,
                                    double center_tol) {
  sys.require_match(psi.grid);
  const int d = psi.grid.spatial_dim();
  if (d < 2) throw DimensionError("rotational best matching needs at least two spatial dimensions");
  const auto v = resolve_potential(psi.grid, potential);

  const auto cm = center_of_mass(psi, sys);
  double cm_norm = 0.0;
  for (double x : cm) cm_norm += x * x;
  cm_norm = std::sqrt(cm_norm);
  if (cm_norm > center_tol)
    throw NotCentered("center of mass is off origin; translate the state first");
  const auto p = momentum_expectation(psi, sys);
  double p_norm = 0.0;
  for (int a = 0; a < d; ++a) p_norm += p[static_cast<std::size_t>(a)] * p[static_cast<std::size_t>(a)];
  p_norm = std::sqrt(p_norm);
  if (p_norm / sys.total_mass() > center_tol)
    throw NotCentered("total momentum is nonzero; boost to the rest frame first");

  const auto inertia = inertia_expectation(psi, sys);
  const auto l = angular_momentum_expectation(psi, sys);

  BestMatchResult out;
  out.shift = ShiftVelocity::zero(d);
  out.method = BmMethod::Analytic;

  if (d == 2) {
    const double izz = inertia[0][0];
    if (izz <= 0.0)
      throw SingularInertia("moment of inertia vanishes; rotation rate undefined");
    out.cond_inertia = 1.0;
    out.shift.zeta_dot[0] = l[0] / izz;
  } else {
    Eigen::Matrix3d m;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        m(a, b) = inertia[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(m);
    const double lmin = eig.eigenvalues().minCoeff();
    const double lmax = eig.eigenvalues().maxCoeff();
    out.cond_inertia =
        lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
    if (!(lmin > 0.0) || out.cond_inertia > 1e8)
      throw SingularInertia("inertia tensor is numerically singular (near-collinear state)");
    const Eigen::Vector3d lv(l[0], l[1], l[2]);
    const Eigen::Vector3d z = eig.eigenvectors() *
                              (eig.eigenvectors().transpose() * lv).cwiseQuotient(eig.eigenvalues());
    for (int a = 0; a < 3; ++a) out.shift.zeta_dot[static_cast<std::size_t>(a)] = z(a);
  }

  out.mismatch = closed_form_mismatch(psi, sys, v, out.shift, probe_dt);
  return out;
}

SearchBox SearchBox::symmetric(int spatial_dim, double radius) {
  const std::size_t rot = spatial_dim == 3 ? 3 : (spatial_dim == 2 ? 1 : 0);
  const std::size_t m = static_cast<std::size_t>(spatial_dim) + rot;
  SearchBox b;
  b.lo.assign(m, -radius);
  b.hi.assign(m, radius);
  return b;
}

BestMatchResult numerical_best_match(const WaveFunction& psi, const ParticleSystem& sys,
                                     const std::vector<double>& potential, double dt,
                                     const SearchBox& box, const SolverParams& params) {
  sys.require_match(psi.grid);
  const auto v = resolve_potential(psi.grid, potential);
  const int d = psi.grid.spatial_dim();
  const std::size_t rot = static_cast<std::size_t>(psi.grid.rotation_dim());
  const std::size_t m = static_cast<std::size_t>(d) + rot;
  if (box.lo.size() != m || box.hi.size() != m)
    throw DimensionError("search box must cover every shift coordinate");
  for (std::size_t j = 0; j < m; ++j)
    if (!(box.lo[j] < box.hi[j]))
      throw ValidationError("search box is empty on coordinate " + std::to_string(j));

  auto make_shift = [&](const std::vector<double>& c) {
    ShiftVelocity s = ShiftVelocity::zero(d);
    for (int a = 0; a < d; ++a) s.lambda_dot[static_cast<std::size_t>(a)] = c[static_cast<std::size_t>(a)];
    for (std::size_t a = 0; a < rot; ++a) s.zeta_dot[a] = c[static_cast<std::size_t>(d) + a];
    return s;
  };

  long evals = 0;
  auto objective = [&](const std::vector<double>& c) {
    ++evals;
    const WaveFunction stepped = step_schrodinger(psi, sys, v, make_shift(c), dt, params);
    return std::norm(overlap(psi, stepped) - 1.0);
  };

  // sign probe for the warning: exact quadratic sampled on a coarse lattice
  const ShiftQuadratic quad(psi, sys, v);
  bool nonconvex = false;
  {
    std::vector<double> c(m, 0.0);
    std::vector<int> idx(m, 0);
    const int knots = 5;
    while (true) {
      for (std::size_t j = 0; j < m; ++j)
        c[j] = box.lo[j] + (box.hi[j] - box.lo[j]) * static_cast<double>(idx[j]) /
                               static_cast<double>(knots - 1);
      if (quad(c) <= 0.0) {
        nonconvex = true;
        break;
      }
      std::size_t j = 0;
      while (j < m && ++idx[j] == knots) idx[j++] = 0;
      if (j == m) break;
    }
  }

  constexpr double kInvPhi = 0.6180339887498949;
  const double line_tol = 1e-7;
  std::vector<double> x(m);
  for (std::size_t j = 0; j < m; ++j) x[j] = 0.5 * (box.lo[j] + box.hi[j]);
  double fx = objective(x);

  for (int sweep = 0; sweep < 60; ++sweep) {
    double move = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      double a = box.lo[j], b = box.hi[j];
      auto line = [&](double t) {
        std::vector<double> c = x;
        c[j] = t;
        return objective(c);
      };
      double c1 = b - kInvPhi * (b - a), c2 = a + kInvPhi * (b - a);
      double f1 = line(c1), f2 = line(c2);
      while (b - a > line_tol) {
        if (f1 < f2) {
          b = c2;
          c2 = c1;
          f2 = f1;
          c1 = b - kInvPhi * (b - a);
          f1 = line(c1);
        } else {
          a = c1;
          c1 = c2;
          f1 = f2;
          c2 = a + kInvPhi * (b - a);
          f2 = line(c2);
        }
      }
      const double xj = f1 < f2 ? c1 : c2;
      const double fj = std::min(f1, f2);
      if (fj < fx) {
        move = std::max(move, std::abs(xj - x[j]));
        x[j] = xj;
        fx = fj;
      }
    }
    if (sweep >= 2 && move < 5e-7) break;
  }

  BestMatchResult out;
  out.shift = make_shift(x);
  out.mismatch = fx;
  out.method = BmMethod::Numerical;
  out.nonconvex_warning = nonconvex;
  out.iterations = evals;
  // conditioning of the inertia block, informational only
  if (d == 2) {
    out.cond_inertia = 1.0;
  } else if (d == 3) {
    const auto inertia = inertia_expectation(psi, sys);
    Eigen::Matrix3d im;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        im(a, b) = inertia[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(im);
    const double lmin = eig.eigenvalues().minCoeff();
    out.cond_inertia = lmin > 0.0 ? eig.eigenvalues().maxCoeff() / lmin
                                  : std::numeric_limits<double>::infinity();
  }
  return out;
}

WaveFunction galilean_boost(const WaveFunction& psi, const ParticleSystem& sys,
                            const std::vector<double>& v) {
  sys.require_match(psi.grid);
  const int d = psi.grid.spatial_dim();
  if (static_cast<int>(v.size()) != d)
    throw DimensionError("boost velocity needs one component per spatial dimension");

  WaveFunction out = psi;
  const GridSpec& grid = out.grid;
  const int D = grid.dim();
  // per-axis phase ramps exp(-(i/hbar) m_A v_a x_A)
  std::vector<std::vector<std::complex<double>>> ramp(static_cast<std::size_t>(D));
  for (int ax = 0; ax < D; ++ax) {
    const double mv = sys.mass_for_axis(grid, ax) *
                      v[static_cast<std::size_t>(grid.component_of_axis(ax))];
    auto& r = ramp[static_cast<std::size_t>(ax)];
    r.resize(static_cast<std::size_t>(grid.points(ax)));
    for (std::int64_t j = 0; j < grid.points(ax); ++j)
      r[static_cast<std::size_t>(j)] = std::polar(1.0, -mv * grid.coord(ax, j) / sys.hbar);
  }
  parallel_for(grid.total_points(), [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i) {
      std::complex<double> f = ramp[0][static_cast<std::size_t>(grid.axis_index(i, 0))];
      for (int ax = 1; ax < D; ++ax)
        f *= ramp[static_cast<std::size_t>(ax)][static_cast<std::size_t>(grid.axis_index(i, ax))];
      out.amp[static_cast<std::size_t>(i)] *= f;
    }
  });
  return out;
}

WaveFunction translate(const WaveFunction& psi, const std::vector<double>& c) {
  const GridSpec& grid = psi.grid;
  const int d = grid.spatial_dim();
  if (static_cast<int>(c.size()) != d)
    throw DimensionError("displacement needs one component per spatial dimension");

  WaveFunction out = psi;
  spectral::forward(grid, out.amp.data());
  const int D = grid.dim();
  std::vector<std::vector<std::complex<double>>> ph(static_cast<std::size_t>(D));
  for (int ax = 0; ax < D; ++ax) {
    const double ca = c[static_cast<std::size_t>(grid.component_of_axis(ax))];
    auto& r = ph[static_cast<std::size_t>(ax)];
    r.resize(static_cast<std::size_t>(grid.points(ax)));
    for (std::int64_t j = 0; j < grid.points(ax); ++j)
      r[static_cast<std::size_t>(j)] = std::polar(1.0, -grid.wavenumber(ax, j) * ca);
  }
  parallel_for(grid.total_points(), [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i) {
      std::complex<double> f = ph[0][static_cast<std::size_t>(grid.axis_index(i, 0))];
      for (int ax = 1; ax < D; ++ax)
        f *= ph[static_cast<std::size_t>(ax)][static_cast<std::size_t>(grid.axis_index(i, ax))];
      out.amp[static_cast<std::size_t>(i)] *= f;
    }
  });
  spectral::inverse(grid, out.amp.data());
  return out;
}

WaveFunction center_state(const WaveFunction& psi, const ParticleSystem& sys) {
  const int d = psi.grid.spatial_dim();
  WaveFunction out = psi;

  auto cm = center_of_mass(out, sys);
  std::vector<double> neg(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) neg[static_cast<std::size_t>(a)] = -cm[static_cast<std::size_t>(a)];
  out = translate(out, neg);

  const auto p = momentum_expectation(out, sys);
  const double mass = sys.total_mass();
  std::vector<double> v(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) v[static_cast<std::size_t>(a)] = p[static_cast<std::size_t>(a)] / mass;
  return galilean_boost(out, sys, v);
}

ConstraintReport constraint_check(const std::vector<ObservableReport>& series,
                                  const ParticleSystem& sys, const ShiftVelocity& shift,
                                  double tolerance) {
  const int d = shift.spatial_dim();
  const double mass = sys.total_mass();
  ConstraintReport rep;
  rep.tolerance = tolerance;

  for (const auto& r : series) {
    double pm = 0.0;
    for (int a = 0; a < d; ++a) {
      const auto s = static_cast<std::size_t>(a);
      const double res = r.momentum[s] - mass * shift.lambda_dot[s];
      pm += res * res;
    }
    rep.max_momentum_residual = std::max(rep.max_momentum_residual, std::sqrt(pm));

    double am = 0.0;
    if (d == 2) {
      const double z = shift.zeta_dot.empty() ? 0.0 : shift.zeta_dot[0];
      const double res = r.angular[0] - r.inertia[0][0] * z;
      am = std::abs(res);
    } else if (d == 3) {
      for (int a = 0; a < 3; ++a) {
        double res = r.angular[static_cast<std::size_t>(a)];
        for (int b = 0; b < 3; ++b)
          res -= r.inertia[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] *
                 shift.zeta_dot[static_cast<std::size_t>(b)];
        am += res * res;
      }
      am = std::sqrt(am);
    }
    rep.max_angular_residual = std::max(rep.max_angular_residual, am);
  }

  rep.momentum_ok = rep.max_momentum_residual < tolerance;
  rep.angular_ok = rep.max_angular_residual < tolerance;
  return rep;
}

}  // namespace edlab
