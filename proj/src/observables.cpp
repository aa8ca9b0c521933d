#include "edlab/observables.hpp"

#include <cmath>

#include "edlab/fft.hpp"
#include "edlab/parallel.hpp"

namespace edlab {

namespace {
constexpr double kNodeFloorRel = 1e-12;
}

HamiltonianOp::HamiltonianOp(const GridSpec& grid, const ParticleSystem& sys,
                             std::vector<double> potential, const ShiftVelocity& shift)
    : grid_(grid), sys_(sys), shift_(shift), w_(std::move(potential)) {
  sys_.require_match(grid_);
  shift_.validate(grid_);
  if (w_.size() != static_cast<std::size_t>(grid_.total_points()))
    throw GridMismatch("potential field size does not match the grid");
  if (!shift_.is_zero()) {
    shift_field_ = shift_field(grid_, shift_);
    // Fold the quadratic shift energy into the scalar part.
    const std::int64_t n = grid_.total_points();
    for (std::int64_t i = 0; i < n; ++i) {
      double q = 0.0;
      for (int ax = 0; ax < grid_.dim(); ++ax) {
        const double xs = shift_field_[static_cast<std::size_t>(ax)][static_cast<std::size_t>(i)];
        q += 0.5 * sys_.mass_for_axis(grid_, ax) * xs * xs;
      }
      w_[static_cast<std::size_t>(i)] += q;
    }
  }
}

cvector HamiltonianOp::apply(const cvector& psi) const {
  const std::int64_t n = grid_.total_points();
  const double hbar = sys_.hbar;

  // Kinetic: single full transform, multiply sum_A hbar^2 k_A^2 / 2 m_A.
  cvector out = psi;
  spectral::forward(grid_, out.data());
  for (std::int64_t i = 0; i < n; ++i) {
    double kin = 0.0;
    for (int ax = 0; ax < grid_.dim(); ++ax) {
      const double k = grid_.wavenumber(ax, grid_.axis_index(i, ax));
      kin += hbar * hbar * k * k / (2.0 * sys_.mass_for_axis(grid_, ax));
    }
    out[static_cast<std::size_t>(i)] *= kin;
  }
  spectral::inverse(grid_, out.data());

  for (std::int64_t i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] += w_[static_cast<std::size_t>(i)] * psi[static_cast<std::size_t>(i)];

  if (!shift_field_.empty()) {
    // Symmetrized gauge coupling: -(1/2) sum_A [xi_A p_A psi + p_A (xi_A psi)].
    for (int ax = 0; ax < grid_.dim(); ++ax) {
      const auto& xi = shift_field_[static_cast<std::size_t>(ax)];
      cvector dpsi = spectral::derivative(grid_, psi, ax);
      cvector xipsi(static_cast<std::size_t>(n));
      for (std::int64_t i = 0; i < n; ++i)
        xipsi[static_cast<std::size_t>(i)] =
            xi[static_cast<std::size_t>(i)] * psi[static_cast<std::size_t>(i)];
      cvector dxipsi = spectral::derivative(grid_, xipsi, ax);
      const std::complex<double> mihbar(0.0, -hbar);  // p = -i hbar d
      for (std::int64_t i = 0; i < n; ++i) {
        const std::complex<double> gauge =
            mihbar * (xi[static_cast<std::size_t>(i)] * dpsi[static_cast<std::size_t>(i)] +
                      dxipsi[static_cast<std::size_t>(i)]);
        out[static_cast<std::size_t>(i)] -= 0.5 * gauge;
      }
    }
  }
  return out;
}

namespace {

// Shared workhorse: one gradient pass feeding every expectation.
struct GradientPass {
  std::vector<cvector> grad;  // d_A psi
  explicit GradientPass(const WaveFunction& psi)
      : grad(spectral::gradient(psi.grid, psi.amp)) {}
};

std::complex<double> axis_momentum(const WaveFunction& psi, const GradientPass& g,
                                   double hbar, int axis) {
  // <psi| -i hbar d_A |psi>
  const std::complex<double> s =
      block_sum_complex(psi.grid.total_points(), [&](std::int64_t i) {
        return std::conj(psi.amp[static_cast<std::size_t>(i)]) *
               g.grad[static_cast<std::size_t>(axis)][static_cast<std::size_t>(i)];
      });
  return std::complex<double>(0.0, -hbar) * s * psi.grid.cell_volume();
}

std::complex<double> weighted_momentum(const WaveFunction& psi, const GradientPass& g,
                                       double hbar, int coord_axis, int deriv_axis) {
  // <psi| x_(coord_axis) (-i hbar d_(deriv_axis)) |psi>
  const GridSpec& grid = psi.grid;
  const std::complex<double> s =
      block_sum_complex(grid.total_points(), [&](std::int64_t i) {
        const double x = grid.coord(coord_axis, grid.axis_index(i, coord_axis));
        return x * std::conj(psi.amp[static_cast<std::size_t>(i)]) *
               g.grad[static_cast<std::size_t>(deriv_axis)][static_cast<std::size_t>(i)];
      });
  return std::complex<double>(0.0, -hbar) * s * grid.cell_volume();
}

}  // namespace

std::array<double, 3> momentum_expectation(const WaveFunction& psi,
                                           const ParticleSystem& sys) {
  sys.require_match(psi.grid);
  GradientPass g(psi);
  std::array<double, 3> P{};
  for (int p = 0; p < psi.grid.particle_count(); ++p)
    for (int a = 0; a < psi.grid.spatial_dim(); ++a)
      P[static_cast<std::size_t>(a)] +=
          axis_momentum(psi, g, sys.hbar, psi.grid.axis_of(p, a)).real();
  return P;
}

std::array<double, 3> angular_momentum_expectation(const WaveFunction& psi,
                                                   const ParticleSystem& sys) {
  sys.require_match(psi.grid);
  const GridSpec& grid = psi.grid;
  const int d = grid.spatial_dim();
  std::array<double, 3> L{};
  if (d < 2) return L;
  GradientPass g(psi);
  for (int p = 0; p < grid.particle_count(); ++p) {
    const int ax_x = grid.axis_of(p, 0);
    const int ax_y = grid.axis_of(p, 1);
    if (d == 2) {
      // L_z = <x p_y - y p_x>
      L[0] += (weighted_momentum(psi, g, sys.hbar, ax_x, ax_y) -
               weighted_momentum(psi, g, sys.hbar, ax_y, ax_x))
                  .real();
    } else {
      const int ax_z = grid.axis_of(p, 2);
      L[0] += (weighted_momentum(psi, g, sys.hbar, ax_y, ax_z) -
               weighted_momentum(psi, g, sys.hbar, ax_z, ax_y))
                  .real();
      L[1] += (weighted_momentum(psi, g, sys.hbar, ax_z, ax_x) -
               weighted_momentum(psi, g, sys.hbar, ax_x, ax_z))
                  .real();
      L[2] += (weighted_momentum(psi, g, sys.hbar, ax_x, ax_y) -
               weighted_momentum(psi, g, sys.hbar, ax_y, ax_x))
                  .real();
    }
  }
  return L;
}

std::array<std::array<double, 3>, 3> inertia_expectation(const WaveFunction& psi,
                                                         const ParticleSystem& sys) {
  sys.require_match(psi.grid);
  const GridSpec& grid = psi.grid;
  const int d = grid.spatial_dim();
  std::array<std::array<double, 3>, 3> I{};
  if (d < 2) return I;

  // Second moments <x_n^a x_n^b> per particle.
  for (int p = 0; p < grid.particle_count(); ++p) {
    double m2[3][3] = {};
    for (int a = 0; a < d; ++a)
      for (int b = a; b < d; ++b) {
        const int ax_a = grid.axis_of(p, a);
        const int ax_b = grid.axis_of(p, b);
        const double s = block_sum(grid.total_points(), [&](std::int64_t i) {
          const double xa = grid.coord(ax_a, grid.axis_index(i, ax_a));
          const double xb = grid.coord(ax_b, grid.axis_index(i, ax_b));
          return std::norm(psi.amp[static_cast<std::size_t>(i)]) * xa * xb;
        });
        m2[a][b] = m2[b][a] = s * grid.cell_volume();
      }
    const double m = sys.mass(p);
    if (d == 2) {
      I[0][0] += m * (m2[0][0] + m2[1][1]);  // I_zz about the origin
    } else {
      const double r2 = m2[0][0] + m2[1][1] + m2[2][2];
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          I[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] +=
              m * ((a == b ? r2 : 0.0) - m2[a][b]);
    }
  }
  return I;
}

double hamiltonian_expectation(const WaveFunction& psi, const ParticleSystem& sys,
                               const std::vector<double>& potential,
                               const ShiftVelocity& shift) {
  return observable_report(psi, sys, potential, shift).energy;
}

ObservableReport observable_report(const WaveFunction& psi, const ParticleSystem& sys,
                                   const std::vector<double>& potential,
                                   const ShiftVelocity& shift) {
  sys.require_match(psi.grid);
  shift.validate(psi.grid);
  const GridSpec& grid = psi.grid;
  if (potential.size() != static_cast<std::size_t>(grid.total_points()))
    throw GridMismatch("potential field size does not match the grid");

  ObservableReport rep;
  rep.t = psi.t;
  rep.norm = norm_squared(psi);

  GradientPass g(psi);
  const double hbar = sys.hbar;
  const int d = grid.spatial_dim();
  double defect = 0.0;

  // Momentum and angular momentum from the same gradients.
  for (int p = 0; p < grid.particle_count(); ++p)
    for (int a = 0; a < d; ++a) {
      const std::complex<double> c = axis_momentum(psi, g, hbar, grid.axis_of(p, a));
      rep.momentum[static_cast<std::size_t>(a)] += c.real();
      defect = std::max(defect, std::abs(c.imag()));
    }
  rep.angular = angular_momentum_expectation(psi, sys);
  rep.inertia = inertia_expectation(psi, sys);

  // Kinetic energy sum_A (hbar^2 / 2 m_A) int |d_A psi|^2 (real by parts).
  double kinetic = 0.0;
  for (int ax = 0; ax < grid.dim(); ++ax) {
    const double s = block_sum(grid.total_points(), [&](std::int64_t i) {
      return std::norm(g.grad[static_cast<std::size_t>(ax)][static_cast<std::size_t>(i)]);
    });
    kinetic += hbar * hbar / (2.0 * sys.mass_for_axis(grid, ax)) * s * grid.cell_volume();
  }

  // Scalar part int (V + sum_n m_n |xi_dot_n|^2 / 2) rho, and the gauge
  // coupling -Re sum_A int xi_A psi* (-i hbar d_A psi).
  double scalar = block_sum(grid.total_points(), [&](std::int64_t i) {
                    return potential[static_cast<std::size_t>(i)] *
                           std::norm(psi.amp[static_cast<std::size_t>(i)]);
                  }) *
                  grid.cell_volume();
  double gauge = 0.0;
  if (!shift.is_zero()) {
    const auto xi = shift_field(grid, shift);
    for (int ax = 0; ax < grid.dim(); ++ax) {
      const std::complex<double> s =
          block_sum_complex(grid.total_points(), [&](std::int64_t i) {
            return xi[static_cast<std::size_t>(ax)][static_cast<std::size_t>(i)] *
                   std::conj(psi.amp[static_cast<std::size_t>(i)]) *
                   g.grad[static_cast<std::size_t>(ax)][static_cast<std::size_t>(i)];
          });
      const std::complex<double> c = std::complex<double>(0.0, -hbar) * s * grid.cell_volume();
      gauge -= c.real();
      defect = std::max(defect, std::abs(c.imag()));
    }
    scalar += block_sum(grid.total_points(), [&](std::int64_t i) {
                double q = 0.0;
                for (int ax = 0; ax < grid.dim(); ++ax) {
                  const double v =
                      xi[static_cast<std::size_t>(ax)][static_cast<std::size_t>(i)];
                  q += 0.5 * sys.mass_for_axis(grid, ax) * v * v;
                }
                return q * std::norm(psi.amp[static_cast<std::size_t>(i)]);
              }) *
              grid.cell_volume();
  }

  rep.energy = kinetic + scalar + gauge;
  rep.hermiticity_defect = defect;
  return rep;
}

std::vector<std::vector<double>> current_velocity(const EpistemicState& state,
                                                  const ParticleSystem& sys,
                                                  const ShiftVelocity& shift) {
  sys.require_match(state.grid);
  shift.validate(state.grid);
  const GridSpec& grid = state.grid;
  const std::int64_t n = grid.total_points();

  double rho_max = 0.0;
  for (double r : state.rho) rho_max = std::max(rho_max, r);
  const double floor = kNodeFloorRel * rho_max;
  for (double r : state.rho)
    if (r < floor) throw NodeError("current velocity undefined at density nodes");

  const WaveFunction psi = epistemic_to_wf(state, sys);
  const auto grad = spectral::gradient(grid, psi.amp);
  const auto xi = shift.is_zero() ? std::vector<std::vector<double>>() : shift_field(grid, shift);

  std::vector<std::vector<double>> v(static_cast<std::size_t>(grid.dim()));
  for (int ax = 0; ax < grid.dim(); ++ax) {
    auto& va = v[static_cast<std::size_t>(ax)];
    va.resize(static_cast<std::size_t>(n));
    const double m = sys.mass_for_axis(grid, ax);
    for (std::int64_t i = 0; i < n; ++i) {
      // d_A phi = hbar Im(psi* d_A psi) / rho; rho from the chart is exact.
      const double num =
          (std::conj(psi.amp[static_cast<std::size_t>(i)]) *
           grad[static_cast<std::size_t>(ax)][static_cast<std::size_t>(i)])
              .imag();
      double val = sys.hbar * num / (state.rho[static_cast<std::size_t>(i)] * m);
      if (!xi.empty()) val -= xi[static_cast<std::size_t>(ax)][static_cast<std::size_t>(i)];
      va[static_cast<std::size_t>(i)] = val;
    }
  }
  return v;
}

}  // namespace edlab
