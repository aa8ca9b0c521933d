#include "edlab/geometry.hpp"

#include <cmath>

#include "edlab/parallel.hpp"

namespace edlab {

namespace {

void require_quantum_locus(const ParticleSystem& sys) {
  if (sys.eta != sys.hbar)
    throw EtaHbarMismatch(
        "geometry checks are defined on the eta == hbar locus only (eta = " +
        std::to_string(sys.eta) + ", hbar = " + std::to_string(sys.hbar) + ")");
}

void require_compatible(const TangentVector& v, const TangentVector& u) {
  if (v.chart != u.chart) throw ChartMismatch("tangent vectors live in different charts");
  if (!v.base.grid.same_shape(u.base.grid))
    throw GridMismatch("tangent vectors live on different grids");
}

std::size_t checked_size(const TangentVector& v) {
  return static_cast<std::size_t>(v.base.grid.total_points());
}

}  // namespace

TangentVector make_tangent_rho_phi(EpistemicState base, std::vector<double> drho,
                                   std::vector<double> dphi) {
  const auto n = static_cast<std::size_t>(base.grid.total_points());
  if (drho.size() != n || dphi.size() != n)
    throw GridMismatch("tangent components must match the grid");
  TangentVector v;
  v.chart = Chart::RhoPhi;
  v.base = std::move(base);
  v.drho = std::move(drho);
  v.dphi = std::move(dphi);
  return v;
}

TangentVector make_tangent_psi(EpistemicState base,
                               std::vector<std::complex<double>> dpsi, double hbar) {
  const auto n = static_cast<std::size_t>(base.grid.total_points());
  if (dpsi.size() != n) throw GridMismatch("tangent components must match the grid");
  TangentVector v;
  v.chart = Chart::Psi;
  v.base = std::move(base);
  v.dpsi2.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    v.dpsi2[i] = std::complex<double>(0.0, hbar) * std::conj(dpsi[i]);
  v.dpsi = std::move(dpsi);
  return v;
}

void project_to_simplex(TangentVector& v) {
  if (v.chart != Chart::RhoPhi)
    throw ChartMismatch("simplex projection acts on (rho, phi) components");
  const double excess = integrate(v.base.grid, v.drho);
  const auto n = checked_size(v);
  for (std::size_t i = 0; i < n; ++i) v.drho[i] -= excess * v.base.rho[i];
}

TangentVector to_psi_chart(const TangentVector& v, const ParticleSystem& sys) {
  if (v.chart == Chart::Psi) return v;
  const auto n = checked_size(v);
  std::vector<std::complex<double>> dpsi(n);
  const double hbar = sys.hbar;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = v.base.rho[i];
    if (!(r > 0.0)) throw NodeError("chart transform undefined at density nodes");
    const double sq = std::sqrt(r);
    const std::complex<double> body(v.drho[i] / (2.0 * sq), sq * v.dphi[i] / hbar);
    dpsi[i] = body * std::polar(1.0, v.base.phi[i] / hbar);
  }
  return make_tangent_psi(v.base, std::move(dpsi), hbar);
}

TangentVector to_rho_phi_chart(const TangentVector& v, const ParticleSystem& sys) {
  if (v.chart == Chart::RhoPhi) return v;
  const auto n = checked_size(v);
  std::vector<double> drho(n), dphi(n);
  const double hbar = sys.hbar;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = v.base.rho[i];
    if (!(r > 0.0)) throw NodeError("chart transform undefined at density nodes");
    const double sq = std::sqrt(r);
    const std::complex<double> body =
        v.dpsi[i] * std::polar(1.0, -v.base.phi[i] / hbar);
    drho[i] = 2.0 * sq * body.real();
    dphi[i] = hbar * body.imag() / sq;
  }
  return make_tangent_rho_phi(v.base, std::move(drho), std::move(dphi));
}

double symplectic_eval(const TangentVector& v, const TangentVector& u,
                       const ParticleSystem& /*sys*/) {
  require_compatible(v, u);
  const GridSpec& grid = v.base.grid;
  if (v.chart == Chart::RhoPhi) {
    const double s = block_sum(grid.total_points(), [&](std::int64_t i) {
      const auto j = static_cast<std::size_t>(i);
      return v.drho[j] * u.dphi[j] - v.dphi[j] * u.drho[j];
    });
    return s * grid.cell_volume();
  }
  // Omega(V,U) = int (V^1 U^2 - V^2 U^1); with U^2 = i hbar conj(u.dpsi) this
  // is 2 hbar Im int conj(v.dpsi) u.dpsi.
  const std::complex<double> s =
      block_sum_complex(grid.total_points(), [&](std::int64_t i) {
        const auto j = static_cast<std::size_t>(i);
        return v.dpsi[j] * u.dpsi2[j] - v.dpsi2[j] * u.dpsi[j];
      });
  return (s * grid.cell_volume()).real();
}

double metric_eval(const TangentVector& v, const TangentVector& u,
                   const ParticleSystem& sys) {
  require_quantum_locus(sys);
  require_compatible(v, u);
  const GridSpec& grid = v.base.grid;
  const double hbar = sys.hbar;
  if (v.chart == Chart::RhoPhi) {
    const double s = block_sum(grid.total_points(), [&](std::int64_t i) {
      const auto j = static_cast<std::size_t>(i);
      const double r = v.base.rho[j];
      return hbar / (2.0 * r) * v.drho[j] * u.drho[j] +
             2.0 * r / hbar * v.dphi[j] * u.dphi[j];
    });
    return s * grid.cell_volume();
  }
  // G(V,U) = -i int (V^1 U^2 + V^2 U^1) = 2 hbar Re int conj(v.dpsi) u.dpsi.
  const std::complex<double> s =
      block_sum_complex(grid.total_points(), [&](std::int64_t i) {
        const auto j = static_cast<std::size_t>(i);
        return v.dpsi[j] * u.dpsi2[j] + v.dpsi2[j] * u.dpsi[j];
      });
  return (std::complex<double>(0.0, -1.0) * s * grid.cell_volume()).real();
}

TangentVector complex_structure_apply(const TangentVector& v, const ParticleSystem& sys) {
  require_quantum_locus(sys);
  const auto n = checked_size(v);
  if (v.chart == Chart::Psi) {
    std::vector<std::complex<double>> dpsi(n);
    for (std::size_t i = 0; i < n; ++i)
      dpsi[i] = std::complex<double>(0.0, 1.0) * v.dpsi[i];
    return make_tangent_psi(v.base, std::move(dpsi), sys.hbar);
  }
  std::vector<double> drho(n), dphi(n);
  const double hbar = sys.hbar;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = v.base.rho[i];
    if (!(r > 0.0)) throw NodeError("complex structure undefined at density nodes");
    drho[i] = -(2.0 * r / hbar) * v.dphi[i];
    dphi[i] = (hbar / (2.0 * r)) * v.drho[i];
  }
  return make_tangent_rho_phi(v.base, std::move(drho), std::move(dphi));
}

double complex_structure_fiber_defect(const EpistemicState& base,
                                      const ParticleSystem& sys) {
  require_quantum_locus(sys);
  const double hbar = sys.hbar;
  double worst = 0.0;
  for (double r : base.rho) {
    if (!(r > 0.0)) throw NodeError("fiber check undefined at density nodes");
    // G = diag(hbar/2rho, 2rho/hbar), Omega = [[0,1],[-1,0]],
    // J = [[0, -2rho/hbar], [hbar/2rho, 0]]; check J + G^{-1} Omega = 0.
    const double g1 = hbar / (2.0 * r), g2 = 2.0 * r / hbar;
    const double j01 = -2.0 * r / hbar, j10 = hbar / (2.0 * r);
    const double d01 = j01 + (1.0 / g1) * 1.0;   // (G^{-1} Omega)_{01} = 1/g1
    const double d10 = j10 + (1.0 / g2) * -1.0;  // (G^{-1} Omega)_{10} = -1/g2
    worst = std::max({worst, std::abs(d01), std::abs(d10)});
  }
  return worst;
}

std::complex<double> inner_product(const WaveFunction& a, const WaveFunction& b,
                                   const ParticleSystem& sys, bool verify) {
  const std::complex<double> direct = overlap(a, b);
  if (!verify) return direct;
  require_quantum_locus(sys);

  const GridSpec& grid = a.grid;
  const double hbar = sys.hbar;
  // Pairs Psi = (psi_a, i hbar psi_a*) and X = (psi_b, i hbar psi_b*).
  const std::complex<double> ihbar(0.0, hbar);
  std::complex<double> Gsum =
      block_sum_complex(grid.total_points(), [&](std::int64_t i) {
        const auto j = static_cast<std::size_t>(i);
        const std::complex<double> p1 = a.amp[j], x1 = b.amp[j];
        const std::complex<double> p2 = ihbar * std::conj(a.amp[j]);
        const std::complex<double> x2 = ihbar * std::conj(b.amp[j]);
        return p1 * x2 + p2 * x1;
      });
  std::complex<double> Osum =
      block_sum_complex(grid.total_points(), [&](std::int64_t i) {
        const auto j = static_cast<std::size_t>(i);
        const std::complex<double> p1 = a.amp[j], x1 = b.amp[j];
        const std::complex<double> p2 = ihbar * std::conj(a.amp[j]);
        const std::complex<double> x2 = ihbar * std::conj(b.amp[j]);
        return p1 * x2 - p2 * x1;
      });
  const std::complex<double> G = std::complex<double>(0.0, -1.0) * Gsum * grid.cell_volume();
  const std::complex<double> Omega = Osum * grid.cell_volume();
  const std::complex<double> assembled =
      (G + std::complex<double>(0.0, 1.0) * Omega) / (2.0 * hbar);
  if (std::abs(assembled - direct) > 1e-12)
    throw IdentityViolation("inner-product assembly identity violated: |delta| = " +
                            std::to_string(std::abs(assembled - direct)));
  return direct;
}

}  // namespace edlab
