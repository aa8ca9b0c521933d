#include "edlab/state.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "edlab/parallel.hpp"

namespace edlab {

namespace {
constexpr double kNodeFloorRel = 1e-10;   // nodeless precondition
constexpr double kEdgeLeakRel = 1e-10;    // factory boundary guard
constexpr double kWidthFactor = 4.0;      // sigma >= 4h

void require_same_grid(const GridSpec& a, const GridSpec& b) {
  if (!a.same_shape(b)) throw GridMismatch("states live on different grids");
}
}  // namespace

double integrate(const GridSpec& grid, const std::vector<double>& f) {
  const double s = block_sum(grid.total_points(),
                             [&](std::int64_t i) { return f[static_cast<std::size_t>(i)]; });
  return s * grid.cell_volume();
}

double norm_squared(const WaveFunction& psi) {
  const double s = block_sum(psi.grid.total_points(), [&](std::int64_t i) {
    return std::norm(psi.amp[static_cast<std::size_t>(i)]);
  });
  return s * psi.grid.cell_volume();
}

std::complex<double> overlap(const WaveFunction& a, const WaveFunction& b) {
  require_same_grid(a.grid, b.grid);
  const std::complex<double> s =
      block_sum_complex(a.grid.total_points(), [&](std::int64_t i) {
        return std::conj(a.amp[static_cast<std::size_t>(i)]) *
               b.amp[static_cast<std::size_t>(i)];
      });
  return s * a.grid.cell_volume();
}

double infidelity(const WaveFunction& a, const WaveFunction& b) {
  const std::complex<double> ov = overlap(a, b);
  return 1.0 - std::norm(ov);
}

double state_distance(const WaveFunction& a, const WaveFunction& b) {
  require_same_grid(a.grid, b.grid);
  const double s = block_sum(a.grid.total_points(), [&](std::int64_t i) {
    return std::norm(a.amp[static_cast<std::size_t>(i)] -
                     b.amp[static_cast<std::size_t>(i)]);
  });
  return std::sqrt(s * a.grid.cell_volume());
}

void normalize(WaveFunction& psi) {
  const double n2 = norm_squared(psi);
  if (!(n2 > 0.0)) throw NodeError("cannot normalize a zero state");
  const double inv = 1.0 / std::sqrt(n2);
  for (auto& v : psi.amp) v *= inv;
}

bool all_finite(const WaveFunction& psi) {
  for (const auto& v : psi.amp)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

double min_relative_density(const WaveFunction& psi) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& v : psi.amp) {
    const double d = std::norm(v);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return hi > 0.0 ? lo / hi : 0.0;
}

EpistemicState wf_to_epistemic(const WaveFunction& psi, const ParticleSystem& sys) {
  sys.require_match(psi.grid);
  if (min_relative_density(psi) <= kNodeFloorRel)
    throw NodeError("state has (near-)nodes; the (rho, phi) chart is singular there");

  const GridSpec& grid = psi.grid;
  const std::int64_t n = grid.total_points();
  EpistemicState out;
  out.grid = grid;
  out.t = psi.t;
  out.rho.resize(static_cast<std::size_t>(n));
  out.phi.resize(static_cast<std::size_t>(n));

  for (std::int64_t i = 0; i < n; ++i)
    out.rho[static_cast<std::size_t>(i)] = std::norm(psi.amp[static_cast<std::size_t>(i)]);

  // Deterministic unwrap: sweep flat indices in row-major order; reference each
  // point to its predecessor along the last axis that has one, and remove the
  // 2*pi jump relative to that reference.
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::int64_t i = 0; i < n; ++i) {
    const double raw = std::arg(psi.amp[static_cast<std::size_t>(i)]);
    double theta = raw;
    if (i > 0) {
      std::int64_t ref = i - 1;
      for (int ax = grid.dim() - 1; ax >= 0; --ax) {
        if (grid.axis_index(i, ax) > 0) {
          ref = i - grid.stride(ax);
          break;
        }
      }
      const double prev = out.phi[static_cast<std::size_t>(ref)];  // theta units for now
      theta = raw + two_pi * std::round((prev - raw) / two_pi);
    }
    out.phi[static_cast<std::size_t>(i)] = theta;
  }

  // Pin the global sheet: phi(origin index) in [-pi*hbar, pi*hbar).
  double base = out.phi[0];
  base -= two_pi * std::round(base / two_pi);
  if (base >= std::numbers::pi) base -= two_pi;  // arg() returns (-pi, pi], round keeps it
  const double shift = out.phi[0] - base;
  for (auto& p : out.phi) p = (p - shift) * sys.hbar;
  return out;
}

WaveFunction epistemic_to_wf(const EpistemicState& s, const ParticleSystem& sys) {
  sys.require_match(s.grid);
  WaveFunction psi;
  psi.grid = s.grid;
  psi.t = s.t;
  const std::int64_t n = s.grid.total_points();
  psi.amp.resize(static_cast<std::size_t>(n));
  const double inv_hbar = 1.0 / sys.hbar;
  for (std::int64_t i = 0; i < n; ++i) {
    const double r = s.rho[static_cast<std::size_t>(i)];
    if (!(r >= 0.0)) throw NodeError("rho must be nonnegative");
    psi.amp[static_cast<std::size_t>(i)] =
        std::polar(std::sqrt(r), s.phi[static_cast<std::size_t>(i)] * inv_hbar);
  }
  return psi;
}

WaveFunction gaussian_packet(const GridSpec& grid, const GaussianSpec& spec) {
  const int dd = grid.dim();
  if (spec.centers.size() != static_cast<std::size_t>(dd) ||
      spec.widths.size() != static_cast<std::size_t>(dd) ||
      spec.wavevectors.size() != static_cast<std::size_t>(dd))
    throw DimensionError("gaussian spec needs one center/width/wavevector per axis");

  for (int ax = 0; ax < dd; ++ax) {
    const double sigma = spec.widths[static_cast<std::size_t>(ax)];
    const double h = grid.spacing(ax);
    if (!(sigma >= kWidthFactor * h))
      throw UnresolvableWidth("packet width " + std::to_string(sigma) + " on axis " +
                              std::to_string(ax) + " is below the resolvable minimum 4h = " +
                              std::to_string(kWidthFactor * h));
  }

  WaveFunction psi;
  psi.grid = grid;
  const std::int64_t n = grid.total_points();
  psi.amp.resize(static_cast<std::size_t>(n));

  parallel_for(n, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i) {
      double expo = 0.0, phase = 0.0;
      for (int ax = 0; ax < dd; ++ax) {
        const double x = grid.coord(ax, grid.axis_index(i, ax));
        const double dx = grid.min_image(ax, x - spec.centers[static_cast<std::size_t>(ax)]);
        const double sigma = spec.widths[static_cast<std::size_t>(ax)];
        expo -= dx * dx / (4.0 * sigma * sigma);
        phase += spec.wavevectors[static_cast<std::size_t>(ax)] * x;
      }
      psi.amp[static_cast<std::size_t>(i)] = std::polar(std::exp(expo), phase);
    }
  });
  normalize(psi);

  // Periodic-image guard: relative density within two cells of any box edge.
  double max_density = 0.0, edge_density = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double d = std::norm(psi.amp[static_cast<std::size_t>(i)]);
    max_density = std::max(max_density, d);
    bool edge = false;
    for (int ax = 0; ax < dd; ++ax) {
      const std::int64_t j = grid.axis_index(i, ax);
      const std::int64_t np = grid.points(ax);
      if (j < 2 || j >= np - 2) {
        edge = true;
        break;
      }
    }
    if (edge) edge_density = std::max(edge_density, d);
  }
  if (edge_density > kEdgeLeakRel * max_density) {
    char rel[32];
    std::snprintf(rel, sizeof rel, "%.3e", edge_density / max_density);
    throw BoundaryLeak(std::string("packet density at the box edge is ") + rel +
                       " of the peak; periodic images would contaminate the state");
  }
  return psi;
}

WaveFunction plane_wave(const GridSpec& grid, const std::vector<std::int64_t>& mode) {
  if (mode.size() != static_cast<std::size_t>(grid.dim()))
    throw DimensionError("plane wave needs one mode integer per axis");
  WaveFunction psi;
  psi.grid = grid;
  const std::int64_t n = grid.total_points();
  psi.amp.resize(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    double phase = 0.0;
    for (int ax = 0; ax < grid.dim(); ++ax) {
      const double k = 2.0 * std::numbers::pi *
                       static_cast<double>(mode[static_cast<std::size_t>(ax)]) /
                       grid.length(ax);
      phase += k * grid.coord(ax, grid.axis_index(i, ax));
    }
    psi.amp[static_cast<std::size_t>(i)] = std::polar(1.0, phase);
  }
  normalize(psi);
  return psi;
}

double position_expectation(const WaveFunction& psi, int axis) {
  const GridSpec& grid = psi.grid;
  const double s = block_sum(grid.total_points(), [&](std::int64_t i) {
    return std::norm(psi.amp[static_cast<std::size_t>(i)]) *
           grid.coord(axis, grid.axis_index(i, axis));
  });
  return s * grid.cell_volume();
}

double position_second_moment(const WaveFunction& psi, int axis) {
  const GridSpec& grid = psi.grid;
  const double s = block_sum(grid.total_points(), [&](std::int64_t i) {
    const double x = grid.coord(axis, grid.axis_index(i, axis));
    return std::norm(psi.amp[static_cast<std::size_t>(i)]) * x * x;
  });
  return s * grid.cell_volume();
}

std::vector<double> center_of_mass(const WaveFunction& psi, const ParticleSystem& sys) {
  sys.require_match(psi.grid);
  const GridSpec& grid = psi.grid;
  std::vector<double> cm(static_cast<std::size_t>(grid.spatial_dim()), 0.0);
  const double M = sys.total_mass();
  for (int nidx = 0; nidx < grid.particle_count(); ++nidx)
    for (int a = 0; a < grid.spatial_dim(); ++a)
      cm[static_cast<std::size_t>(a)] +=
          sys.mass(nidx) * position_expectation(psi, grid.axis_of(nidx, a)) / M;
  return cm;
}

}  // namespace edlab
