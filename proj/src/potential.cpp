#include "edlab/potential.hpp"

#include <cmath>

#include "edlab/parallel.hpp"

namespace edlab {

std::string family_name(PotentialFamily f) {
  switch (f) {
    case PotentialFamily::Free: return "free";
    case PotentialFamily::PairSpring: return "pair-spring";
    case PotentialFamily::PairGaussian: return "pair-gaussian";
    case PotentialFamily::ExternalHarmonic: return "external-harmonic";
  }
  return "?";
}

std::vector<double> potential_grid(const GridSpec& grid, const ParticleSystem& sys,
                                   const PotentialSpec& spec) {
  sys.require_match(grid);
  spec.validate();
  const std::int64_t n = grid.total_points();
  const int d = grid.spatial_dim();
  const int N = grid.particle_count();
  std::vector<double> V(static_cast<std::size_t>(n), 0.0);
  if (spec.family == PotentialFamily::Free) return V;
  // Pair families vanish identically for a single particle; such runs are
  // still relational (free sector).
  if ((spec.family == PotentialFamily::PairSpring ||
       spec.family == PotentialFamily::PairGaussian) &&
      N < 2)
    return V;

  parallel_for(n, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i) {
      double v = 0.0;
      switch (spec.family) {
        case PotentialFamily::ExternalHarmonic: {
          for (int p = 0; p < N; ++p) {
            double r2 = 0.0;
            for (int a = 0; a < d; ++a) {
              const int ax = grid.axis_of(p, a);
              const double x = grid.coord(ax, grid.axis_index(i, ax));
              r2 += x * x;
            }
            v += 0.5 * sys.mass(p) * spec.trap_omega * spec.trap_omega * r2;
          }
          break;
        }
        case PotentialFamily::PairSpring:
        case PotentialFamily::PairGaussian: {
          for (int p = 0; p < N; ++p) {
            for (int q = p + 1; q < N; ++q) {
              double r2 = 0.0;
              for (int a = 0; a < d; ++a) {
                const int axp = grid.axis_of(p, a);
                const int axq = grid.axis_of(q, a);
                const double dx = grid.min_image(
                    axp, grid.coord(axp, grid.axis_index(i, axp)) -
                             grid.coord(axq, grid.axis_index(i, axq)));
                r2 += dx * dx;
              }
              if (spec.family == PotentialFamily::PairSpring)
                v += 0.5 * spec.spring_k * r2;
              else
                v -= spec.well_depth *
                     std::exp(-r2 / (2.0 * spec.well_width * spec.well_width));
            }
          }
          break;
        }
        case PotentialFamily::Free: break;
      }
      V[static_cast<std::size_t>(i)] = v;
    }
  });
  return V;
}

}  // namespace edlab
