#include "edlab/shift.hpp"

#include "edlab/parallel.hpp"

namespace edlab {

std::vector<std::vector<double>> shift_field(const GridSpec& grid,
                                             const ShiftVelocity& shift) {
  shift.validate(grid);
  const int dd = grid.dim();
  const int d = grid.spatial_dim();
  const std::int64_t n = grid.total_points();
  std::vector<std::vector<double>> field(static_cast<std::size_t>(dd));
  for (auto& f : field) f.resize(static_cast<std::size_t>(n));

  parallel_for(n, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i) {
      for (int p = 0; p < grid.particle_count(); ++p) {
        std::array<double, 3> x{0.0, 0.0, 0.0};
        for (int a = 0; a < d; ++a) {
          const int ax = grid.axis_of(p, a);
          x[static_cast<std::size_t>(a)] = grid.coord(ax, grid.axis_index(i, ax));
        }
        const std::array<double, 3> v = shift.at(x);
        for (int a = 0; a < d; ++a)
          field[static_cast<std::size_t>(grid.axis_of(p, a))][static_cast<std::size_t>(i)] =
              v[static_cast<std::size_t>(a)];
      }
    }
  });
  return field;
}

}  // namespace edlab
