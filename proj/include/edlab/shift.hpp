#pragma once
// Best-matching shift velocity. The generated field on particle n is rigid:
//   xi_dot_n^a(x_n) = eps^{abc} zeta_dot_b x_nc + lambda_dot^a,
// the same (lambda_dot, zeta_dot) for every particle. In d=2 the rotation
// sector is the single z component; in d=1 it is absent. Rotations act about
// the coordinate origin (the box center), using the plain box coordinate, so
// the rotation term is not periodic-compatible; callers guard edge density.

#include <array>
#include <vector>

#include "edlab/errors.hpp"
#include "edlab/grid.hpp"

namespace edlab {

struct ShiftVelocity {
  std::vector<double> lambda_dot;  // size d
  std::vector<double> zeta_dot;    // size rotation_dim(d): 0, 1, or 3

  static ShiftVelocity zero(int spatial_dim) {
    ShiftVelocity s;
    s.lambda_dot.assign(static_cast<std::size_t>(spatial_dim), 0.0);
    s.zeta_dot.assign(spatial_dim == 3 ? 3 : (spatial_dim == 2 ? 1 : 0), 0.0);
    return s;
  }

  int spatial_dim() const { return static_cast<int>(lambda_dot.size()); }

  bool has_rotation() const {
    for (double z : zeta_dot)
      if (z != 0.0) return true;
    return false;
  }

  bool is_zero() const {
    for (double v : lambda_dot)
      if (v != 0.0) return false;
    return !has_rotation();
  }

  void validate(const GridSpec& grid) const {
    const int d = grid.spatial_dim();
    if (static_cast<int>(lambda_dot.size()) != d)
      throw DimensionError("lambda_dot must have one component per spatial dimension");
    const std::size_t want = d == 3 ? 3 : (d == 2 ? 1 : 0);
    if (zeta_dot.size() != want)
      throw DimensionError(d == 1
                               ? "zeta_dot is meaningless in one spatial dimension"
                               : "zeta_dot has the wrong number of components");
  }

  // Velocity of the shift field at spatial position x (one particle's block):
  // lambda_dot + zeta_dot x x, with the d=2 case embedded as the z rotation.
  std::array<double, 3> at(const std::array<double, 3>& x) const {
    std::array<double, 3> v{0.0, 0.0, 0.0};
    const int d = spatial_dim();
    for (int a = 0; a < d; ++a) v[static_cast<std::size_t>(a)] = lambda_dot[static_cast<std::size_t>(a)];
    if (d == 2 && !zeta_dot.empty()) {
      const double z = zeta_dot[0];
      v[0] += -z * x[1];
      v[1] += z * x[0];
    } else if (d == 3 && zeta_dot.size() == 3) {
      v[0] += zeta_dot[1] * x[2] - zeta_dot[2] * x[1];
      v[1] += zeta_dot[2] * x[0] - zeta_dot[0] * x[2];
      v[2] += zeta_dot[0] * x[1] - zeta_dot[1] * x[0];
    }
    return v;
  }

  // Spatial Jacobian d(xi_dot^a)/d(x^b); constant because the field is rigid.
  std::array<std::array<double, 3>, 3> jacobian() const {
    std::array<std::array<double, 3>, 3> J{};
    if (spatial_dim() == 2 && !zeta_dot.empty()) {
      J[0][1] = -zeta_dot[0];
      J[1][0] = zeta_dot[0];
    } else if (spatial_dim() == 3 && zeta_dot.size() == 3) {
      J[0][1] = -zeta_dot[2];
      J[1][0] = zeta_dot[2];
      J[0][2] = zeta_dot[1];
      J[2][0] = -zeta_dot[1];
      J[1][2] = -zeta_dot[0];
      J[2][1] = zeta_dot[0];
    }
    return J;
  }
};

// Shift field evaluated on the grid, one real field per configuration axis.
std::vector<std::vector<double>> shift_field(const GridSpec& grid,
                                             const ShiftVelocity& shift);

}  // namespace edlab
