#pragma once
// Periodic uniform grid over configuration space. A composite axis A = (n, a)
// couples particle n and spatial component a; axis index A = n*d + a. Storage
// is row-major with axis 0 slowest. Coordinates are box-centered: axis i runs
// over -L/2 + j*h for j in [0, n), h = L/n, so the coordinate origin sits on a
// grid point and rotations act about it.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "edlab/errors.hpp"

namespace edlab {

inline constexpr int kMaxConfigDim = 4;
inline constexpr std::int64_t kMinPointsPerAxis = 8;

class GridSpec {
 public:
  GridSpec() = default;

  GridSpec(int spatial_dim, int particle_count, std::vector<std::int64_t> points,
           std::vector<double> lengths)
      : spatial_dim_(spatial_dim),
        particle_count_(particle_count),
        points_(std::move(points)),
        lengths_(std::move(lengths)) {
    validate();
    init_strides();
  }

  // Same point count and length on every configuration axis.
  static GridSpec uniform(int spatial_dim, int particle_count,
                          std::int64_t points_per_axis, double length) {
    const int dd = spatial_dim * particle_count;
    return GridSpec(spatial_dim, particle_count,
                    std::vector<std::int64_t>(static_cast<std::size_t>(dd > 0 ? dd : 0),
                                              points_per_axis),
                    std::vector<double>(static_cast<std::size_t>(dd > 0 ? dd : 0), length));
  }

  int spatial_dim() const { return spatial_dim_; }
  int particle_count() const { return particle_count_; }
  int dim() const { return spatial_dim_ * particle_count_; }  // D = N*d

  // Rotation sector dimension: 0 (d=1), 1 (d=2, z only), 3 (d=3).
  int rotation_dim() const {
    return spatial_dim_ == 3 ? 3 : (spatial_dim_ == 2 ? 1 : 0);
  }

  std::int64_t points(int axis) const { return points_[static_cast<std::size_t>(axis)]; }
  double length(int axis) const { return lengths_[static_cast<std::size_t>(axis)]; }
  double spacing(int axis) const {
    return lengths_[static_cast<std::size_t>(axis)] /
           static_cast<double>(points_[static_cast<std::size_t>(axis)]);
  }
  const std::vector<std::int64_t>& points() const { return points_; }
  const std::vector<double>& lengths() const { return lengths_; }

  std::int64_t total_points() const { return total_; }

  // Quadrature weight h^D of the Riemann sum.
  double cell_volume() const { return cell_volume_; }

  int particle_of_axis(int axis) const { return axis / spatial_dim_; }
  int component_of_axis(int axis) const { return axis % spatial_dim_; }
  int axis_of(int particle, int component) const {
    return particle * spatial_dim_ + component;
  }

  double coord(int axis, std::int64_t index) const {
    return -0.5 * length(axis) + spacing(axis) * static_cast<double>(index);
  }

  // Signed wavenumber 2*pi*s/L with s in [-n/2, n/2); the Nyquist index n/2
  // maps to s = -n/2 (its sign is a convention; only k^2 uses it).
  double wavenumber(int axis, std::int64_t index) const {
    const std::int64_t n = points(axis);
    const std::int64_t s = index <= (n - 1) / 2 ? index : index - n;
    return 2.0 * std::numbers::pi * static_cast<double>(s) / length(axis);
  }

  // First-derivative multiplier: like wavenumber but the (even-n) Nyquist mode
  // is dropped so that derivatives of real fields stay real.
  double wavenumber_deriv(int axis, std::int64_t index) const {
    const std::int64_t n = points(axis);
    if (n % 2 == 0 && index == n / 2) return 0.0;
    return wavenumber(axis, index);
  }

  std::int64_t stride(int axis) const { return strides_[static_cast<std::size_t>(axis)]; }

  std::int64_t flat_index(const std::vector<std::int64_t>& idx) const {
    std::int64_t f = 0;
    for (int ax = 0; ax < dim(); ++ax) f += idx[static_cast<std::size_t>(ax)] * stride(ax);
    return f;
  }

  void unflatten(std::int64_t flat, std::vector<std::int64_t>& idx) const {
    idx.resize(static_cast<std::size_t>(dim()));
    for (int ax = 0; ax < dim(); ++ax) {
      idx[static_cast<std::size_t>(ax)] = flat / stride(ax);
      flat %= stride(ax);
    }
  }

  std::int64_t axis_index(std::int64_t flat, int axis) const {
    return (flat / stride(axis)) % points(axis);
  }

  // Displacement x - y wrapped to [-L/2, L/2) on the given axis.
  double min_image(int axis, double dx) const {
    const double L = length(axis);
    dx -= L * std::floor(dx / L + 0.5);
    return dx;
  }

  bool same_shape(const GridSpec& o) const {
    return spatial_dim_ == o.spatial_dim_ && particle_count_ == o.particle_count_ &&
           points_ == o.points_ && lengths_ == o.lengths_;
  }

 private:
  void validate() const {
    if (spatial_dim_ < 1 || spatial_dim_ > 3)
      throw DimensionError("spatial dimension must be 1, 2, or 3");
    if (particle_count_ < 1)
      throw DimensionError("particle count must be >= 1");
    const int dd = spatial_dim_ * particle_count_;
    if (dd > kMaxConfigDim)
      throw DimensionError("configuration dimension N*d = " + std::to_string(dd) +
                           " exceeds the supported maximum " +
                           std::to_string(kMaxConfigDim));
    if (points_.size() != static_cast<std::size_t>(dd) ||
        lengths_.size() != static_cast<std::size_t>(dd))
      throw DimensionError("points/lengths arrays must have one entry per configuration axis");
    for (std::int64_t n : points_)
      if (n < kMinPointsPerAxis)
        throw DimensionError("points per axis must be >= " +
                             std::to_string(kMinPointsPerAxis));
    for (double L : lengths_)
      if (!(L > 0.0)) throw DimensionError("axis length must be positive");
  }

  void init_strides() {
    const int dd = dim();
    strides_.assign(static_cast<std::size_t>(dd), 1);
    for (int ax = dd - 2; ax >= 0; --ax)
      strides_[static_cast<std::size_t>(ax)] =
          strides_[static_cast<std::size_t>(ax + 1)] * points_[static_cast<std::size_t>(ax + 1)];
    total_ = strides_.empty() ? 0 : strides_[0] * points_[0];
    cell_volume_ = 1.0;
    for (int ax = 0; ax < dd; ++ax) cell_volume_ *= spacing(ax);
  }

  int spatial_dim_ = 1;
  int particle_count_ = 1;
  std::vector<std::int64_t> points_;
  std::vector<double> lengths_;
  std::vector<std::int64_t> strides_;
  std::int64_t total_ = 0;
  double cell_volume_ = 1.0;
};

}  // namespace edlab
