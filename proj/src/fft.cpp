#include "edlab/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace edlab::spectral {

namespace {

// Key: per-axis point counts, transform axis (-1 = full rank), FFTW sign.
using PlanKey = std::tuple<std::vector<std::int64_t>, int, int>;

std::mutex g_plan_mutex;
std::map<PlanKey, fftw_plan> g_plans;

fftw_complex* as_fftw(std::complex<double>* p) {
  return reinterpret_cast<fftw_complex*>(p);
}

fftw_plan plan_for(const GridSpec& grid, int axis, int sign) {
  PlanKey key{grid.points(), axis, sign};
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  auto it = g_plans.find(key);
  if (it != g_plans.end()) return it->second;

  // Plan on a scratch buffer; FFTW_UNALIGNED permits new-array execution on
  // arbitrary storage later.
  std::vector<std::complex<double>> scratch(static_cast<std::size_t>(grid.total_points()));
  fftw_plan plan = nullptr;
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;

  if (axis < 0) {
    std::vector<int> dims(static_cast<std::size_t>(grid.dim()));
    for (int ax = 0; ax < grid.dim(); ++ax) dims[static_cast<std::size_t>(ax)] =
        static_cast<int>(grid.points(ax));
    plan = fftw_plan_dft(grid.dim(), dims.data(), as_fftw(scratch.data()),
                         as_fftw(scratch.data()), sign, flags);
  } else {
    fftw_iodim64 dim;
    dim.n = grid.points(axis);
    dim.is = grid.stride(axis);
    dim.os = grid.stride(axis);
    std::vector<fftw_iodim64> howmany;
    for (int ax = 0; ax < grid.dim(); ++ax) {
      if (ax == axis) continue;
      howmany.push_back({grid.points(ax), grid.stride(ax), grid.stride(ax)});
    }
    plan = fftw_plan_guru64_dft(1, &dim, static_cast<int>(howmany.size()),
                                howmany.data(), as_fftw(scratch.data()),
                                as_fftw(scratch.data()), sign, flags);
  }
  g_plans.emplace(std::move(key), plan);
  return plan;
}

void execute(const GridSpec& grid, int axis, int sign, std::complex<double>* data) {
  fftw_plan plan = plan_for(grid, axis, sign);
  fftw_execute_dft(plan, as_fftw(data), as_fftw(data));
}

void scale(const GridSpec& grid, std::complex<double>* data, double factor) {
  const std::int64_t n = grid.total_points();
  for (std::int64_t i = 0; i < n; ++i) data[i] *= factor;
}

}  // namespace

void forward(const GridSpec& grid, std::complex<double>* data) {
  execute(grid, -1, FFTW_FORWARD, data);
}

void inverse(const GridSpec& grid, std::complex<double>* data) {
  execute(grid, -1, FFTW_BACKWARD, data);
  scale(grid, data, 1.0 / static_cast<double>(grid.total_points()));
}

void forward_axis(const GridSpec& grid, int axis, std::complex<double>* data) {
  execute(grid, axis, FFTW_FORWARD, data);
}

void inverse_axis(const GridSpec& grid, int axis, std::complex<double>* data) {
  execute(grid, axis, FFTW_BACKWARD, data);
  scale(grid, data, 1.0 / static_cast<double>(grid.points(axis)));
}

cvector derivative(const GridSpec& grid, const cvector& f, int axis) {
  cvector g = f;
  forward_axis(grid, axis, g.data());
  const std::int64_t n = grid.total_points();
  for (std::int64_t i = 0; i < n; ++i) {
    const double k = grid.wavenumber_deriv(axis, grid.axis_index(i, axis));
    g[static_cast<std::size_t>(i)] *= std::complex<double>(0.0, k);
  }
  inverse_axis(grid, axis, g.data());
  return g;
}

std::vector<cvector> gradient(const GridSpec& grid, const cvector& f) {
  cvector hat = f;
  forward(grid, hat.data());
  std::vector<cvector> out(static_cast<std::size_t>(grid.dim()));
  const std::int64_t n = grid.total_points();
  for (int ax = 0; ax < grid.dim(); ++ax) {
    cvector g(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
      const double k = grid.wavenumber_deriv(ax, grid.axis_index(i, ax));
      g[static_cast<std::size_t>(i)] =
          hat[static_cast<std::size_t>(i)] * std::complex<double>(0.0, k);
    }
    inverse(grid, g.data());
    out[static_cast<std::size_t>(ax)] = std::move(g);
  }
  return out;
}

std::vector<double> derivative_real(const GridSpec& grid,
                                    const std::vector<double>& f, int axis) {
  cvector c(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) c[i] = f[i];
  cvector g = derivative(grid, c, axis);
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = g[i].real();
  return out;
}

}  // namespace edlab::spectral
