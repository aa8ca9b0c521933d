#pragma once
// Spectral transforms on the configuration grid (FFTW backend). Conventions:
// forward is unnormalized, inverse divides by the transform size, so
// inverse(forward(f)) == f. Plans are cached per (shape, axis, direction) with
// FFTW_ESTIMATE | FFTW_UNALIGNED, which keeps planning deterministic and lets
// plans execute on any buffer. All transforms are single-threaded so results
// cannot depend on the worker count.

#include <complex>
#include <vector>

#include "edlab/grid.hpp"

namespace edlab::spectral {

using cvector = std::vector<std::complex<double>>;

// In-place full-dimensional transforms.
void forward(const GridSpec& grid, std::complex<double>* data);
void inverse(const GridSpec& grid, std::complex<double>* data);

// In-place transform along a single configuration axis (batched over the rest).
void forward_axis(const GridSpec& grid, int axis, std::complex<double>* data);
void inverse_axis(const GridSpec& grid, int axis, std::complex<double>* data);

// d/dx_axis via ik multiplication (even-n Nyquist dropped).
cvector derivative(const GridSpec& grid, const cvector& f, int axis);

// All D partial derivatives from a single forward transform.
std::vector<cvector> gradient(const GridSpec& grid, const cvector& f);

// Derivative of a real field (imaginary residue discarded).
std::vector<double> derivative_real(const GridSpec& grid,
                                    const std::vector<double>& f, int axis);

}  // namespace edlab::spectral
