#pragma once

#include <span>
#include <vector>

#include "microloc/grid.hpp"
#include "microloc/util.hpp"

namespace microloc {

// All transforms use the pairing convention  f^(k) = integral f(x) e^{-i k.x} dx
// with no 2*pi normalization anywhere.

// Direct midpoint-quadrature evaluation at one arbitrary covector.
cplx ft_at(const GridSpec& g, std::span<const cplx> values,
           std::span<const double> k);

// Batch transform onto the dual lattice k_m = 2*pi*m / extent(a),
// m in [-n/2, n/2). Backed by FFTW with the phase factors for midpoint
// sample positions applied, so entries agree with ft_at at lattice points.
struct BatchFT {
  GridSpec grid;              // source grid
  std::vector<cplx> coef;     // FFT storage order (m mod n per axis)
  double freq(std::size_t axis, long m) const {
    return 2.0 * kPi * static_cast<double>(m) / (grid.hi[axis] - grid.lo[axis]);
  }
  // signed lattice index per axis, each in [-n/2, n/2)
  cplx at(std::span<const long> m) const;
};

BatchFT batch_ft(const GridSpec& g, std::span<const cplx> values);

// Raw forward DFT used by the kg module (x-direction mode extraction):
// out[m] = sum_j in[j] e^{-2 pi i m j / n}. Power-of-two sizes use FFTW.
std::vector<cplx> dft_forward(std::span<const cplx> in);

}  // namespace microloc
