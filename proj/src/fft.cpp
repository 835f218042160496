#include "microloc/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

namespace microloc {

namespace {
// FFTW planning is not thread-safe; execution on distinct buffers is.
// Our transforms are small, so planning per call under a lock is fine.
std::mutex g_fftw_mu;

void run_fftw(std::span<const cplx> in, std::vector<cplx>& out,
              const std::vector<int>& dims) {
  out.assign(in.begin(), in.end());
  std::lock_guard<std::mutex> lk(g_fftw_mu);
  fftw_plan plan = fftw_plan_dft(
      static_cast<int>(dims.size()), dims.data(),
      reinterpret_cast<fftw_complex*>(out.data()),
      reinterpret_cast<fftw_complex*>(out.data()), FFTW_FORWARD,
      FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
}
}  // namespace

cplx ft_at(const GridSpec& g, std::span<const cplx> values,
           std::span<const double> k) {
  require(values.size() == g.total(), "ft_at: size mismatch");
  require(k.size() == g.dim(), "ft_at: covector dimension mismatch");
  const cplx I(0.0, 1.0);
  // separable phase tables per axis keep this O(total * dim)
  std::vector<std::vector<cplx>> phase(g.dim());
  for (std::size_t a = 0; a < g.dim(); ++a) {
    phase[a].resize(g.n[a]);
    for (std::size_t j = 0; j < g.n[a]; ++j)
      phase[a][j] = std::exp(-I * (k[a] * g.coord(a, j)));
  }
  std::vector<cplx> terms(values.size());
  for (std::size_t f = 0; f < values.size(); ++f) {
    cplx p = values[f];
    std::size_t rem = f;
    for (std::size_t a = g.dim(); a-- > 0;) {
      p *= phase[a][rem % g.n[a]];
      rem /= g.n[a];
    }
    terms[f] = p;
  }
  return pairwise_sum(terms) * g.cell_volume();
}

cplx BatchFT::at(std::span<const long> m) const {
  std::size_t flat = 0;
  for (std::size_t a = 0; a < grid.dim(); ++a) {
    const long n = static_cast<long>(grid.n[a]);
    long mm = m[a] % n;
    if (mm < 0) mm += n;
    flat = flat * grid.n[a] + static_cast<std::size_t>(mm);
  }
  return coef[flat];
}

BatchFT batch_ft(const GridSpec& g, std::span<const cplx> values) {
  require(values.size() == g.total(), "batch_ft: size mismatch");
  BatchFT out;
  out.grid = g;
  std::vector<int> dims(g.dim());
  for (std::size_t a = 0; a < g.dim(); ++a) dims[a] = static_cast<int>(g.n[a]);
  run_fftw(values, out.coef, dims);
  // convert the bare DFT to the integral convention: cell volume and the
  // phase from sample offsets x_j = lo + (j+1/2)h.
  const cplx I(0.0, 1.0);
  const double vol = g.cell_volume();
  for (std::size_t flat = 0; flat < out.coef.size(); ++flat) {
    double ph = 0.0;
    std::size_t rem = flat;
    for (std::size_t a = g.dim(); a-- > 0;) {
      const long n = static_cast<long>(g.n[a]);
      long m = static_cast<long>(rem % g.n[a]);
      rem /= g.n[a];
      if (m >= n / 2) m -= n;  // signed lattice index
      ph += out.freq(a, m) * (g.lo[a] + 0.5 * g.spacing(a));
    }
    out.coef[flat] *= vol * std::exp(-I * ph);
  }
  return out;
}

std::vector<cplx> dft_forward(std::span<const cplx> in) {
  std::vector<cplx> out;
  run_fftw(in, out, {static_cast<int>(in.size())});
  return out;
}

}  // namespace microloc
