#pragma once

#include <optional>
#include <string>
#include <vector>

#include "microloc/fft.hpp"
#include "microloc/grid.hpp"
#include "microloc/windows.hpp"

namespace microloc {

// Hilbert-space-valued distribution on a chart. Two representations:
//  - kernel: a (hilbert_dim x grid.total()) complex matrix paired with test
//    functions by midpoint quadrature;
//  - closed form: singular model objects evaluated by exact plane-wave
//    pairings (grids cannot represent a delta or 1/(x+i0) faithfully, and
//    decay tests on them need pairings free of sampling error).
enum class ClosedTag {
  none,
  delta,             // point mass at x0 with Hilbert direction hvec
  heaviside,         // 1d step at x0
  pole_plus_i0,      // 1d boundary value 1/(x - x0 + i0)
  gaussian_density,  // real-analytic density, Hilbert direction hvec
  gevrey_bump,       // exp(-1/(1-u^2)) density: smooth, nowhere analytic at edges
  const_density,     // constant density
  line_delta,        // 2d delta supported on x = x0 + v (t - t0)
  mode_sum_psi,      // one-particle Klein-Gordon vector on the cylinder chart
  mode_sum_w,        // its scalar pairing on the doubled chart
  delta_pair,        // point mass on a doubled chart
};

// Mode data for the cylinder Klein-Gordon distributions. Index n runs over
// -n_modes..n_modes; wp/wm are spectral weights on the positive and negative
// mass shell (ground state: wm = 0). The Gaussian regulator exp(-eps w^2) is
// folded into the stored weights. The psi form requires nonnegative tables
// (it takes square roots); the scalar w form is linear in them and accepts
// signed tables, e.g. the commutator function wp = -wm = 1/(2 omega L).
struct ModeSumParams {
  double L = 2.0 * kPi;
  double mass = 1.0;
  int n_modes = 0;
  double epsilon = 0.0;
  std::vector<double> wp, wm;  // size 2*n_modes+1

  double kx(int n) const { return 2.0 * kPi * n / L; }
  double omega(int n) const { return std::sqrt(sq(kx(n)) + sq(mass)); }
  std::size_t idx(int n) const { return static_cast<std::size_t>(n + n_modes); }
};

struct HilbertDist {
  GridSpec grid;
  std::size_t hilbert_dim = 1;
  int declared_order = 0;

  // kernel representation (empty when closed form)
  std::vector<cplx> kernel;  // row-major, hilbert_dim x grid.total()

  // closed-form representation
  ClosedTag tag = ClosedTag::none;
  std::vector<double> x0;      // anchor point (dim or 2*dim for pairs)
  std::vector<cplx> hvec;      // Hilbert direction for delta/gaussian
  double p0 = 0.0, p1 = 0.0;   // tag-specific scalars (widths, slope, scale)
  ModeSumParams mode;

  bool is_closed() const { return tag != ClosedTag::none; }
};

// kernel + the smooth localization that produced it; pairings route through
// apply(dist, window * g) so singular closed forms stay exact.
struct CompactDist {
  HilbertDist dist;
  TestFunction window;
  Box support;
};

HilbertDist make_kernel_dist(GridSpec g, std::size_t hilbert_dim,
                             std::vector<cplx> kernel, int order = 0);
HilbertDist make_delta(GridSpec g, std::vector<double> x0,
                       std::vector<cplx> hvec = {});
HilbertDist make_heaviside(GridSpec g, double x0);
HilbertDist make_pole_plus_i0(GridSpec g, double x0);
HilbertDist make_gaussian_density(GridSpec g, double center, double sigma,
                                  std::vector<cplx> hvec = {});
HilbertDist make_gevrey_bump(GridSpec g, double center, double halfwidth);
HilbertDist make_const_density(GridSpec g, double value = 1.0);
HilbertDist make_line_delta(GridSpec g, double t0, double x0, double v);
HilbertDist make_mode_sum_psi(GridSpec g, ModeSumParams p);
HilbertDist make_mode_sum_w(ModeSumParams p, const GridSpec& base_grid);

// Window argument for pairings: closed-form windows evaluate exactly;
// sampled windows interpolate grid values (cubic) and integrate by
// oscillation-resolving composite quadrature.
struct PairingWindow {
  const WindowND* closed = nullptr;
  const TestFunction* sampled = nullptr;

  cplx value(std::span<const double> x) const;
  cplx ft(std::span<const double> k) const;
  Box bounds() const;
  double min_feature() const;
  std::size_t dim() const;
};

PairingWindow wrap(const WindowND& w);
PairingWindow wrap(const TestFunction& f);

// (W * psi)^(k): the windowed Fourier transform, one Hilbert component per
// entry. The workhorse of every wavefront estimate.
std::vector<cplx> windowed_ft(const HilbertDist& d, const PairingWindow& w,
                              std::span<const double> k);
// Hilbert norm of the above without materializing mode components.
double windowed_ft_norm(const HilbertDist& d, const PairingWindow& w,
                        std::span<const double> k);

// psi(f): pairing against a sampled test function.
std::vector<cplx> apply(const HilbertDist& d, const TestFunction& f);

// f * psi with support tracking.
CompactDist localize(const HilbertDist& d, const TestFunction& f);

// (f psi)^(k) for the localized object.
std::vector<cplx> fourier_transform(const CompactDist& c,
                                    std::span<const double> k);
// batch transform of a localized kernel-form distribution onto the dual
// lattice; errors for closed forms that have no faithful samples.
std::vector<BatchFT> fourier_transform_batch(const CompactDist& c);

// w(f, g) = <psi(conj f), psi(g)> as a scalar distribution on the doubled
// chart. Kernel forms materialize (subject to the sample cap), closed forms
// map to closed forms.
HilbertDist pair_to_w(const HilbertDist& d);

// scalar pairing of a doubled-chart distribution with f (x) g
cplx apply_pair(const HilbertDist& w, const TestFunction& f,
                const TestFunction& g);

// cubic interpolation of sampled values at an off-grid point (zero outside)
cplx interp_values(const GridSpec& g, std::span<const cplx> values,
                   std::span<const double> x);

}  // namespace microloc
