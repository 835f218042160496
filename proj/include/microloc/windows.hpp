#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "microloc/grid.hpp"
#include "microloc/util.hpp"

namespace microloc {

// Gaussian localization window, value 1 at the center. Used by the smooth
// estimator: analytic, so it never introduces spurious slow decay.
struct GaussWin1D {
  double x0 = 0.0;
  double sigma = 1.0;
};

// One member of a cutoff sequence on an axis: indicator of [a_lo, a_hi]
// convolved with n identical box mollifiers of width w. Plateau
// [a_lo + n w/2, a_hi - n w/2], support [a_lo - n w/2, a_hi + n w/2].
// Fourier transform is exact: ind^(k) * sinc(k w / 2)^n.
struct CutoffWin1D {
  double a_lo = 0.0;
  double a_hi = 0.0;
  double w = 0.0;
  int n = 1;
};

using Window1D = std::variant<GaussWin1D, CutoffWin1D>;

double win1d_value(const Window1D& w, double x);
cplx win1d_ft(const Window1D& w, double k);
// [lo, hi] outside of which the window is zero (Gaussians: 10 sigma)
void win1d_bounds(const Window1D& w, double& lo, double& hi);
double win1d_feature(const Window1D& w);  // smallest internal length scale

// tensor-product window over all axes
struct WindowND {
  std::vector<Window1D> axes;
  cplx value(std::span<const double> x) const;
  cplx ft(std::span<const double> k) const;
  Box bounds() const;
  double min_feature() const;
};

WindowND gaussian_window(std::span<const double> center, double sigma);

// Cutoff sequence f_n, n = 1..n_max, plateau 1 on U, support inside K,
// built per axis with mollifier width delta/(2n) where delta = dist(U, dK).
// Satisfies |D^beta f_n| <= (C0 (n+1))^{|beta|} for |beta| <= n with
// C0 = 4/delta, the classical iterated-mollification bound.
struct CutoffSequence {
  Box U, K;
  int n_max = 1;
  double delta = 0.0;        // min over axes of dist(U, dK)
  double c0_nominal = 0.0;   // max(1, 4/delta)
  std::vector<WindowND> f;   // f[i] is f_{i+1}

  const WindowND& member(int n) const { return f.at(n - 1); }
};

// min_resolvable: smallest mollifier width representable by the caller's
// sampling (0 = unconstrained, closed-form use). Throws when U is not
// strictly inside K, or lists the max feasible n when the grid is too coarse.
CutoffSequence make_cutoff_sequence(const Box& U, const Box& K, int n_max,
                                    double min_resolvable = 0.0);

// Stable evaluation of the normalized B-spline density M_n (n-fold
// convolution of the unit box, support [0, n]) via the positive-coefficient
// recurrence; exposed for tests.
double bspline_density(int n, double t);

}  // namespace microloc
