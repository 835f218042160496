#include "microloc/windows.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <string>

#include "microloc/quad.hpp"

namespace microloc {

namespace {

double bspline_gl_piece(int n, double a, double b) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double acc = 0.0;
  for (int q = 0; q < kGL16; ++q)
    acc += kGL16w[q] * bspline_density(n, mid + half * kGL16x[q]);
  return acc * half;
}

// prefix[j] = integral of M_n over [0, j]; GL-16 is exact per knot interval
// since M_n is a polynomial of degree n-1 there.
const std::vector<double>& bspline_knot_prefix(int n) {
  static std::mutex mu;
  static std::map<int, std::vector<double>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> pre(static_cast<std::size_t>(n) + 1, 0.0);
  for (int j = 0; j < n; ++j) pre[j + 1] = pre[j] + bspline_gl_piece(n, j, j + 1);
  return cache.emplace(n, std::move(pre)).first->second;
}

double bspline_cdf_segment(int n, double lo, double hi) {
  lo = std::max(lo, 0.0);
  hi = std::min(hi, static_cast<double>(n));
  if (hi <= lo) return 0.0;
  const int j0 = static_cast<int>(std::floor(lo));
  const int j1 = static_cast<int>(std::floor(hi));
  if (j0 == j1 || (j1 == j0 + 1 && hi == static_cast<double>(j1)))
    return bspline_gl_piece(n, lo, hi);
  const auto& pre = bspline_knot_prefix(n);
  double acc = pre[j1] - pre[j0 + 1];
  acc += bspline_gl_piece(n, lo, j0 + 1);
  acc += bspline_gl_piece(n, j1, hi);
  return acc;
}

}  // namespace

double bspline_density(int n, double t) {
  if (n < 1) return 0.0;
  if (t <= 0.0 || t >= static_cast<double>(n)) return n == 1 && t == 0.0 ? 1.0 : 0.0;
  if (n == 1) return 1.0;
  // level k holds M_k(t - j) for j = 0 .. n-k
  std::vector<double> lv(static_cast<std::size_t>(n), 0.0);
  for (int j = 0; j < n; ++j) {
    const double u = t - j;
    lv[j] = (u >= 0.0 && u < 1.0) ? 1.0 : 0.0;
  }
  for (int k = 2; k <= n; ++k) {
    for (int j = 0; j + k <= n; ++j) {
      const double u = t - j;
      lv[j] = (u * lv[j] + (k - u) * lv[j + 1]) / (k - 1);
    }
  }
  return lv[0];
}

double win1d_value(const Window1D& w, double x) {
  if (const auto* g = std::get_if<GaussWin1D>(&w))
    return std::exp(-0.5 * sq((x - g->x0) / g->sigma));
  const auto& c = std::get<CutoffWin1D>(w);
  if (c.n == 0) return (x >= c.a_lo && x <= c.a_hi) ? 1.0 : 0.0;
  // f(x) = integral over [a_lo, a_hi] of the n-fold box density centered at x
  const double tlo = (x - c.a_hi) / c.w + 0.5 * c.n;
  const double thi = (x - c.a_lo) / c.w + 0.5 * c.n;
  return bspline_cdf_segment(c.n, tlo, thi);
}

cplx win1d_ft(const Window1D& w, double k) {
  const cplx I(0.0, 1.0);
  if (const auto* g = std::get_if<GaussWin1D>(&w))
    return g->sigma * std::sqrt(2.0 * kPi) * std::exp(-0.5 * sq(g->sigma * k)) *
           std::exp(-I * k * g->x0);
  const auto& c = std::get<CutoffWin1D>(w);
  cplx ind;
  if (std::abs(k) < 1e-12) {
    ind = cplx(c.a_hi - c.a_lo, 0.0);
  } else {
    ind = (std::exp(-I * k * c.a_lo) - std::exp(-I * k * c.a_hi)) / (I * k);
  }
  return ind * std::pow(sinc(0.5 * k * c.w), c.n);
}

void win1d_bounds(const Window1D& w, double& lo, double& hi) {
  if (const auto* g = std::get_if<GaussWin1D>(&w)) {
    lo = g->x0 - 10.0 * g->sigma;
    hi = g->x0 + 10.0 * g->sigma;
    return;
  }
  const auto& c = std::get<CutoffWin1D>(w);
  lo = c.a_lo - 0.5 * c.n * c.w;
  hi = c.a_hi + 0.5 * c.n * c.w;
}

double win1d_feature(const Window1D& w) {
  if (const auto* g = std::get_if<GaussWin1D>(&w)) return g->sigma;
  const auto& c = std::get<CutoffWin1D>(w);
  return c.n > 0 ? c.w : (c.a_hi - c.a_lo);
}

cplx WindowND::value(std::span<const double> x) const {
  cplx v(1.0, 0.0);
  for (std::size_t a = 0; a < axes.size(); ++a) v *= win1d_value(axes[a], x[a]);
  return v;
}

cplx WindowND::ft(std::span<const double> k) const {
  cplx v(1.0, 0.0);
  for (std::size_t a = 0; a < axes.size(); ++a) v *= win1d_ft(axes[a], k[a]);
  return v;
}

Box WindowND::bounds() const {
  Box b;
  b.lo.resize(axes.size());
  b.hi.resize(axes.size());
  for (std::size_t a = 0; a < axes.size(); ++a)
    win1d_bounds(axes[a], b.lo[a], b.hi[a]);
  return b;
}

double WindowND::min_feature() const {
  double m = 1e300;
  for (const auto& ax : axes) m = std::min(m, win1d_feature(ax));
  return m;
}

WindowND gaussian_window(std::span<const double> center, double sigma) {
  WindowND w;
  for (double c : center) w.axes.push_back(GaussWin1D{c, sigma});
  return w;
}

CutoffSequence make_cutoff_sequence(const Box& U, const Box& K, int n_max,
                                    double min_resolvable) {
  require(n_max >= 1, "cutoff sequence: n_max must be >= 1");
  require(U.lo.size() == K.lo.size(), "cutoff sequence: dimension mismatch");
  double delta = 1e300;
  for (std::size_t a = 0; a < U.lo.size(); ++a) {
    require(U.lo[a] < U.hi[a], "cutoff sequence: empty plateau axis");
    const double dlo = U.lo[a] - K.lo[a];
    const double dhi = K.hi[a] - U.hi[a];
    delta = std::min({delta, dlo, dhi});
  }
  require(delta > 0.0, "cutoff sequence: plateau set must be strictly inside "
                       "the support set");
  if (min_resolvable > 0.0) {
    // mollifier width delta/(2n) must stay representable
    const int feasible = static_cast<int>(std::floor(delta / (2.0 * min_resolvable)));
    if (feasible < n_max)
      throw std::invalid_argument(
          "cutoff sequence: grid too coarse for requested depth; max feasible "
          "n = " + std::to_string(std::max(feasible, 0)));
  }
  CutoffSequence s;
  s.U = U;
  s.K = K;
  s.n_max = n_max;
  s.delta = delta;
  s.c0_nominal = std::max(1.0, 4.0 / delta);
  for (int n = 1; n <= n_max; ++n) {
    const double w = delta / (2.0 * n);
    WindowND wn;
    for (std::size_t a = 0; a < U.lo.size(); ++a) {
      CutoffWin1D c;
      c.a_lo = U.lo[a] - 0.25 * delta;
      c.a_hi = U.hi[a] + 0.25 * delta;
      c.w = w;
      c.n = n;
      wn.axes.push_back(c);
    }
    s.f.push_back(std::move(wn));
  }
  return s;
}

}  // namespace microloc
