#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "microloc/util.hpp"

namespace microloc {

// 16-point Gauss-Legendre rule on [-1, 1]; exact through degree 31.
inline constexpr int kGL16 = 16;
inline constexpr double kGL16x[kGL16] = {
    -0.9894009349916499, -0.9445750230732326, -0.8656312023878318,
    -0.7554044083550030, -0.6178762444026438, -0.4580167776572274,
    -0.2816035507792589, -0.0950125098376374, 0.0950125098376374,
    0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
    0.7554044083550030,  0.8656312023878318,  0.9445750230732326,
    0.9894009349916499};
inline constexpr double kGL16w[kGL16] = {
    0.0271524594117541, 0.0622535239386479, 0.0951585116824928,
    0.1246289712555339, 0.1495959888165767, 0.1691565193950025,
    0.1826034150449236, 0.1894506104550685, 0.1894506104550685,
    0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479,
    0.0271524594117541};

// Composite GL-16 integration of a complex integrand over [a, b]. Panels are
// sized to resolve both the integrand's feature scale and the oscillation
// frequency |freq| (at most a quarter wave per panel), so smooth oscillatory
// pairings evaluate to near machine precision.
template <typename Fn>
cplx osc_integrate(Fn&& fn, double a, double b, double freq,
                   double feature_scale) {
  if (b <= a) return {};
  const double wave = 2.0 * kPi / std::max(std::abs(freq), 1e-12);
  double panel = std::min(feature_scale, 0.25 * wave);
  panel = std::max(panel, (b - a) / 65536.0);  // eval cap
  const std::size_t np =
      static_cast<std::size_t>(std::ceil((b - a) / panel));
  const double h = (b - a) / static_cast<double>(np);
  std::vector<cplx> terms(np);
  for (std::size_t p = 0; p < np; ++p) {
    const double mid = a + (static_cast<double>(p) + 0.5) * h;
    cplx acc(0.0, 0.0);
    for (int q = 0; q < kGL16; ++q)
      acc += kGL16w[q] * fn(mid + 0.5 * h * kGL16x[q]);
    terms[p] = acc * (0.5 * h);
  }
  return pairwise_sum(terms);
}

}  // namespace microloc
