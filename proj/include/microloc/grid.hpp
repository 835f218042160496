#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "microloc/util.hpp"

namespace microloc {

// Hard cap on materialized sample counts; constructors that would exceed it
// throw instead of allocating. Doubling a 2d grid blows through this, which
// is intentional: those objects must stay in closed form.
inline constexpr std::size_t kMaxTotalSamples = std::size_t(1) << 24;

// Uniform midpoint grid on a product of half-open intervals.
// Sample j on axis a sits at lo[a] + (j + 1/2) * spacing(a); the midpoint
// quadrature weight is the cell volume.
struct GridSpec {
  std::vector<double> lo, hi;
  std::vector<std::size_t> n;

  static GridSpec make(std::vector<double> lo, std::vector<double> hi,
                       std::vector<std::size_t> n);

  std::size_t dim() const { return n.size(); }
  double spacing(std::size_t a) const {
    return (hi[a] - lo[a]) / static_cast<double>(n[a]);
  }
  double cell_volume() const;
  std::size_t total() const;
  double nyquist(std::size_t a) const { return kPi / spacing(a); }
  double coord(std::size_t a, std::size_t j) const {
    return lo[a] + (static_cast<double>(j) + 0.5) * spacing(a);
  }
  // flat index <-> multi index, row-major (axis 0 slowest)
  std::vector<std::size_t> unflatten(std::size_t flat) const;
  std::size_t flatten(std::span<const std::size_t> idx) const;
  std::vector<double> point(std::size_t flat) const;
  bool same_as(const GridSpec& o, double tol = 1e-12) const;

  // grid on X x X used by pair_to_w
  GridSpec doubled() const;
};

struct Box {
  std::vector<double> lo, hi;
  bool contains(std::span<const double> x, double pad = 0.0) const;
};

// Smooth test function sampled on a grid without leaving closed form behind:
// the optional analytic payload carries exact value / first / second
// derivative evaluators so differential operators can be applied without
// stencil error.
struct TestFunction {
  GridSpec grid;
  Box support;
  std::vector<cplx> values;

  struct Analytic {
    std::function<cplx(std::span<const double>)> value;
    std::vector<std::function<cplx(std::span<const double>)>> d1;  // per axis
    std::vector<std::function<cplx(std::span<const double>)>> d2;  // per axis
  };
  std::shared_ptr<const Analytic> analytic;

  cplx at_flat(std::size_t i) const { return values[i]; }
};

// 1d C-infinity bump: exp(1 - 1/(1 - u^2)) for u = (x-c)/h, zero outside,
// equal to 1 at the center. Gevrey-regular but not analytic at the edges.
double bump_value(double u);
double bump_d1(double u);   // d/du
double bump_d2(double u);   // d^2/du^2

TestFunction tf_bump_1d(const GridSpec& g, double center, double halfwidth);
TestFunction tf_gaussian_1d(const GridSpec& g, double center, double sigma);

// tensor bump on a 2d grid with optional plane-wave modulation
// exp(i (mod_t * t + mod_x * x)); modulation keeps compact support.
TestFunction tf_bump_2d(const GridSpec& g, double c_t, double h_t, double c_x,
                        double h_x, double mod_t = 0.0, double mod_x = 0.0);

// tensor Gaussian on a 2d grid with optional plane-wave modulation. Not
// compactly supported: the support box is the whole grid, so keep several
// sigma of clearance from the chart edges. Spectrally clean probe: the
// alias error of grid quadrature is far below the bump's root-exponential
// floor, which matters when second derivatives are integrated.
TestFunction tf_gaussian_2d(const GridSpec& g, double c_t, double s_t,
                            double c_x, double s_x, double mod_t = 0.0,
                            double mod_x = 0.0);

// tensor bump in any dimension, halfwidth h on every axis; materialize=false
// skips the grid samples and leaves only the analytic payload, for consumers
// that evaluate pointwise (closed-form pairings on large charts)
TestFunction tf_bump_nd(const GridSpec& g, std::span<const double> center,
                        double h, bool materialize = true);

// midpoint quadrature of a sampled integrand
cplx integrate(const GridSpec& g, std::span<const cplx> values);

}  // namespace microloc
