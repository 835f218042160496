#include "microloc/grid.hpp"

#include <cmath>

namespace microloc {

GridSpec GridSpec::make(std::vector<double> lo, std::vector<double> hi,
                        std::vector<std::size_t> n) {
  require(!n.empty() && n.size() <= 4, "grid: dimension must be 1..4");
  require(lo.size() == n.size() && hi.size() == n.size(),
          "grid: lo/hi/n size mismatch");
  std::size_t total = 1;
  for (std::size_t a = 0; a < n.size(); ++a) {
    require(hi[a] > lo[a], "grid: empty axis extent");
    require(n[a] >= 2, "grid: need at least 2 samples per axis");
    require(n[a] <= kMaxTotalSamples / total, "grid: sample cap exceeded");
    total *= n[a];
  }
  GridSpec g;
  g.lo = std::move(lo);
  g.hi = std::move(hi);
  g.n = std::move(n);
  return g;
}

double GridSpec::cell_volume() const {
  double v = 1.0;
  for (std::size_t a = 0; a < dim(); ++a) v *= spacing(a);
  return v;
}

std::size_t GridSpec::total() const {
  std::size_t t = 1;
  for (auto m : n) t *= m;
  return t;
}

std::vector<std::size_t> GridSpec::unflatten(std::size_t flat) const {
  std::vector<std::size_t> idx(dim());
  for (std::size_t a = dim(); a-- > 0;) {
    idx[a] = flat % n[a];
    flat /= n[a];
  }
  return idx;
}

std::size_t GridSpec::flatten(std::span<const std::size_t> idx) const {
  std::size_t f = 0;
  for (std::size_t a = 0; a < dim(); ++a) f = f * n[a] + idx[a];
  return f;
}

std::vector<double> GridSpec::point(std::size_t flat) const {
  auto idx = unflatten(flat);
  std::vector<double> x(dim());
  for (std::size_t a = 0; a < dim(); ++a) x[a] = coord(a, idx[a]);
  return x;
}

bool GridSpec::same_as(const GridSpec& o, double tol) const {
  if (n != o.n) return false;
  for (std::size_t a = 0; a < dim(); ++a)
    if (std::abs(lo[a] - o.lo[a]) > tol || std::abs(hi[a] - o.hi[a]) > tol)
      return false;
  return true;
}

GridSpec GridSpec::doubled() const {
  std::vector<double> l = lo, h = hi;
  std::vector<std::size_t> m = n;
  l.insert(l.end(), lo.begin(), lo.end());
  h.insert(h.end(), hi.begin(), hi.end());
  m.insert(m.end(), n.begin(), n.end());
  return GridSpec::make(std::move(l), std::move(h), std::move(m));
}

bool Box::contains(std::span<const double> x, double pad) const {
  for (std::size_t a = 0; a < lo.size(); ++a)
    if (x[a] < lo[a] - pad || x[a] > hi[a] + pad) return false;
  return true;
}

double bump_value(double u) {
  const double s = 1.0 - u * u;
  if (s <= 0.0) return 0.0;
  return std::exp(1.0 - 1.0 / s);
}

double bump_d1(double u) {
  const double s = 1.0 - u * u;
  if (s <= 0.0) return 0.0;
  return bump_value(u) * (-2.0 * u / (s * s));
}

double bump_d2(double u) {
  const double s = 1.0 - u * u;
  if (s <= 0.0) return 0.0;
  const double a = -2.0 * u / (s * s);
  const double da = -2.0 / (s * s) - 8.0 * u * u / (s * s * s);
  return bump_value(u) * (a * a + da);
}

TestFunction tf_bump_1d(const GridSpec& g, double center, double halfwidth) {
  require(g.dim() == 1, "tf_bump_1d: 1d grid expected");
  require(halfwidth > 0, "tf_bump_1d: halfwidth must be positive");
  TestFunction f;
  f.grid = g;
  f.support = Box{{center - halfwidth}, {center + halfwidth}};
  f.values.resize(g.total());
  for (std::size_t j = 0; j < g.n[0]; ++j)
    f.values[j] = bump_value((g.coord(0, j) - center) / halfwidth);
  auto an = std::make_shared<TestFunction::Analytic>();
  const double c = center, h = halfwidth;
  an->value = [c, h](std::span<const double> x) -> cplx {
    return bump_value((x[0] - c) / h);
  };
  an->d1 = {[c, h](std::span<const double> x) -> cplx {
    return bump_d1((x[0] - c) / h) / h;
  }};
  an->d2 = {[c, h](std::span<const double> x) -> cplx {
    return bump_d2((x[0] - c) / h) / (h * h);
  }};
  f.analytic = an;
  return f;
}

TestFunction tf_gaussian_1d(const GridSpec& g, double center, double sigma) {
  require(g.dim() == 1, "tf_gaussian_1d: 1d grid expected");
  TestFunction f;
  f.grid = g;
  f.support = Box{{g.lo[0]}, {g.hi[0]}};
  f.values.resize(g.total());
  for (std::size_t j = 0; j < g.n[0]; ++j)
    f.values[j] = std::exp(-0.5 * sq((g.coord(0, j) - center) / sigma));
  auto an = std::make_shared<TestFunction::Analytic>();
  const double c = center, s = sigma;
  an->value = [c, s](std::span<const double> x) -> cplx {
    return std::exp(-0.5 * sq((x[0] - c) / s));
  };
  an->d1 = {[c, s](std::span<const double> x) -> cplx {
    const double u = (x[0] - c) / s;
    return std::exp(-0.5 * u * u) * (-u / s);
  }};
  an->d2 = {[c, s](std::span<const double> x) -> cplx {
    const double u = (x[0] - c) / s;
    return std::exp(-0.5 * u * u) * ((u * u - 1.0) / (s * s));
  }};
  f.analytic = an;
  return f;
}

TestFunction tf_bump_2d(const GridSpec& g, double c_t, double h_t, double c_x,
                        double h_x, double mod_t, double mod_x) {
  require(g.dim() == 2, "tf_bump_2d: 2d grid expected");
  TestFunction f;
  f.grid = g;
  f.support = Box{{c_t - h_t, c_x - h_x}, {c_t + h_t, c_x + h_x}};
  f.values.resize(g.total());
  const cplx I(0.0, 1.0);
  for (std::size_t jt = 0; jt < g.n[0]; ++jt) {
    const double t = g.coord(0, jt);
    const double bt = bump_value((t - c_t) / h_t);
    for (std::size_t jx = 0; jx < g.n[1]; ++jx) {
      const double x = g.coord(1, jx);
      f.values[jt * g.n[1] + jx] = bt * bump_value((x - c_x) / h_x) *
                                   std::exp(I * (mod_t * t + mod_x * x));
    }
  }
  auto an = std::make_shared<TestFunction::Analytic>();
  auto bt = [c_t, h_t](double t) { return bump_value((t - c_t) / h_t); };
  auto bx = [c_x, h_x](double x) { return bump_value((x - c_x) / h_x); };
  auto bt1 = [c_t, h_t](double t) { return bump_d1((t - c_t) / h_t) / h_t; };
  auto bx1 = [c_x, h_x](double x) { return bump_d1((x - c_x) / h_x) / h_x; };
  auto bt2 = [c_t, h_t](double t) {
    return bump_d2((t - c_t) / h_t) / (h_t * h_t);
  };
  auto bx2 = [c_x, h_x](double x) {
    return bump_d2((x - c_x) / h_x) / (h_x * h_x);
  };
  auto ph = [mod_t, mod_x, I](std::span<const double> x) {
    return std::exp(I * (mod_t * x[0] + mod_x * x[1]));
  };
  an->value = [=](std::span<const double> x) -> cplx {
    return bt(x[0]) * bx(x[1]) * ph(x);
  };
  an->d1 = {
      [=](std::span<const double> x) -> cplx {
        return (bt1(x[0]) + I * mod_t * bt(x[0])) * bx(x[1]) * ph(x);
      },
      [=](std::span<const double> x) -> cplx {
        return bt(x[0]) * (bx1(x[1]) + I * mod_x * bx(x[1])) * ph(x);
      }};
  an->d2 = {
      [=](std::span<const double> x) -> cplx {
        return (bt2(x[0]) + 2.0 * I * mod_t * bt1(x[0]) -
                mod_t * mod_t * bt(x[0])) *
               bx(x[1]) * ph(x);
      },
      [=](std::span<const double> x) -> cplx {
        return bt(x[0]) *
               (bx2(x[1]) + 2.0 * I * mod_x * bx1(x[1]) -
                mod_x * mod_x * bx(x[1])) *
               ph(x);
      }};
  f.analytic = an;
  return f;
}

TestFunction tf_gaussian_2d(const GridSpec& g, double c_t, double s_t,
                            double c_x, double s_x, double mod_t,
                            double mod_x) {
  require(g.dim() == 2, "tf_gaussian_2d: 2d grid expected");
  require(s_t > 0 && s_x > 0, "tf_gaussian_2d: widths must be positive");
  TestFunction f;
  f.grid = g;
  f.support = Box{{g.lo[0], g.lo[1]}, {g.hi[0], g.hi[1]}};
  f.values.resize(g.total());
  const cplx I(0.0, 1.0);
  auto gt = [c_t, s_t](double t) {
    return std::exp(-0.5 * sq((t - c_t) / s_t));
  };
  auto gx = [c_x, s_x](double x) {
    return std::exp(-0.5 * sq((x - c_x) / s_x));
  };
  for (std::size_t jt = 0; jt < g.n[0]; ++jt) {
    const double t = g.coord(0, jt);
    const double vt = gt(t);
    for (std::size_t jx = 0; jx < g.n[1]; ++jx) {
      const double x = g.coord(1, jx);
      f.values[jt * g.n[1] + jx] =
          vt * gx(x) * std::exp(I * (mod_t * t + mod_x * x));
    }
  }
  auto an = std::make_shared<TestFunction::Analytic>();
  auto gt1 = [c_t, s_t, gt](double t) {
    return gt(t) * (-(t - c_t) / sq(s_t));
  };
  auto gx1 = [c_x, s_x, gx](double x) {
    return gx(x) * (-(x - c_x) / sq(s_x));
  };
  auto gt2 = [c_t, s_t, gt](double t) {
    return gt(t) * ((sq(t - c_t) / sq(s_t) - 1.0) / sq(s_t));
  };
  auto gx2 = [c_x, s_x, gx](double x) {
    return gx(x) * ((sq(x - c_x) / sq(s_x) - 1.0) / sq(s_x));
  };
  auto ph = [mod_t, mod_x, I](std::span<const double> x) {
    return std::exp(I * (mod_t * x[0] + mod_x * x[1]));
  };
  an->value = [=](std::span<const double> x) -> cplx {
    return gt(x[0]) * gx(x[1]) * ph(x);
  };
  an->d1 = {
      [=](std::span<const double> x) -> cplx {
        return (gt1(x[0]) + I * mod_t * gt(x[0])) * gx(x[1]) * ph(x);
      },
      [=](std::span<const double> x) -> cplx {
        return gt(x[0]) * (gx1(x[1]) + I * mod_x * gx(x[1])) * ph(x);
      }};
  an->d2 = {
      [=](std::span<const double> x) -> cplx {
        return (gt2(x[0]) + 2.0 * I * mod_t * gt1(x[0]) -
                mod_t * mod_t * gt(x[0])) *
               gx(x[1]) * ph(x);
      },
      [=](std::span<const double> x) -> cplx {
        return gt(x[0]) *
               (gx2(x[1]) + 2.0 * I * mod_x * gx1(x[1]) -
                mod_x * mod_x * gx(x[1])) *
               ph(x);
      }};
  f.analytic = an;
  return f;
}

TestFunction tf_bump_nd(const GridSpec& g, std::span<const double> center,
                        double h, bool materialize) {
  require(center.size() == g.dim(), "bump: center dim mismatch");
  require(h > 0.0, "bump: halfwidth must be positive");
  TestFunction f;
  f.grid = g;
  f.support.lo.resize(g.dim());
  f.support.hi.resize(g.dim());
  for (std::size_t a = 0; a < g.dim(); ++a) {
    f.support.lo[a] = center[a] - h;
    f.support.hi[a] = center[a] + h;
  }
  if (materialize) {
    f.values.resize(g.total());
    for (std::size_t i = 0; i < g.total(); ++i) {
      const auto x = g.point(i);
      double v = 1.0;
      for (std::size_t a = 0; a < g.dim(); ++a)
        v *= bump_value((x[a] - center[a]) / h);
      f.values[i] = v;
    }
  }
  std::vector<double> c(center.begin(), center.end());
  auto an = std::make_shared<TestFunction::Analytic>();
  an->value = [c, h](std::span<const double> x) -> cplx {
    double v = 1.0;
    for (std::size_t a = 0; a < c.size(); ++a)
      v *= bump_value((x[a] - c[a]) / h);
    return v;
  };
  for (std::size_t ax = 0; ax < g.dim(); ++ax) {
    an->d1.push_back([c, h, ax](std::span<const double> x) -> cplx {
      double v = bump_d1((x[ax] - c[ax]) / h) / h;
      for (std::size_t a = 0; a < c.size(); ++a)
        if (a != ax) v *= bump_value((x[a] - c[a]) / h);
      return v;
    });
    an->d2.push_back([c, h, ax](std::span<const double> x) -> cplx {
      double v = bump_d2((x[ax] - c[ax]) / h) / (h * h);
      for (std::size_t a = 0; a < c.size(); ++a)
        if (a != ax) v *= bump_value((x[a] - c[a]) / h);
      return v;
    });
  }
  f.analytic = an;
  return f;
}

cplx integrate(const GridSpec& g, std::span<const cplx> values) {
  require(values.size() == g.total(), "integrate: size mismatch");
  return pairwise_sum(values) * g.cell_volume();
}

}  // namespace microloc
