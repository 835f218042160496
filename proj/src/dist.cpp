#include "microloc/dist.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "microloc/quad.hpp"

namespace microloc {

namespace {

std::vector<cplx> default_hvec(std::vector<cplx> h) {
  if (h.empty()) h.push_back(cplx(1.0, 0.0));
  return h;
}

void check_mode_params(const ModeSumParams& p, bool signed_ok = false) {
  require(p.L > 0.0, "mode sum: L must be positive");
  require(p.mass > 0.0, "mode sum: mass must be positive");
  require(p.n_modes >= 0, "mode sum: n_modes must be nonnegative");
  const std::size_t m = static_cast<std::size_t>(2 * p.n_modes + 1);
  require(p.wp.size() == m && p.wm.size() == m,
          "mode sum: weight vectors must have size 2*n_modes+1");
  if (signed_ok) return;
  for (double v : p.wp) require(v >= 0.0, "mode sum: wp must be nonnegative");
  for (double v : p.wm) require(v >= 0.0, "mode sum: wm must be nonnegative");
}

// Doubled-chart descriptor for closed forms. These are never sampled on
// their grid, so the per-axis resolution is clamped to keep the descriptor
// under the materialization cap; bounds are what matter.
GridSpec doubled_chart(const GridSpec& g) {
  std::vector<double> lo, hi;
  std::vector<std::size_t> n;
  for (int rep = 0; rep < 2; ++rep)
    for (std::size_t a = 0; a < g.dim(); ++a) {
      lo.push_back(g.lo[a]);
      hi.push_back(g.hi[a]);
      n.push_back(std::min<std::size_t>(g.n[a], 64));
    }
  return GridSpec::make(std::move(lo), std::move(hi), std::move(n));
}

// exact value of a test function when it carries an analytic payload,
// cubic interpolation of its samples otherwise
cplx eval_tf(const TestFunction& f, std::span<const double> x) {
  if (f.analytic && f.analytic->value) return f.analytic->value(x);
  return interp_values(f.grid, f.values, x);
}

// grid-sampled pairing sum_x K(x) W(x) e^{-ik.x} vol for one kernel row
cplx row_pairing(const GridSpec& g, std::span<const cplx> row,
                 const std::vector<std::vector<cplx>>& phase,
                 const std::vector<cplx>& wvals) {
  const std::size_t total = g.total();
  std::vector<cplx> terms(total);
  std::vector<std::size_t> idx(g.dim(), 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    cplx ph(1.0, 0.0);
    for (std::size_t a = 0; a < g.dim(); ++a) ph *= phase[a][idx[a]];
    terms[flat] = row[flat] * wvals[flat] * ph;
    for (std::size_t a = g.dim(); a-- > 0;) {
      if (++idx[a] < g.n[a]) break;
      idx[a] = 0;
    }
  }
  return pairwise_sum(terms) * g.cell_volume();
}

std::vector<std::vector<cplx>> phase_tables(const GridSpec& g,
                                            std::span<const double> k) {
  std::vector<std::vector<cplx>> phase(g.dim());
  for (std::size_t a = 0; a < g.dim(); ++a) {
    phase[a].resize(g.n[a]);
    for (std::size_t j = 0; j < g.n[a]; ++j) {
      const double x = g.coord(a, j);
      phase[a][j] = std::polar(1.0, -k[a] * x);
    }
  }
  return phase;
}

// closed Gaussian-by-Gaussian pairing:
// int exp(-(x-a)^2/(2 s^2)) exp(-(x-b)^2/(2 sig^2)) e^{-ikx} dx
cplx gauss_gauss_ft(double a, double s, double b, double sig, double k) {
  const double t2 = sq(s) * sq(sig) / (sq(s) + sq(sig));
  const double mu = (a * sq(sig) + b * sq(s)) / (sq(s) + sq(sig));
  const double amp = std::sqrt(t2) * std::sqrt(2.0 * kPi) *
                     std::exp(-sq(a - b) / (2.0 * (sq(s) + sq(sig)))) *
                     std::exp(-0.5 * t2 * sq(k));
  return amp * std::polar(1.0, -k * mu);
}

}  // namespace

HilbertDist make_kernel_dist(GridSpec g, std::size_t hilbert_dim,
                             std::vector<cplx> kernel, int order) {
  require(hilbert_dim >= 1, "kernel dist: hilbert_dim must be >= 1");
  require(kernel.size() == hilbert_dim * g.total(),
          "kernel dist: kernel size must be hilbert_dim * grid.total()");
  HilbertDist d;
  d.grid = std::move(g);
  d.hilbert_dim = hilbert_dim;
  d.declared_order = order;
  d.kernel = std::move(kernel);
  return d;
}

HilbertDist make_delta(GridSpec g, std::vector<double> x0,
                       std::vector<cplx> hvec) {
  require(x0.size() == g.dim(), "delta: x0 must match grid dimension");
  HilbertDist d;
  d.grid = std::move(g);
  d.tag = ClosedTag::delta;
  d.x0 = std::move(x0);
  d.hvec = default_hvec(std::move(hvec));
  d.hilbert_dim = d.hvec.size();
  return d;
}

HilbertDist make_heaviside(GridSpec g, double x0) {
  require(g.dim() == 1, "heaviside: 1d charts only");
  HilbertDist d;
  d.grid = std::move(g);
  d.tag = ClosedTag::heaviside;
  d.x0 = {x0};
  return d;
}

HilbertDist make_pole_plus_i0(GridSpec g, double x0) {
  require(g.dim() == 1, "pole: 1d charts only");
  HilbertDist d;
  d.grid = std::move(g);
  d.tag = ClosedTag::pole_plus_i0;
  d.x0 = {x0};
  d.declared_order = 1;
  return d;
}

HilbertDist make_gaussian_density(GridSpec g, double center, double sigma,
                                  std::vector<cplx> hvec) {
  require(g.dim() == 1, "gaussian density: 1d charts only");
  require(sigma > 0.0, "gaussian density: sigma must be positive");
  HilbertDist d;
  d.grid = std::move(g);
  d.tag = ClosedTag::gaussian_density;
  d.x0 = {center};
  d.p0 = sigma;
  d.hvec = default_hvec(std::move(hvec));
  d.hilbert_dim = d.hvec.size();
  return d;
}

HilbertDist make_gevrey_bump(GridSpec g, double center, double halfwidth) {
  require(g.dim() == 1, "gevrey bump: 1d charts only");
  require(halfwidth > 0.0, "gevrey bump: halfwidth must be positive");
  HilbertDist d;
  d.grid = std::move(g);
  d.tag = ClosedTag::gevrey_bump;
  d.x0 = {center};
  d.p0 = halfwidth;
  return d;
}

HilbertDist make_const_density(GridSpec g, double value) {
  HilbertDist d;
  d.grid = std::move(g);
  d.tag = ClosedTag::const_density;
  d.p0 = value;
  return d;
}

HilbertDist make_line_delta(GridSpec g, double t0, double x0, double v) {
  require(g.dim() == 2, "line delta: 2d charts only");
  HilbertDist d;
  d.grid = std::move(g);
  d.tag = ClosedTag::line_delta;
  d.x0 = {t0, x0};
  d.p0 = v;
  return d;
}

HilbertDist make_mode_sum_psi(GridSpec g, ModeSumParams p) {
  require(g.dim() == 2, "mode sum psi: 2d charts only");
  check_mode_params(p);
  HilbertDist d;
  d.grid = std::move(g);
  d.tag = ClosedTag::mode_sum_psi;
  d.hilbert_dim = 2 * static_cast<std::size_t>(2 * p.n_modes + 1);
  d.mode = std::move(p);
  return d;
}

HilbertDist make_mode_sum_w(ModeSumParams p, const GridSpec& base_grid) {
  require(base_grid.dim() == 2, "mode sum w: 2d base charts only");
  // the w pairing is linear in the weights, so signed tables are admitted
  // here (difference forms such as the commutator function); the psi form
  // takes square roots and keeps the nonnegativity requirement
  check_mode_params(p, true);
  HilbertDist d;
  d.grid = doubled_chart(base_grid);
  d.tag = ClosedTag::mode_sum_w;
  d.mode = std::move(p);
  return d;
}

cplx PairingWindow::value(std::span<const double> x) const {
  if (closed) return closed->value(x);
  return eval_tf(*sampled, x);
}

cplx PairingWindow::ft(std::span<const double> k) const {
  if (closed) return closed->ft(k);
  return ft_at(sampled->grid, sampled->values, k);
}

Box PairingWindow::bounds() const {
  if (closed) return closed->bounds();
  return sampled->support;
}

double PairingWindow::min_feature() const {
  if (closed) return closed->min_feature();
  double f = std::numeric_limits<double>::infinity();
  if (sampled->values.empty()) {
    // payload-only window: features live at the support scale
    for (std::size_t a = 0; a < sampled->grid.dim(); ++a)
      f = std::min(f, (sampled->support.hi[a] - sampled->support.lo[a]) / 16.0);
    return f;
  }
  for (std::size_t a = 0; a < sampled->grid.dim(); ++a)
    f = std::min(f, 8.0 * sampled->grid.spacing(a));
  return f;
}

std::size_t PairingWindow::dim() const {
  if (closed) return closed->axes.size();
  return sampled->grid.dim();
}

PairingWindow wrap(const WindowND& w) {
  PairingWindow p;
  p.closed = &w;
  return p;
}

PairingWindow wrap(const TestFunction& f) {
  PairingWindow p;
  p.sampled = &f;
  return p;
}

std::vector<cplx> windowed_ft(const HilbertDist& d, const PairingWindow& w,
                              std::span<const double> k) {
  require(k.size() == d.grid.dim(), "windowed_ft: covector dim mismatch");
  require(w.dim() == d.grid.dim(), "windowed_ft: window dim mismatch");

  switch (d.tag) {
    case ClosedTag::none: {
      const std::size_t total = d.grid.total();
      std::vector<cplx> wvals(total);
      if (w.sampled && w.sampled->grid.same_as(d.grid)) {
        std::copy(w.sampled->values.begin(), w.sampled->values.end(),
                  wvals.begin());
      } else {
        for (std::size_t i = 0; i < total; ++i)
          wvals[i] = w.value(d.grid.point(i));
      }
      const auto phase = phase_tables(d.grid, k);
      std::vector<cplx> out(d.hilbert_dim);
      for (std::size_t r = 0; r < d.hilbert_dim; ++r)
        out[r] = row_pairing(
            d.grid, std::span<const cplx>(d.kernel).subspan(r * total, total),
            phase, wvals);
      return out;
    }

    case ClosedTag::delta: {
      cplx ph = std::polar(1.0, 0.0);
      double dot = 0.0;
      for (std::size_t a = 0; a < k.size(); ++a) dot += k[a] * d.x0[a];
      ph = std::polar(1.0, -dot);
      const cplx f = w.value(d.x0) * ph;
      std::vector<cplx> out(d.hilbert_dim);
      for (std::size_t i = 0; i < d.hilbert_dim; ++i) out[i] = d.hvec[i] * f;
      return out;
    }

    case ClosedTag::heaviside: {
      const Box b = w.bounds();
      const double a = std::max(d.x0[0], b.lo[0]);
      const double kk = k[0];
      const cplx v = osc_integrate(
          [&](double x) {
            const double xx[1] = {x};
            return w.value(xx) * std::polar(1.0, -kk * x);
          },
          a, b.hi[0], kk, w.min_feature());
      return {v};
    }

    case ClosedTag::pole_plus_i0: {
      const Box b = w.bounds();
      const double c = d.x0[0];
      const double kk = k[0];
      const double R = std::max(b.hi[0] - c, c - b.lo[0]);
      cplx v(0.0, 0.0);
      if (R > 0.0) {
        v = osc_integrate(
            [&](double s) {
              const double xp[1] = {c + s}, xm[1] = {c - s};
              const cplx up = w.value(xp) * std::polar(1.0, -kk * (c + s));
              const cplx um = w.value(xm) * std::polar(1.0, -kk * (c - s));
              return (up - um) / s;
            },
            0.0, R, kk, w.min_feature());
      }
      const double x0a[1] = {c};
      v -= cplx(0.0, kPi) * w.value(x0a) * std::polar(1.0, -kk * c);
      return {v};
    }

    case ClosedTag::gaussian_density: {
      const double c = d.x0[0], sig = d.p0, kk = k[0];
      cplx I;
      const GaussWin1D* gw =
          w.closed && w.closed->axes.size() == 1
              ? std::get_if<GaussWin1D>(&w.closed->axes[0])
              : nullptr;
      if (gw) {
        I = gauss_gauss_ft(c, sig, gw->x0, gw->sigma, kk);
      } else {
        const Box b = w.bounds();
        const double a0 = std::max(b.lo[0], c - 12.0 * sig);
        const double a1 = std::min(b.hi[0], c + 12.0 * sig);
        I = osc_integrate(
            [&](double x) {
              const double xx[1] = {x};
              return std::exp(-sq(x - c) / (2.0 * sq(sig))) * w.value(xx) *
                     std::polar(1.0, -kk * x);
            },
            a0, a1, kk, std::min(w.min_feature(), sig));
      }
      std::vector<cplx> out(d.hilbert_dim);
      for (std::size_t i = 0; i < d.hilbert_dim; ++i) out[i] = d.hvec[i] * I;
      return out;
    }

    case ClosedTag::gevrey_bump: {
      const double c = d.x0[0], h = d.p0, kk = k[0];
      const Box b = w.bounds();
      const double a0 = std::max(b.lo[0], c - h);
      const double a1 = std::min(b.hi[0], c + h);
      const cplx v = osc_integrate(
          [&](double x) {
            const double xx[1] = {x};
            return bump_value((x - c) / h) * w.value(xx) *
                   std::polar(1.0, -kk * x);
          },
          a0, a1, kk, std::min(w.min_feature(), 0.25 * h));
      return {v};
    }

    case ClosedTag::const_density: {
      if (w.closed) return {d.p0 * w.ft(k)};
      require(d.grid.dim() == 1,
              "constant density with a sampled window needs a 1d chart or a "
              "closed localizer");
      const Box b = w.bounds();
      const double kk = k[0];
      const cplx v = osc_integrate(
          [&](double x) {
            const double xv[1] = {x};
            return w.value(xv) * std::exp(cplx(0.0, -kk * x));
          },
          b.lo[0], b.hi[0], kk, w.min_feature());
      return {d.p0 * v};
    }

    case ClosedTag::line_delta: {
      const double t0 = d.x0[0], x0 = d.x0[1], v = d.p0;
      const Box b = w.bounds();
      double a0 = b.lo[0], a1 = b.hi[0];
      if (v > 0.0) {
        a0 = std::max(a0, t0 + (b.lo[1] - x0) / v);
        a1 = std::min(a1, t0 + (b.hi[1] - x0) / v);
      } else if (v < 0.0) {
        a0 = std::max(a0, t0 + (b.hi[1] - x0) / v);
        a1 = std::min(a1, t0 + (b.lo[1] - x0) / v);
      }
      const double kt = k[0], kx = k[1];
      const double freq = kt + v * kx;
      const cplx val = osc_integrate(
          [&](double t) {
            const double x = x0 + v * (t - t0);
            const double y[2] = {t, x};
            return w.value(y) * std::polar(1.0, -(kt * t + kx * x));
          },
          a0, a1, freq, w.min_feature() / (1.0 + std::abs(v)));
      return {val};
    }

    case ClosedTag::mode_sum_psi: {
      const ModeSumParams& p = d.mode;
      const std::size_t half = static_cast<std::size_t>(2 * p.n_modes + 1);
      std::vector<cplx> out(2 * half, cplx(0.0, 0.0));
      for (int n = -p.n_modes; n <= p.n_modes; ++n) {
        const std::size_t i = p.idx(n);
        const double om = p.omega(n), kn = p.kx(n);
        if (p.wp[i] > 0.0) {
          const double shifted[2] = {k[0] - om, k[1] + kn};
          out[i] = std::sqrt(p.wp[i]) * w.ft(shifted);
        }
        if (p.wm[i] > 0.0) {
          const double shifted[2] = {k[0] + om, k[1] - kn};
          out[half + i] = std::sqrt(p.wm[i]) * w.ft(shifted);
        }
      }
      return out;
    }

    case ClosedTag::mode_sum_w: {
      const ModeSumParams& p = d.mode;
      std::vector<cplx> terms;
      terms.reserve(2 * static_cast<std::size_t>(2 * p.n_modes + 1));
      for (int n = -p.n_modes; n <= p.n_modes; ++n) {
        const std::size_t i = p.idx(n);
        const double om = p.omega(n), kn = p.kx(n);
        if (p.wp[i] != 0.0) {
          const double s[4] = {k[0] + om, k[1] - kn, k[2] - om, k[3] + kn};
          terms.push_back(p.wp[i] * w.ft(s));
        }
        if (p.wm[i] != 0.0) {
          const double s[4] = {k[0] - om, k[1] + kn, k[2] + om, k[3] - kn};
          terms.push_back(p.wm[i] * w.ft(s));
        }
      }
      return {pairwise_sum(terms)};
    }

    case ClosedTag::delta_pair: {
      double dot = 0.0;
      for (std::size_t a = 0; a < k.size(); ++a) dot += k[a] * d.x0[a];
      return {d.p0 * w.value(d.x0) * std::polar(1.0, -dot)};
    }
  }
  throw std::logic_error("windowed_ft: unhandled tag");
}

double windowed_ft_norm(const HilbertDist& d, const PairingWindow& w,
                        std::span<const double> k) {
  const auto v = windowed_ft(d, w, k);
  std::vector<double> sq_terms(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq_terms[i] = std::norm(v[i]);
  return std::sqrt(pairwise_sum(std::span<const double>(sq_terms)));
}

std::vector<cplx> apply(const HilbertDist& d, const TestFunction& f) {
  require(f.grid.dim() == d.grid.dim(), "apply: dimension mismatch");
  if (!d.is_closed())
    require(f.grid.same_as(d.grid), "apply: kernel form needs matching grid");
  const std::vector<double> k(d.grid.dim(), 0.0);
  return windowed_ft(d, wrap(f), k);
}

CompactDist localize(const HilbertDist& d, const TestFunction& f) {
  require(f.grid.dim() == d.grid.dim(), "localize: dimension mismatch");
  if (!d.is_closed())
    require(f.grid.same_as(d.grid),
            "localize: kernel form needs matching grid");
  return CompactDist{d, f, f.support};
}

std::vector<cplx> fourier_transform(const CompactDist& c,
                                    std::span<const double> k) {
  return windowed_ft(c.dist, wrap(c.window), k);
}

std::vector<BatchFT> fourier_transform_batch(const CompactDist& c) {
  const HilbertDist& d = c.dist;
  const GridSpec& g = d.grid;
  const std::size_t total = g.total();
  std::vector<std::vector<cplx>> rows;

  switch (d.tag) {
    case ClosedTag::none: {
      require(c.window.grid.same_as(g),
              "batch transform: window grid mismatch");
      rows.resize(d.hilbert_dim, std::vector<cplx>(total));
      for (std::size_t r = 0; r < d.hilbert_dim; ++r)
        for (std::size_t i = 0; i < total; ++i)
          rows[r][i] = d.kernel[r * total + i] * c.window.values[i];
      break;
    }
    case ClosedTag::gaussian_density:
    case ClosedTag::gevrey_bump:
    case ClosedTag::const_density: {
      require(c.window.grid.same_as(g),
              "batch transform: window grid mismatch");
      std::vector<cplx> dens(total);
      for (std::size_t i = 0; i < total; ++i) {
        const double x = g.coord(0, i);
        double v = 0.0;
        if (d.tag == ClosedTag::gaussian_density)
          v = std::exp(-sq(x - d.x0[0]) / (2.0 * sq(d.p0)));
        else if (d.tag == ClosedTag::gevrey_bump)
          v = bump_value((x - d.x0[0]) / d.p0);
        else
          v = d.p0;
        dens[i] = v * c.window.values[i];
      }
      const std::size_t hd = d.is_closed() && !d.hvec.empty()
                                 ? d.hvec.size()
                                 : std::size_t(1);
      rows.resize(hd);
      for (std::size_t r = 0; r < hd; ++r) {
        rows[r] = dens;
        if (!d.hvec.empty())
          for (auto& z : rows[r]) z *= d.hvec[r];
      }
      break;
    }
    default:
      throw std::invalid_argument(
          "batch transform: closed form has no faithful samples; use "
          "fourier_transform");
  }

  std::vector<BatchFT> out;
  out.reserve(rows.size());
  for (auto& r : rows) out.push_back(batch_ft(g, r));
  return out;
}

HilbertDist pair_to_w(const HilbertDist& d) {
  switch (d.tag) {
    case ClosedTag::none: {
      const GridSpec gd = d.grid.doubled();
      const std::size_t total = d.grid.total();
      std::vector<cplx> k2(total * total, cplx(0.0, 0.0));
      for (std::size_t r = 0; r < d.hilbert_dim; ++r) {
        const cplx* row = d.kernel.data() + r * total;
        for (std::size_t x = 0; x < total; ++x) {
          const cplx cx = std::conj(row[x]);
          for (std::size_t y = 0; y < total; ++y)
            k2[x * total + y] += cx * row[y];
        }
      }
      return make_kernel_dist(gd, 1, std::move(k2), d.declared_order);
    }
    case ClosedTag::delta: {
      HilbertDist w;
      w.grid = doubled_chart(d.grid);
      w.tag = ClosedTag::delta_pair;
      w.x0 = d.x0;
      w.x0.insert(w.x0.end(), d.x0.begin(), d.x0.end());
      double nrm = 0.0;
      for (const cplx& h : d.hvec) nrm += std::norm(h);
      w.p0 = nrm;
      return w;
    }
    case ClosedTag::gaussian_density: {
      const GridSpec gd = d.grid.doubled();
      const std::size_t total = d.grid.total();
      double nrm = 0.0;
      for (const cplx& h : d.hvec) nrm += std::norm(h);
      std::vector<double> dens(total);
      for (std::size_t i = 0; i < total; ++i)
        dens[i] =
            std::exp(-sq(d.grid.coord(0, i) - d.x0[0]) / (2.0 * sq(d.p0)));
      std::vector<cplx> k2(total * total);
      for (std::size_t x = 0; x < total; ++x)
        for (std::size_t y = 0; y < total; ++y)
          k2[x * total + y] = nrm * dens[x] * dens[y];
      return make_kernel_dist(gd, 1, std::move(k2), d.declared_order);
    }
    case ClosedTag::mode_sum_psi:
      return make_mode_sum_w(d.mode, d.grid);
    default:
      throw std::invalid_argument("pair_to_w: unsupported closed form");
  }
}

cplx apply_pair(const HilbertDist& w, const TestFunction& f,
                const TestFunction& g) {
  require(w.grid.dim() == f.grid.dim() + g.grid.dim(),
          "apply_pair: needs a doubled-chart distribution");

  switch (w.tag) {
    case ClosedTag::none: {
      require(w.hilbert_dim == 1, "apply_pair: scalar kernels only");
      const std::size_t nf = f.grid.total(), ng = g.grid.total();
      require(w.kernel.size() == nf * ng,
              "apply_pair: kernel size mismatch with f, g grids");
      std::vector<cplx> outer(nf);
      std::vector<cplx> inner(ng);
      for (std::size_t x = 0; x < nf; ++x) {
        for (std::size_t y = 0; y < ng; ++y)
          inner[y] = w.kernel[x * ng + y] * g.values[y];
        outer[x] = f.values[x] * pairwise_sum(inner);
      }
      return pairwise_sum(outer) * f.grid.cell_volume() *
             g.grid.cell_volume();
    }
    case ClosedTag::delta_pair: {
      const std::size_t df = f.grid.dim();
      const std::span<const double> xf(w.x0.data(), df);
      const std::span<const double> xg(w.x0.data() + df, w.x0.size() - df);
      return w.p0 * eval_tf(f, xf) * eval_tf(g, xg);
    }
    case ClosedTag::mode_sum_w: {
      const ModeSumParams& p = w.mode;
      std::vector<cplx> terms;
      terms.reserve(2 * static_cast<std::size_t>(2 * p.n_modes + 1));
      for (int n = -p.n_modes; n <= p.n_modes; ++n) {
        const std::size_t i = p.idx(n);
        const double om = p.omega(n), kn = p.kx(n);
        const double pp[2] = {om, -kn};
        const double pm[2] = {-om, kn};
        if (p.wp[i] != 0.0)
          terms.push_back(p.wp[i] * ft_at(f.grid, f.values, pp) *
                          ft_at(g.grid, g.values, pm));
        if (p.wm[i] != 0.0)
          terms.push_back(p.wm[i] * ft_at(f.grid, f.values, pm) *
                          ft_at(g.grid, g.values, pp));
      }
      return pairwise_sum(terms);
    }
    default:
      throw std::invalid_argument("apply_pair: unsupported form");
  }
}

cplx interp_values(const GridSpec& g, std::span<const cplx> values,
                   std::span<const double> x) {
  const std::size_t dim = g.dim();
  require(x.size() == dim, "interp: point dim mismatch");
  require(values.size() == g.total(), "interp: value count mismatch");

  // per-axis 4-point Lagrange stencils (clamped at the boundary)
  std::vector<std::array<double, 4>> wts(dim);
  std::vector<std::size_t> base(dim);
  std::vector<int> width(dim);
  for (std::size_t a = 0; a < dim; ++a) {
    if (x[a] < g.lo[a] || x[a] > g.hi[a]) return cplx(0.0, 0.0);
    const double u = (x[a] - g.lo[a]) / g.spacing(a) - 0.5;
    const long nn = static_cast<long>(g.n[a]);
    if (nn >= 4) {
      long j0 = static_cast<long>(std::floor(u)) - 1;
      j0 = std::clamp(j0, 0L, nn - 4);
      base[a] = static_cast<std::size_t>(j0);
      width[a] = 4;
      const double t = u - static_cast<double>(j0);
      wts[a] = {-(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0,
                t * (t - 2.0) * (t - 3.0) / 2.0,
                -t * (t - 1.0) * (t - 3.0) / 2.0,
                t * (t - 1.0) * (t - 2.0) / 6.0};
    } else if (nn >= 2) {
      long j0 = static_cast<long>(std::floor(u));
      j0 = std::clamp(j0, 0L, nn - 2);
      base[a] = static_cast<std::size_t>(j0);
      width[a] = 2;
      const double t = u - static_cast<double>(j0);
      wts[a] = {1.0 - t, t, 0.0, 0.0};
    } else {
      base[a] = 0;
      width[a] = 1;
      wts[a] = {1.0, 0.0, 0.0, 0.0};
    }
  }

  std::size_t corners = 1;
  for (std::size_t a = 0; a < dim; ++a)
    corners *= static_cast<std::size_t>(width[a]);

  cplx acc(0.0, 0.0);
  std::vector<std::size_t> idx(dim);
  for (std::size_t c = 0; c < corners; ++c) {
    std::size_t rem = c;
    double wgt = 1.0;
    for (std::size_t a = dim; a-- > 0;) {
      const std::size_t off = rem % static_cast<std::size_t>(width[a]);
      rem /= static_cast<std::size_t>(width[a]);
      idx[a] = base[a] + off;
      wgt *= wts[a][off];
    }
    acc += wgt * values[g.flatten(idx)];
  }
  return acc;
}

}  // namespace microloc
