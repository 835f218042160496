#include "microloc/kg_field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <utility>

#include "json.hpp"
#include "microloc/fft.hpp"
#include "microloc/parallel.hpp"
#include "microloc/util.hpp"

namespace microloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kExpCap = 700.0;  // exp() overflows to inf just past this

double bose(double beta, double om) { return 1.0 / std::expm1(beta * om); }

ModeSumParams base_params(double L, double mass, int n_modes, double epsilon) {
  require(L > 0.0, "kg state: circumference must be positive");
  require(mass > 0.0, "kg state: mass must be positive");
  require(n_modes >= 0, "kg state: negative mode cutoff");
  require(epsilon >= 0.0, "kg state: negative regulator");
  ModeSumParams p;
  p.L = L;
  p.mass = mass;
  p.n_modes = n_modes;
  p.epsilon = epsilon;
  p.wp.assign(2 * static_cast<std::size_t>(n_modes) + 1, 0.0);
  p.wm.assign(2 * static_cast<std::size_t>(n_modes) + 1, 0.0);
  return p;
}

double regulated_ground_weight(const ModeSumParams& p, double om) {
  return std::exp(-p.epsilon * om * om) / (2.0 * om * p.L);
}

// wp, wm at an arbitrary mode index, also past the stored table (tails)
std::pair<double, double> weight_pair(const ModeSumParams& p, double beta,
                                      long n) {
  const double om = p.omega(static_cast<int>(n));
  const double w = regulated_ground_weight(p, om);
  if (!(beta < kInf)) return {w, 0.0};
  const double nb = bose(beta, om);
  return {(1.0 + nb) * w, nb * w};
}

void check_grid_matches_basis(const ModeSumParams& mode, const GridSpec& g) {
  require(g.dim() == 2, "kg: expected a 2d spacetime grid");
  const double ext = g.hi[1] - g.lo[1];
  require(std::abs(ext - mode.L) <= 1e-9 * mode.L,
          "kg: grid x-extent does not match the mode circumference");
  require(2 * (static_cast<std::size_t>(mode.n_modes) + 1) <= g.n[1],
          "kg: x-grid too coarse to resolve the mode basis");
}

// x-mode rows c_n(t_i) = integral f(t_i, x) e^{-i k_n x} dx for every
// representable n: one forward DFT per time row plus the midpoint phase.
struct ModeRows {
  std::size_t n_t = 0, n_x = 0;
  double dt = 0.0;
  double hx = 0.0;
  double x_anchor = 0.0;  // first midpoint sample position
  double L = 0.0;
  std::vector<double> t;
  std::vector<cplx> rows;  // n_t x n_x in DFT bin layout (n mod n_x)

  double kx(long n) const { return 2.0 * kPi * static_cast<double>(n) / L; }
  cplx at(std::size_t i, long n) const {
    long m = n % static_cast<long>(n_x);
    if (m < 0) m += static_cast<long>(n_x);
    return hx * std::polar(1.0, -kx(n) * x_anchor) *
           rows[i * n_x + static_cast<std::size_t>(m)];
  }
  double abs_at(std::size_t i, long n) const {
    long m = n % static_cast<long>(n_x);
    if (m < 0) m += static_cast<long>(n_x);
    return hx * std::abs(rows[i * n_x + static_cast<std::size_t>(m)]);
  }
};

ModeRows build_rows(const GridSpec& g, std::span<const cplx> v, double L) {
  require(v.size() == g.total(), "kg: sample count does not match the grid");
  ModeRows R;
  R.n_t = g.n[0];
  R.n_x = g.n[1];
  R.dt = g.spacing(0);
  R.hx = g.spacing(1);
  R.x_anchor = g.lo[1] + 0.5 * R.hx;
  R.L = L;
  R.t.resize(R.n_t);
  for (std::size_t i = 0; i < R.n_t; ++i) R.t[i] = g.coord(0, i);
  R.rows.resize(R.n_t * R.n_x);
  for (std::size_t i = 0; i < R.n_t; ++i) {
    const auto bins = dft_forward(v.subspan(i * R.n_x, R.n_x));
    std::copy(bins.begin(), bins.end(), R.rows.begin() + i * R.n_x);
  }
  return R;
}

// dt * sum_i |c_n(t_i)|, maximised over the two signed modes at |n|
double tail_amplitude(const ModeRows& R, long n, std::vector<double>& buf) {
  buf.resize(R.n_t);
  for (std::size_t i = 0; i < R.n_t; ++i) buf[i] = R.abs_at(i, n);
  const double bp = pairwise_sum(buf);
  for (std::size_t i = 0; i < R.n_t; ++i) buf[i] = R.abs_at(i, -n);
  const double bm = pairwise_sum(buf);
  return R.dt * std::max(bp, bm);
}

}  // namespace

std::string TwoPointFunction::config_string() const {
  char buf[192];
  if (is_ground()) {
    std::snprintf(buf, sizeof buf,
                  "kg-state{L=%.17g;m=%.17g;N=%d;beta=ground;eps=%.17g}",
                  mode.L, mode.mass, mode.n_modes, mode.epsilon);
  } else {
    std::snprintf(buf, sizeof buf,
                  "kg-state{L=%.17g;m=%.17g;N=%d;beta=%.17g;eps=%.17g}",
                  mode.L, mode.mass, mode.n_modes, beta, mode.epsilon);
  }
  return buf;
}

std::uint64_t TwoPointFunction::config_hash() const {
  return fnv1a(config_string());
}

TwoPointFunction ground_state(double L, double mass, int n_modes,
                              double epsilon) {
  TwoPointFunction tp;
  tp.mode = base_params(L, mass, n_modes, epsilon);
  tp.beta = kInf;
  for (int n = -n_modes; n <= n_modes; ++n)
    tp.mode.wp[tp.mode.idx(n)] = regulated_ground_weight(tp.mode, tp.mode.omega(n));
  return tp;
}

TwoPointFunction kms_state(double L, double mass, int n_modes, double epsilon,
                           double beta) {
  require(beta > 0.0 && beta < kInf,
          "kg state: beta must be positive and finite");
  TwoPointFunction tp;
  tp.mode = base_params(L, mass, n_modes, epsilon);
  tp.beta = beta;
  for (int n = -n_modes; n <= n_modes; ++n) {
    const auto [wp, wm] = weight_pair(tp.mode, beta, n);
    tp.mode.wp[tp.mode.idx(n)] = wp;
    tp.mode.wm[tp.mode.idx(n)] = wm;
  }
  return tp;
}

TwoPointFunction state_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("kg state config: ") + e.what());
  }
  require(j.is_object(), "kg state config: expected an object");
  for (const auto& item : j.items()) {
    const std::string& k = item.key();
    require(k == "L" || k == "m" || k == "N_modes" || k == "beta" ||
                k == "epsilon",
            "kg state config: unknown key " + k);
  }
  for (const char* k : {"L", "m", "N_modes", "beta", "epsilon"})
    require(j.contains(k), std::string("kg state config: missing key ") + k);
  require(j.at("L").is_number(), "kg state config: L must be a number");
  require(j.at("m").is_number(), "kg state config: m must be a number");
  require(j.at("N_modes").is_number_integer(),
          "kg state config: N_modes must be an integer");
  require(j.at("epsilon").is_number(),
          "kg state config: epsilon must be a number");
  const double L = j.at("L").get<double>();
  const double m = j.at("m").get<double>();
  const int n_modes = j.at("N_modes").get<int>();
  const double eps = j.at("epsilon").get<double>();
  const auto& b = j.at("beta");
  if (b.is_string()) {
    require(b.get<std::string>() == "ground",
            "kg state config: beta must be a number or \"ground\"");
    return ground_state(L, m, n_modes, eps);
  }
  require(b.is_number(), "kg state config: beta must be a number or \"ground\"");
  return kms_state(L, m, n_modes, eps, b.get<double>());
}

TwoPointFunction spoiled_state(const TwoPointFunction& base, double c) {
  require(c >= 0.0, "kg state: spoil coefficient must be nonnegative");
  TwoPointFunction out = base;
  for (std::size_t i = 0; i < out.mode.wp.size(); ++i) {
    const double s = 0.5 * c * (base.mode.wp[i] + base.mode.wm[i]);
    out.mode.wp[i] += s;
    out.mode.wm[i] += s;
  }
  return out;
}

CommutatorFunction commutator_function(double L, double mass, int n_modes,
                                       double epsilon) {
  CommutatorFunction E;
  E.mode = base_params(L, mass, n_modes, epsilon);
  return E;
}

CommutatorFunction commutator_of(const TwoPointFunction& tp) {
  CommutatorFunction E;
  E.mode = tp.mode;
  return E;
}

OnShellCoeffs on_shell_coefficients(const ModeSumParams& mode,
                                    const TestFunction& f, unsigned jobs) {
  require(!f.values.empty(), "kg: test function has no samples");
  check_grid_matches_basis(mode, f.grid);
  const ModeRows R = build_rows(f.grid, f.values, mode.L);
  const int N = mode.n_modes;
  OnShellCoeffs out;
  out.plus.assign(2 * static_cast<std::size_t>(N) + 1, cplx{});
  out.minus.assign(2 * static_cast<std::size_t>(N) + 1, cplx{});
  parallel_for(out.plus.size(), jobs, [&](std::size_t s) {
    const long n = static_cast<long>(s) - N;
    const double om = mode.omega(static_cast<int>(n));
    std::vector<cplx> tp(R.n_t), tm(R.n_t);
    for (std::size_t i = 0; i < R.n_t; ++i) {
      const cplx ph = std::polar(1.0, om * R.t[i]);
      tp[i] = ph * R.at(i, n);
      tm[i] = std::conj(ph) * R.at(i, -n);
    }
    out.plus[s] = R.dt * pairwise_sum(tp);
    out.minus[s] = R.dt * pairwise_sum(tm);
  });
  const long top = static_cast<long>(R.n_x) / 2 - 1;
  if (top > N) {
    out.tail_abs.assign(static_cast<std::size_t>(top - N), 0.0);
    parallel_for(out.tail_abs.size(), jobs, [&](std::size_t s) {
      std::vector<double> buf;
      out.tail_abs[s] = tail_amplitude(R, N + 1 + static_cast<long>(s), buf);
    });
  }
  return out;
}

SmearedValue two_point_coeffs(const TwoPointFunction& tp,
                              const OnShellCoeffs& F, const OnShellCoeffs& G) {
  const ModeSumParams& p = tp.mode;
  const std::size_t m = 2 * static_cast<std::size_t>(p.n_modes) + 1;
  require(F.plus.size() == m && G.plus.size() == m,
          "kg: coefficient vectors do not match the mode basis");
  std::vector<cplx> terms(m);
  for (std::size_t s = 0; s < m; ++s)
    terms[s] = p.wp[s] * F.minus[s] * G.plus[s] +
               p.wm[s] * F.plus[s] * G.minus[s];
  SmearedValue out;
  out.value = pairwise_sum(terms);
  const std::size_t nt = std::min(F.tail_abs.size(), G.tail_abs.size());
  if (nt > 0) {
    std::vector<double> tl(nt);
    for (std::size_t s = 0; s < nt; ++s) {
      const long n = p.n_modes + 1 + static_cast<long>(s);
      const auto [wp, wm] = weight_pair(p, tp.beta, n);
      tl[s] = 2.0 * (wp + wm) * F.tail_abs[s] * G.tail_abs[s];
    }
    out.tail = pairwise_sum(tl);
  }
  return out;
}

SmearedValue commutator_coeffs(const CommutatorFunction& E,
                               const OnShellCoeffs& F, const OnShellCoeffs& G) {
  const ModeSumParams& p = E.mode;
  const std::size_t m = 2 * static_cast<std::size_t>(p.n_modes) + 1;
  require(F.plus.size() == m && G.plus.size() == m,
          "kg: coefficient vectors do not match the mode basis");
  std::vector<cplx> terms(m);
  for (std::size_t s = 0; s < m; ++s) {
    const long n = static_cast<long>(s) - p.n_modes;
    const double w = regulated_ground_weight(p, p.omega(static_cast<int>(n)));
    terms[s] = cplx(0.0, -1.0) * w *
               (F.minus[s] * G.plus[s] - F.plus[s] * G.minus[s]);
  }
  SmearedValue out;
  out.value = pairwise_sum(terms);
  const std::size_t nt = std::min(F.tail_abs.size(), G.tail_abs.size());
  if (nt > 0) {
    std::vector<double> tl(nt);
    for (std::size_t s = 0; s < nt; ++s) {
      const long n = p.n_modes + 1 + static_cast<long>(s);
      const double w = regulated_ground_weight(p, p.omega(static_cast<int>(n)));
      tl[s] = 4.0 * w * F.tail_abs[s] * G.tail_abs[s];
    }
    out.tail = pairwise_sum(tl);
  }
  return out;
}

SmearedValue two_point(const TwoPointFunction& tp, const TestFunction& f,
                       const TestFunction& g, unsigned jobs) {
  return two_point_coeffs(tp, on_shell_coefficients(tp.mode, f, jobs),
                          on_shell_coefficients(tp.mode, g, jobs));
}

SmearedValue commutator(const CommutatorFunction& E, const TestFunction& f,
                        const TestFunction& g, unsigned jobs) {
  return commutator_coeffs(E, on_shell_coefficients(E.mode, f, jobs),
                           on_shell_coefficients(E.mode, g, jobs));
}

double massless_flat_commutator_gaussian(double t0f, double stf, double x0f,
                                         double sxf, double t0g, double stg,
                                         double x0g, double sxg) {
  require(stf > 0.0 && sxf > 0.0 && stg > 0.0 && sxg > 0.0,
          "kg oracle: Gaussian widths must be positive");
  const double St = std::hypot(stf, stg);
  const double Sx = std::hypot(sxf, sxg);
  const double mt = t0f - t0g;
  const double mx = x0f - x0g;
  const double At = std::sqrt(2.0 * kPi) * stf * stg / St;
  const double Ax = std::sqrt(2.0 * kPi) * sxf * sxg / Sx;
  // E(f,g) = integral over xi of the x-correlation Gaussian times the signed
  // time mass I(xi) left inside the cone |tau| > |xi|:
  // I(xi) = St sqrt(pi/2) [erfc((|xi|-mt)/(St sqrt2)) - erfc((|xi|+mt)/(St sqrt2))]
  const int n = 1 << 15;
  const double half = 14.0 * Sx + std::abs(mt) + 2.0 * St;
  const double step = 2.0 * half / n;
  const double inv2 = 1.0 / (St * std::sqrt(2.0));
  std::vector<double> terms(static_cast<std::size_t>(n));
  for (int jx = 0; jx < n; ++jx) {
    const double xi = mx - half + (jx + 0.5) * step;
    const double a = std::abs(xi);
    const double I = St * std::sqrt(kPi / 2.0) *
                     (std::erfc((a - mt) * inv2) - std::erfc((a + mt) * inv2));
    terms[static_cast<std::size_t>(jx)] =
        std::exp(-sq(xi - mx) / (2.0 * Sx * Sx)) * I;
  }
  return -0.5 * At * Ax * step * pairwise_sum(terms);
}

PropagatedField advanced_retarded(const ModeSumParams& mode,
                                  const TestFunction& f, CausalSide side,
                                  unsigned jobs) {
  require(!f.values.empty(), "kg: test function has no samples");
  check_grid_matches_basis(mode, f.grid);
  require(f.support.lo.size() == 2 && f.support.hi.size() == 2,
          "kg: test function carries no support box");
  require(f.support.lo[0] > f.grid.lo[0] && f.support.hi[0] < f.grid.hi[0],
          "kg: support reaches the time boundary of the chart");
  const ModeRows R = build_rows(f.grid, f.values, mode.L);
  const int N = mode.n_modes;
  const std::size_t m = 2 * static_cast<std::size_t>(N) + 1;

  // Duhamel per mode: running trig prefix (future) or suffix (past) sums
  // turn the sin(omega (t - s)) kernel into two cumulative quadratures.
  std::vector<cplx> u_modes(m * R.n_t);
  parallel_for(m, jobs, [&](std::size_t s) {
    const long n = static_cast<long>(s) - N;
    const double om = mode.omega(static_cast<int>(n));
    std::vector<cplx> c(R.n_t);
    std::vector<double> cs(R.n_t), sn(R.n_t);
    for (std::size_t i = 0; i < R.n_t; ++i) {
      c[i] = R.at(i, n);
      cs[i] = std::cos(om * R.t[i]);
      sn[i] = std::sin(om * R.t[i]);
    }
    cplx* u = u_modes.data() + s * R.n_t;
    cplx C{}, S{};
    if (side == CausalSide::future) {
      for (std::size_t i = 0; i < R.n_t; ++i) {
        C += cs[i] * c[i];
        S += sn[i] * c[i];
        u[i] = R.dt * (sn[i] * C - cs[i] * S) / om;
      }
    } else {
      for (std::size_t ii = R.n_t; ii-- > 0;) {
        C += cs[ii] * c[ii];
        S += sn[ii] * c[ii];
        u[ii] = R.dt * (cs[ii] * S - sn[ii] * C) / om;
      }
    }
  });

  PropagatedField out;
  out.grid = f.grid;
  out.values.assign(R.n_t * R.n_x, cplx{});
  std::vector<cplx> spec(R.n_x);
  for (std::size_t i = 0; i < R.n_t; ++i) {
    std::fill(spec.begin(), spec.end(), cplx{});
    for (std::size_t s = 0; s < m; ++s) {
      const long n = static_cast<long>(s) - N;
      long b = n % static_cast<long>(R.n_x);
      if (b < 0) b += static_cast<long>(R.n_x);
      spec[static_cast<std::size_t>(b)] =
          std::conj(u_modes[s * R.n_t + i] *
                    std::polar(1.0, R.kx(n) * R.x_anchor) / mode.L);
    }
    const auto row = dft_forward(spec);
    for (std::size_t jx = 0; jx < R.n_x; ++jx)
      out.values[i * R.n_x + jx] = std::conj(row[jx]);
  }

  // dropped representable modes: sup_t |u_n| <= tail amplitude / omega_n,
  // both signed modes folded into the factor 2
  const long top = static_cast<long>(R.n_x) / 2 - 1;
  if (top > N) {
    std::vector<double> tl(static_cast<std::size_t>(top - N));
    std::vector<double> buf;
    for (long n = N + 1; n <= top; ++n)
      tl[static_cast<std::size_t>(n - N - 1)] =
          2.0 * tail_amplitude(R, n, buf) /
          (mode.omega(static_cast<int>(n)) * mode.L);
    out.tail = pairwise_sum(tl);
  }

  // interior second-order stencil residual of P u - f
  const double it2 = 1.0 / sq(R.dt), ix2 = 1.0 / sq(R.hx);
  const double m2 = sq(mode.mass);
  double res = 0.0;
  for (std::size_t i = 1; i + 1 < R.n_t; ++i) {
    for (std::size_t jx = 0; jx < R.n_x; ++jx) {
      const std::size_t jl = jx == 0 ? R.n_x - 1 : jx - 1;
      const std::size_t jr = jx + 1 == R.n_x ? 0 : jx + 1;
      const cplx uc = out.values[i * R.n_x + jx];
      const cplx ltt = (out.values[(i + 1) * R.n_x + jx] - 2.0 * uc +
                        out.values[(i - 1) * R.n_x + jx]) *
                       it2;
      const cplx lxx = (out.values[i * R.n_x + jr] - 2.0 * uc +
                        out.values[i * R.n_x + jl]) *
                       ix2;
      res = std::max(res,
                     std::abs(ltt - lxx + m2 * uc - f.values[i * R.n_x + jx]));
    }
  }
  out.p_residual = res;
  return out;
}

TestFunction apply_kg_operator(double mass, const TestFunction& f) {
  require(f.grid.dim() == 2, "kg: expected a 2d spacetime grid");
  require(f.analytic && f.analytic->value && f.analytic->d2.size() == 2,
          "kg: operator application needs the analytic payload");
  TestFunction out;
  out.grid = f.grid;
  out.support = f.support;
  out.values.resize(f.grid.total());
  const double m2 = sq(mass);
  for (std::size_t flat = 0; flat < out.values.size(); ++flat) {
    const auto p = f.grid.point(flat);
    out.values[flat] = f.analytic->d2[0](p) - f.analytic->d2[1](p) +
                       m2 * f.analytic->value(p);
  }
  return out;
}

KmsCheckResult kms_identity_check(const TwoPointFunction& tp,
                                  const TestFunction& f, const TestFunction& g,
                                  const TimeWindow& h) {
  require(h.grid.dim() == 1 && h.values.size() == h.grid.n[0],
          "kg: window must be sampled on a 1d time grid");
  const ModeSumParams& p = tp.mode;
  const double om_max = p.omega(p.n_modes);
  require(h.grid.nyquist(0) >= om_max,
          "kg: window grid undersamples the mode band");
  if (!tp.is_ground())
    require(tp.beta * om_max < kExpCap,
            "kg: KMS continuation factor overflows");
  const auto F = on_shell_coefficients(p, f);
  const auto G = on_shell_coefficients(p, g);

  const std::size_t nw = h.grid.n[0];
  const double dw = h.grid.spacing(0);
  auto window_ft = [&](double om) {
    std::vector<cplx> terms(nw);
    for (std::size_t i = 0; i < nw; ++i)
      terms[i] = h.values[i] * std::polar(1.0, om * h.grid.coord(0, i));
    return dw * pairwise_sum(terms);
  };

  const std::size_t m = 2 * static_cast<std::size_t>(p.n_modes) + 1;
  std::vector<cplx> lt(m), rt(m, cplx{});
  for (std::size_t s = 0; s < m; ++s) {
    const long n = static_cast<long>(s) - p.n_modes;
    const double om = p.omega(static_cast<int>(n));
    const cplx Hp = window_ft(om);
    const cplx Hm = window_ft(-om);
    lt[s] = p.wp[s] * F.minus[s] * G.plus[s] * Hp +
            p.wm[s] * F.plus[s] * G.minus[s] * Hm;
    if (!tp.is_ground()) {
      rt[s] = p.wm[s] * G.plus[s] * F.minus[s] * std::exp(tp.beta * om) * Hp +
              p.wp[s] * G.minus[s] * F.plus[s] * std::exp(-tp.beta * om) * Hm;
    }
  }
  KmsCheckResult out;
  out.lhs = pairwise_sum(lt);
  out.rhs = tp.is_ground() ? cplx{} : pairwise_sum(rt);
  out.residual = std::abs(out.lhs - out.rhs);
  return out;
}

namespace {

ContinuedVector continue_coeffs(const TwoPointFunction& tp,
                                const OnShellCoeffs& F, double t) {
  const ModeSumParams& p = tp.mode;
  const std::size_t m = 2 * static_cast<std::size_t>(p.n_modes) + 1;
  ContinuedVector v;
  v.t = t;
  v.plus.assign(m, cplx{});
  v.minus.assign(m, cplx{});
  for (std::size_t s = 0; s < m; ++s) {
    const long n = static_cast<long>(s) - p.n_modes;
    const double om = p.omega(static_cast<int>(n));
    v.plus[s] = std::exp(-t * om) * std::sqrt(p.wp[s]) * F.plus[s];
    if (p.wm[s] > 0.0) {
      const double ex = t * om + 0.5 * std::log(p.wm[s]);
      require(ex <= kExpCap, "kg: continuation factor overflows the cap");
      v.minus[s] = std::exp(ex) * F.minus[s];
    }
  }
  return v;
}

}  // namespace

ContinuedVector imaginary_time_continuation(const TwoPointFunction& tp,
                                            const TestFunction& f, double t) {
  require(t > 0.0, "kg: continuation time must be positive");
  if (!tp.is_ground())
    require(t < 0.5 * tp.beta,
            "kg: continuation time must stay inside (0, beta/2)");
  return continue_coeffs(tp, on_shell_coefficients(tp.mode, f), t);
}

ContinuedVector psi_coefficients(const TwoPointFunction& tp,
                                 const TestFunction& f) {
  return continue_coeffs(tp, on_shell_coefficients(tp.mode, f), 0.0);
}

double continued_norm(const ContinuedVector& v) {
  std::vector<double> terms(v.plus.size() + v.minus.size());
  for (std::size_t s = 0; s < v.plus.size(); ++s)
    terms[s] = std::norm(v.plus[s]);
  for (std::size_t s = 0; s < v.minus.size(); ++s)
    terms[v.plus.size() + s] = std::norm(v.minus[s]);
  return std::sqrt(pairwise_sum(terms));
}

double continued_distance(const ContinuedVector& a, const ContinuedVector& b) {
  require(a.plus.size() == b.plus.size() && a.minus.size() == b.minus.size(),
          "kg: continued vectors live on different mode bases");
  std::vector<double> terms(a.plus.size() + a.minus.size());
  for (std::size_t s = 0; s < a.plus.size(); ++s)
    terms[s] = std::norm(a.plus[s] - b.plus[s]);
  for (std::size_t s = 0; s < a.minus.size(); ++s)
    terms[a.plus.size() + s] = std::norm(a.minus[s] - b.minus[s]);
  return std::sqrt(pairwise_sum(terms));
}

cplx continued_eval(const ModeSumParams& mode, const ContinuedVector& v,
                    double dt, double x0, double x1) {
  const std::size_t m = 2 * static_cast<std::size_t>(mode.n_modes) + 1;
  require(v.plus.size() == m && v.minus.size() == m,
          "kg: continued vector does not match the mode basis");
  require(dt >= 0.0, "kg: evaluation offset must be nonnegative");
  require(dt * mode.omega(mode.n_modes) <= kExpCap,
          "kg: evaluation offset overflows the cap");
  std::vector<cplx> terms(m);
  for (std::size_t s = 0; s < m; ++s) {
    const long n = static_cast<long>(s) - mode.n_modes;
    const double om = mode.omega(static_cast<int>(n));
    const cplx ph = std::polar(1.0, om * x0 - mode.kx(static_cast<int>(n)) * x1);
    terms[s] = std::exp(-dt * om) * v.plus[s] * ph;
    if (v.minus[s] != cplx{})
      terms[s] += std::exp(dt * om) * v.minus[s] * std::conj(ph);
  }
  return pairwise_sum(terms);
}

}  // namespace microloc
