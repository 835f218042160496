#include "doctest.h"

#include <cmath>
#include <cstring>
#include <random>

#include "microloc/dist.hpp"
#include "microloc/wavefront.hpp"

using namespace microloc;

namespace {

GridSpec grid1d(double lo, double hi, std::size_t n) {
  return GridSpec::make({lo}, {hi}, {n});
}

const GridSpec& catalog_grid() {
  static GridSpec g = grid1d(-3.0, 3.0, 4096);
  return g;
}

std::vector<std::vector<double>> pts1(std::initializer_list<double> xs) {
  std::vector<std::vector<double>> out;
  for (double x : xs) out.push_back({x});
  return out;
}

const DecayReport& rep(const WavefrontEstimate& est, std::vector<double> x,
                       std::vector<double> khat) {
  const DecayReport* r = est.find(x, khat);
  REQUIRE(r != nullptr);
  return *r;
}

bool singular_at(const WavefrontEstimate& est, std::vector<double> x,
                 std::vector<double> khat) {
  return rep(est, std::move(x), std::move(khat)).verdict ==
         WfVerdict::singular;
}

ModeSumParams ground_state_modes(int n_modes, double mass, double eps) {
  ModeSumParams p;
  p.n_modes = n_modes;
  p.mass = mass;
  p.epsilon = eps;
  p.wp.assign(2 * n_modes + 1, 0.0);
  p.wm.assign(2 * n_modes + 1, 0.0);
  for (int n = -n_modes; n <= n_modes; ++n) {
    const double om = p.omega(n);
    p.wp[p.idx(n)] = std::exp(-eps * om * om) / (2.0 * om * p.L);
  }
  return p;
}

}  // namespace

TEST_CASE("direction grids enumerate unit covectors with conic neighbourhoods") {
  const auto ld = line_directions();
  REQUIRE(ld.dirs.size() == 2);
  CHECK(ld.cone_members(std::vector<double>{1.0}).size() == 1);
  CHECK(ld.cone_members(std::vector<double>{-1.0}).size() == 1);

  const auto c8 = circle_directions(8);
  REQUIRE(c8.dirs.size() == 8);
  for (const auto& d : c8.dirs)
    CHECK(std::abs(d[0] * d[0] + d[1] * d[1] - 1.0) < 1e-12);
  // 45 degree spacing with a 10 degree half-angle: cones are singletons
  for (const auto& d : c8.dirs) CHECK(c8.cone_members(d).size() == 1);

  const auto c64 = circle_directions(64);
  // 5.625 degree spacing: a 10 degree half-angle holds three directions
  CHECK(c64.cone_members(c64.dirs[0]).size() == 3);

  const auto dd = doubled_directions(c8);
  REQUIRE(dd.dirs.size() == 8);
  for (std::size_t j = 0; j < 8; ++j) {
    REQUIRE(dd.dirs[j].size() == 4);
    CHECK(std::abs(dd.dirs[j][0] + c8.dirs[j][0] / std::sqrt(2.0)) < 1e-12);
    CHECK(std::abs(dd.dirs[j][2] - c8.dirs[j][0] / std::sqrt(2.0)) < 1e-12);
  }
}

TEST_CASE("smooth scan: point mass is singular at its location only") {
  const auto d = make_delta(catalog_grid(), {0.0});
  const auto est =
      estimate_wf_smooth(d, pts1({-2.0, -1.0, 0.0, 1.0, 2.0}), line_directions());
  for (double dir : {-1.0, 1.0}) {
    const auto& r0 = rep(est, {0.0}, {dir});
    CHECK(r0.verdict == WfVerdict::singular);
    CHECK(std::abs(r0.exponent) < 0.3);  // flat spectrum
    for (double x : {-2.0, -1.0, 1.0, 2.0}) {
      const auto& r = rep(est, {x}, {dir});
      CHECK(r.verdict == WfVerdict::regular);
      CHECK(r.exponent == -999.0);  // localization vanishes outright
    }
  }
}

TEST_CASE("smooth scan: step function shows order -1 decay at the jump") {
  const auto d = make_heaviside(catalog_grid(), 0.0);
  const auto est =
      estimate_wf_smooth(d, pts1({-1.0, 0.0, 1.0}), line_directions());
  for (double dir : {-1.0, 1.0}) {
    const auto& r0 = rep(est, {0.0}, {dir});
    CHECK(r0.verdict == WfVerdict::singular);
    CHECK(r0.exponent == doctest::Approx(-1.0).epsilon(0.3));
  }
  // constant side: values follow the localizer tail, still superpolynomial
  for (double dir : {-1.0, 1.0}) {
    const auto& r1 = rep(est, {1.0}, {dir});
    CHECK(r1.verdict == WfVerdict::regular);
    CHECK(r1.exponent <= 0.5 - 6.0);
    CHECK(rep(est, {-1.0}, {dir}).verdict == WfVerdict::regular);
  }
}

TEST_CASE("smooth scan: boundary-value pole is one-sided in frequency") {
  const auto d = make_pole_plus_i0(catalog_grid(), 0.0);
  const auto est =
      estimate_wf_smooth(d, pts1({-2.0, -1.0, 0.0, 1.0, 2.0}), line_directions());
  const auto& plus = rep(est, {0.0}, {1.0});
  CHECK(plus.verdict == WfVerdict::singular);
  CHECK(std::abs(plus.exponent) < 0.4);  // plateau at 2 pi
  CHECK(rep(est, {0.0}, {-1.0}).verdict == WfVerdict::regular);
  for (double x : {-2.0, -1.0, 1.0, 2.0})
    for (double dir : {-1.0, 1.0})
      CHECK(rep(est, {x}, {dir}).verdict == WfVerdict::regular);
}

TEST_CASE("smooth scan: smooth densities carry empty wavefront") {
  const auto& g = catalog_grid();
  const auto ld = line_directions();

  const auto bump = make_gevrey_bump(g, 0.0, 1.0);
  const auto eb = estimate_wf_smooth(
      bump, pts1({-2.0, -1.0, -0.9, 0.0, 0.9, 1.0, 2.0}), ld);
  for (const auto& r : eb.reports) {
    CHECK(r.verdict == WfVerdict::regular);
    if (r.exponent != -999.0) CHECK(r.exponent <= -5.5);
  }

  const auto gauss = make_gaussian_density(g, 0.0, 0.8);
  const auto eg = estimate_wf_smooth(gauss, pts1({-1.0, 0.0, 1.0}), ld);
  for (const auto& r : eg.reports) CHECK(r.verdict == WfVerdict::regular);

  const auto cst = make_const_density(g);
  const auto ec = estimate_wf_smooth(cst, pts1({0.0}), ld);
  for (const auto& r : ec.reports) CHECK(r.verdict == WfVerdict::regular);
}

TEST_CASE("analytic scan: factorial ladder separates the catalog") {
  const auto& g = catalog_grid();
  const auto ld = line_directions();

  SUBCASE("point mass") {
    const auto d = make_delta(g, {0.0});
    const auto est = estimate_wf_analytic(d, pts1({-1.0, 0.0, 1.0}), ld);
    for (double dir : {-1.0, 1.0}) {
      CHECK(singular_at(est, {0.0}, {dir}));
      CHECK_FALSE(singular_at(est, {-1.0}, {dir}));
      CHECK_FALSE(singular_at(est, {1.0}, {dir}));
    }
  }

  SUBCASE("step function") {
    const auto d = make_heaviside(g, 0.0);
    const auto est = estimate_wf_analytic(d, pts1({-1.0, 0.0, 1.0}), ld);
    for (double dir : {-1.0, 1.0}) {
      CHECK(singular_at(est, {0.0}, {dir}));
      CHECK_FALSE(singular_at(est, {-1.0}, {dir}));
      CHECK_FALSE(singular_at(est, {1.0}, {dir}));
    }
    // the constant side is a genuine acceptance, not a vanishing localization
    CHECK(rep(est, {1.0}, {1.0}).constant > 0.0);
    CHECK(rep(est, {1.0}, {1.0}).exponent > -900.0);
  }

  SUBCASE("boundary-value pole: one-sided analytic wavefront") {
    const auto d = make_pole_plus_i0(g, 0.0);
    const auto est = estimate_wf_analytic(d, pts1({-1.0, 0.0, 1.0}), ld);
    CHECK(singular_at(est, {0.0}, {1.0}));
    CHECK_FALSE(singular_at(est, {0.0}, {-1.0}));
    for (double x : {-1.0, 1.0})
      for (double dir : {-1.0, 1.0}) CHECK_FALSE(singular_at(est, {x}, {dir}));
  }

  SUBCASE("compactly supported smooth bump: analytic-singular edges only") {
    const auto d = make_gevrey_bump(g, 0.0, 1.0);
    const auto est =
        estimate_wf_analytic(d, pts1({-2.0, -1.0, 0.0, 1.0, 2.0}), ld);
    for (double dir : {-1.0, 1.0}) {
      CHECK(singular_at(est, {-1.0}, {dir}));
      CHECK(singular_at(est, {1.0}, {dir}));
      CHECK_FALSE(singular_at(est, {0.0}, {dir}));
      CHECK_FALSE(singular_at(est, {-2.0}, {dir}));
      CHECK_FALSE(singular_at(est, {2.0}, {dir}));
    }
    // interior acceptance is a real bound, not a vanishing localization
    CHECK(rep(est, {0.0}, {1.0}).constant > 0.0);
  }

  SUBCASE("real-analytic density accepted at the base rung") {
    const auto d = make_gaussian_density(g, 0.0, 0.8);
    const auto est = estimate_wf_analytic(d, pts1({0.0}), ld);
    for (double dir : {-1.0, 1.0}) {
      const auto& r = rep(est, {0.0}, {dir});
      CHECK(r.verdict == WfVerdict::regular);
      CHECK(r.constant > 0.0);
    }
  }
}

TEST_CASE("smooth wavefront is contained in the analytic wavefront") {
  // the bump edge is the separating example: smooth-regular, analytic-singular
  const auto& g = catalog_grid();
  const auto d = make_gevrey_bump(g, 0.0, 1.0);
  const auto pts = pts1({-1.0, 0.0, 1.0});
  const auto es = estimate_wf_smooth(d, pts, line_directions());
  const auto ea = estimate_wf_analytic(d, pts, line_directions());
  for (std::size_t i = 0; i < es.reports.size(); ++i) {
    if (es.reports[i].verdict == WfVerdict::singular)
      CHECK(ea.reports[i].verdict == WfVerdict::singular);
  }
  CHECK(singular_at(ea, {1.0}, {1.0}));
  CHECK_FALSE(singular_at(es, {1.0}, {1.0}));
}

TEST_CASE("cutoff sequences satisfy their derivative bounds") {
  Box U{{-0.15}, {0.15}}, K{{-0.9}, {0.9}};
  const auto seq = make_cutoff_sequence(U, K, 14, 4.0 * catalog_grid().spacing(0));
  const auto chk = verify_cutoff_constants(seq);
  CHECK(chk.bound_ok);
  CHECK(chk.c_achieved > 0.0);
  CHECK(chk.c_achieved <= seq.c0_nominal * 1.25);

  // the deep sequence used by the widest ladder rung stays resolvable
  const auto deep = make_cutoff_sequence(U, K, 34, 4.0 * catalog_grid().spacing(0));
  CHECK(verify_cutoff_constants(deep, 129).bound_ok);
}

TEST_CASE("pairing correspondence: vector scans agree with scalar pairings") {
  SUBCASE("point mass, smooth and analytic") {
    const auto psi = make_delta(catalog_grid(), {0.0},
                                {cplx(0.8, 0.0), cplx(0.0, 0.6)});
    const auto pts = pts1({0.0, 1.0});
    const auto smooth = check_psi_w_correspondence(psi, pts, line_directions(),
                                                   WfMode::smooth);
    CHECK(smooth.consistent());
    CHECK(smooth.mismatches.empty());
    const auto analytic = check_psi_w_correspondence(
        psi, pts, line_directions(), WfMode::analytic);
    CHECK(analytic.consistent());

    const auto offdiag = check_psi_w_correspondence(
        psi, pts, line_directions(), WfMode::smooth, {}, {}, true);
    CHECK(offdiag.off_diagonal_ok);
  }

  SUBCASE("two-component smooth kernel") {
    const GridSpec g = grid1d(-3.0, 3.0, 2048);
    std::vector<cplx> K(2 * g.total());
    for (std::size_t i = 0; i < g.total(); ++i) {
      const double x = g.coord(0, i);
      K[i] = std::exp(-0.5 * sq(x / 0.6));
      K[g.total() + i] = cplx(0.3, 0.4) * std::exp(-0.5 * sq((x - 0.4) / 0.9));
    }
    const auto psi = make_kernel_dist(g, 2, std::move(K));
    const auto smooth = check_psi_w_correspondence(
        psi, pts1({0.0, 0.7}), line_directions(), WfMode::smooth);
    CHECK(smooth.consistent());
    for (const auto& r : smooth.psi_est.reports)
      CHECK(r.verdict == WfVerdict::regular);
    for (const auto& r : smooth.w_est.reports)
      CHECK(r.verdict == WfVerdict::regular);

    // analytic pass on a lighter kernel: the doubled-chart pairing sweeps
    // every sample per probe, so keep the chart small and the ladder short
    const GridSpec gs = grid1d(-3.0, 3.0, 1024);
    std::vector<cplx> Ks(gs.total());
    for (std::size_t i = 0; i < gs.total(); ++i)
      Ks[i] = std::exp(-0.5 * sq(gs.coord(0, i) / 0.6));
    const auto psi_s = make_kernel_dist(gs, 1, std::move(Ks));
    AnalyticWfConfig acfg;
    acfg.plateau_halfwidth = 0.2;
    acfg.support_halfwidth = 1.2;
    acfg.ladder_rungs = 1;
    const auto analytic = check_psi_w_correspondence(
        psi_s, pts1({0.0}), line_directions(), WfMode::analytic, {}, acfg);
    CHECK(analytic.consistent());
  }
}

TEST_CASE("characteristic confinement of a propagating front") {
  const GridSpec g2 = GridSpec::make({-3.0, -3.0}, {3.0, 3.0}, {4096, 4096});
  const auto d = make_line_delta(g2, 0.0, 0.0, 1.0);
  const auto dirs = circle_directions(8);
  const std::vector<std::vector<double>> pts = {
      {0.0, 0.0}, {1.0, 1.0}, {-0.75, -0.75}, {0.0, 1.5}};
  const auto est = estimate_wf_smooth(d, pts, dirs);

  const double s = 1.0 / std::sqrt(2.0);
  for (const auto& p : std::vector<std::vector<double>>{
           {0.0, 0.0}, {1.0, 1.0}, {-0.75, -0.75}}) {
    // conormal directions of the front x = t are +-(1,-1)/sqrt 2
    CHECK(singular_at(est, p, {s, -s}));
    CHECK(singular_at(est, p, {-s, s}));
    CHECK_FALSE(singular_at(est, p, {s, s}));
    CHECK_FALSE(singular_at(est, p, {-s, -s}));
    CHECK_FALSE(singular_at(est, p, {1.0, 0.0}));
    CHECK_FALSE(singular_at(est, p, {0.0, 1.0}));
  }
  for (const auto& d8 : dirs.dirs)
    CHECK_FALSE(singular_at(est, {0.0, 1.5}, d8));

  // every singular covector is null for the wave symbol k_t^2 - k_x^2
  const auto wave = [](std::span<const double>, std::span<const double> k) {
    return k[0] * k[0] - k[1] * k[1];
  };
  const auto ok = char_confinement_check(est, wave);
  CHECK(ok.pass);
  CHECK(ok.max_violation <= 1e-9);

  // an elliptic symbol must flag every singular direction
  const auto elliptic = [](std::span<const double>, std::span<const double> k) {
    return k[0] * k[0] + k[1] * k[1];
  };
  const auto bad = char_confinement_check(est, elliptic);
  CHECK_FALSE(bad.pass);
  CHECK(bad.offending.size() == 6);

  // reflection covariance: flipping the front velocity flips the conormal
  const auto dref = make_line_delta(g2, 0.0, 0.0, -1.0);
  const auto eref = estimate_wf_smooth(dref, {{0.0, 0.0}}, dirs);
  CHECK(singular_at(eref, {0.0, 0.0}, {s, s}));
  CHECK(singular_at(eref, {0.0, 0.0}, {-s, -s}));
  CHECK_FALSE(singular_at(eref, {0.0, 0.0}, {s, -s}));
}

TEST_CASE("dual cones match a brute-force angular sweep") {
  const auto half = dual_cone({{1.0, 0.0}});
  CHECK(half.contains(std::vector<double>{1.0, 0.0}));
  CHECK(half.contains(std::vector<double>{0.5, -3.0}));
  CHECK_FALSE(half.contains(std::vector<double>{-0.1, 1.0}));

  const auto wedge = dual_cone({{1.0, 1.0}, {1.0, -1.0}});
  int disagreements = 0;
  for (int j = 0; j < 1440; ++j) {
    const double th = 2.0 * kPi * j / 1440.0;
    const std::vector<double> xi = {std::cos(th), std::sin(th)};
    const double margin = xi[0] - std::abs(xi[1]);
    if (std::abs(margin) < 1e-6) continue;  // boundary rays
    if (wedge.contains(xi) != (margin > 0.0)) ++disagreements;
  }
  CHECK(disagreements == 0);
}

TEST_CASE("boundary values of analytic families concentrate in the dual cone") {
  const auto& g = catalog_grid();
  const auto bv = make_pole_plus_i0(g, 0.0);
  const auto G = [](double t, std::span<const double> x) {
    return 1.0 / cplx(x[0], t);
  };
  const std::vector<double> v0 = {1.0};
  const auto report = boundary_value_bound_check(
      G, v0, {{1.0}}, bv, pts1({-1.0, 0.0, 1.0}), line_directions());
  CHECK(report.cr_residual < 1e-6);
  CHECK(report.contained);
  CHECK(report.violations.empty());
  CHECK(singular_at(report.est, {0.0}, {1.0}));

  // the conjugate family fails the analyticity (Cauchy-Riemann) gate
  const auto Gbar = [](double t, std::span<const double> x) {
    return 1.0 / cplx(x[0], -t);
  };
  CHECK_THROWS(boundary_value_bound_check(Gbar, v0, {{1.0}}, bv, pts1({0.0}),
                                          line_directions()));

  // correct family, wrong cone: containment must fail
  const auto wrong = boundary_value_bound_check(
      G, v0, {{-1.0}}, bv, pts1({0.0}), line_directions());
  CHECK_FALSE(wrong.contained);
  CHECK_FALSE(wrong.violations.empty());
}

TEST_CASE("verdicts are stable under rescaling and localizer width") {
  const auto& g = catalog_grid();

  // analytic ladder is scale-invariant through the M0 normalization
  for (double amp : {1e-6, 1.0, 1e6}) {
    const auto d = make_delta(g, {0.0}, {cplx(amp, 0.0)});
    const auto est = estimate_wf_analytic(d, pts1({0.0, 1.0}), line_directions());
    CHECK(singular_at(est, {0.0}, {1.0}));
    CHECK_FALSE(singular_at(est, {1.0}, {1.0}));
  }

  // smooth verdicts survive reasonable localizer widths
  for (double hw : {0.35, 0.5, 0.7}) {
    SmoothWfConfig cfg;
    cfg.window_halfwidth = hw;
    const auto d = make_pole_plus_i0(g, 0.0);
    const auto est =
        estimate_wf_smooth(d, pts1({0.0, 2.0}), line_directions(), cfg);
    CHECK(singular_at(est, {0.0}, {1.0}));
    CHECK_FALSE(singular_at(est, {0.0}, {-1.0}));
    CHECK_FALSE(singular_at(est, {2.0}, {1.0}));
  }
}

TEST_CASE("scans are deterministic and job-count independent") {
  const auto& g = catalog_grid();
  const auto d = make_pole_plus_i0(g, 0.0);
  const auto pts = pts1({-1.0, 0.0, 1.0});

  SmoothWfConfig s1, s4;
  s4.jobs = 4;
  const auto a = estimate_wf_smooth(d, pts, line_directions(), s1);
  const auto b = estimate_wf_smooth(d, pts, line_directions(), s1);
  const auto c = estimate_wf_smooth(d, pts, line_directions(), s4);
  REQUIRE(a.reports.size() == b.reports.size());
  REQUIRE(a.reports.size() == c.reports.size());
  for (std::size_t i = 0; i < a.reports.size(); ++i) {
    CHECK(std::memcmp(&a.reports[i].exponent, &b.reports[i].exponent,
                      sizeof(double)) == 0);
    CHECK(std::memcmp(&a.reports[i].exponent, &c.reports[i].exponent,
                      sizeof(double)) == 0);
    for (std::size_t j = 0; j < a.reports[i].values.size(); ++j)
      CHECK(std::memcmp(&a.reports[i].values[j], &c.reports[i].values[j],
                        sizeof(double)) == 0);
  }

  AnalyticWfConfig a1, a4;
  a4.jobs = 4;
  const auto bump = make_gevrey_bump(g, 0.0, 1.0);
  const auto e1 = estimate_wf_analytic(bump, pts1({1.0}), line_directions(), a1);
  const auto e4 = estimate_wf_analytic(bump, pts1({1.0}), line_directions(), a4);
  for (std::size_t i = 0; i < e1.reports.size(); ++i) {
    CHECK(e1.reports[i].verdict == e4.reports[i].verdict);
    CHECK(std::memcmp(&e1.reports[i].exponent, &e4.reports[i].exponent,
                      sizeof(double)) == 0);
  }
}

TEST_CASE("scan preconditions reject unusable configurations") {
  const auto sampled_gaussian = [](const GridSpec& g) {
    std::vector<cplx> K(g.total());
    for (std::size_t i = 0; i < g.total(); ++i)
      K[i] = std::exp(-0.5 * sq(g.coord(0, i) / 0.7));
    return make_kernel_dist(g, 1, std::move(K));
  };
  const auto d = sampled_gaussian(grid1d(-3.0, 3.0, 512));

  SmoothWfConfig high;
  high.radius_hi = 11;  // 2048 at or past the Nyquist limit of this grid
  CHECK_THROWS(estimate_wf_smooth(d, pts1({0.0}), line_directions(), high));

  SmoothWfConfig narrow;
  narrow.radius_lo = 5;
  narrow.radius_hi = 7;  // fewer than 4 dyadic radii
  CHECK_THROWS(estimate_wf_smooth(d, pts1({0.0}), line_directions(), narrow));

  const auto dt = sampled_gaussian(grid1d(-3.0, 3.0, 256));
  try {
    estimate_wf_analytic(dt, pts1({0.0}), line_directions());
    CHECK(false);
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("feasible") != std::string::npos);
  }

  // a ladder rung too wide to reject factorial growth is refused up front
  AnalyticWfConfig wide;
  wide.c0 = 200.0;
  wide.n_cap = 24;
  const auto dd = make_delta(catalog_grid(), {0.0});
  CHECK_THROWS(estimate_wf_analytic(dd, pts1({0.0}), line_directions(), wide));
}

TEST_CASE("cylinder one-particle vector: null future directions only") {
  const GridSpec g2 =
      GridSpec::make({-kPi, 0.0}, {kPi, 2.0 * kPi}, {4096, 4096});
  const auto p = ground_state_modes(768, 1.0, 1e-8);
  const auto psi = make_mode_sum_psi(g2, p);
  const auto dirs = circle_directions(8);
  const std::vector<std::vector<double>> pts = {{0.0, kPi}};
  const double s = 1.0 / std::sqrt(2.0);

  const auto smooth = estimate_wf_smooth(psi, pts, dirs);
  const auto analytic = estimate_wf_analytic(psi, pts, dirs);
  for (const auto* est : {&smooth, &analytic}) {
    CHECK(singular_at(*est, {0.0, kPi}, {s, s}));
    CHECK(singular_at(*est, {0.0, kPi}, {s, -s}));
    CHECK_FALSE(singular_at(*est, {0.0, kPi}, {-s, s}));
    CHECK_FALSE(singular_at(*est, {0.0, kPi}, {-s, -s}));
    CHECK_FALSE(singular_at(*est, {0.0, kPi}, {1.0, 0.0}));
    CHECK_FALSE(singular_at(*est, {0.0, kPi}, {-1.0, 0.0}));
    CHECK_FALSE(singular_at(*est, {0.0, kPi}, {0.0, 1.0}));
    CHECK_FALSE(singular_at(*est, {0.0, kPi}, {0.0, -1.0}));
  }

  const auto corr =
      check_psi_w_correspondence(psi, pts, dirs, WfMode::smooth);
  CHECK(corr.consistent());
  const auto corr_a =
      check_psi_w_correspondence(psi, pts, dirs, WfMode::analytic);
  CHECK(corr_a.consistent());
}
