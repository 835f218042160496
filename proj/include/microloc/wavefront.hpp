#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "microloc/dist.hpp"
#include "microloc/grid.hpp"
#include "microloc/windows.hpp"

namespace microloc {

// Uniform angular grid of unit covector directions plus the cone half-angle
// used when taking suprema "over a conic neighbourhood".
struct DirectionGrid {
  std::size_t dim = 1;
  std::vector<std::vector<double>> dirs;
  double half_angle = 0.1745;  // radians

  // directions of this grid lying within half_angle of khat
  std::vector<std::size_t> cone_members(std::span<const double> khat) const;
};

DirectionGrid line_directions(double half_angle = 0.1745);
DirectionGrid circle_directions(int count = 64, double half_angle = 0.1745);
// doubled-chart directions (-khat, khat)/sqrt(2) for every khat in base
DirectionGrid doubled_directions(const DirectionGrid& base);

enum class WfMode { smooth, analytic };
enum class WfVerdict { regular, singular };

// One scanned (point, direction) with the measured decay data.
// smooth mode:   values[j] = cone sup of ||(f psi)^(radii[j] * d)||,
//                exponent = fitted log-log slope over the tail.
// analytic mode: values[j] = ln sup over cone and probe radii rho <= radii[j]
//                of rho^N ||(f_N psi)^(rho d)|| / M0 for N = j + 1,
//                constant = accepted ladder rung (0 when none accepts).
struct DecayReport {
  std::vector<double> x;
  std::vector<double> khat;
  WfMode mode = WfMode::smooth;
  std::vector<double> radii;
  std::vector<double> values;
  WfVerdict verdict = WfVerdict::regular;
  double exponent = 0.0;
  double constant = 0.0;
};

struct WavefrontEstimate {
  WfMode mode = WfMode::smooth;
  GridSpec grid;
  std::vector<DecayReport> reports;

  const DecayReport* find(std::span<const double> x,
                          std::span<const double> khat,
                          double tol = 1e-9) const;
};

struct SmoothWfConfig {
  int n_max = 6;
  int radius_lo = 0;   // radii 2^radius_lo .. 2^radius_hi
  int radius_hi = 10;
  double window_halfwidth = 0.5;  // bump halfwidth / Gaussian sigma
  // closed Gaussian localizer instead of a sampled bump; exact transforms,
  // mandatory for mode sums (and forced for them)
  bool gaussian_localizer = false;
  double floor_rel = 1e-13;  // radii with values below floor_rel * max drop out
  int fit_points = 5;        // slope fit uses the last <= fit_points survivors
  int jobs = 1;
};

struct AnalyticWfConfig {
  int n_max = 14;           // per-rung order floor; see n_cap
  int ladder_rungs = 2;     // C in {c0 * 2^j, j = 0 .. rungs-1}
  double c0 = 0.0;          // 0: take the cutoff-sequence constant
  double probe_mult = 3.0;  // probe radii reach probe_mult * C * (N+1)
  int probe_count = 16;     // log-spaced probe radii per N
  double probe_min = 1.0;
  double plateau_halfwidth = 0.15;  // U = x +- plateau, K = x +- support
  double support_halfwidth = 0.9;
  // A rung C only separates factorial growth from rho^N once
  // N ln(probe_mult) - sqrt(probe_mult C (N+1)) - ln C >= 1, so each rung
  // runs N up to the first such order (at least n_max, at most n_cap;
  // beyond n_cap the rung is reported infeasible).
  int n_cap = 64;
  int jobs = 1;
};

// Smooth wavefront scan. Verdict rule (documented decision procedure): take
// the cone sup s(lambda) at dyadic radii, drop radii with s below
// floor_rel * max, least-squares fit ln s against ln lambda over the last
// fit_points survivors; regular iff the slope is <= 0.5 - n_max (so
// (1+lambda)^N s stays bounded for every N <= n_max with margin 1/2), or the
// localized transform vanishes outright. The relative floor screens
// quadrature noise, so it applies only to pairings that integrate; point
// masses and mode sums pair by closed formula and keep every nonvanishing
// radius, letting super-polynomial tails register as such. Fewer than 4
// radii are an error, as are radii at or above the grid Nyquist limit for
// sample-backed data (closed forms evaluate exactly and ignore the chart
// resolution).
WavefrontEstimate estimate_wf_smooth(const HilbertDist& d,
                                     const std::vector<std::vector<double>>& points,
                                     const DirectionGrid& dirs,
                                     const SmoothWfConfig& cfg = {});

// Analytic wavefront scan via bounded cutoff sequences. For each order N
// form psi_N = f_N psi and take s_N = sup over the cone and probe radii of
// rho^N ||psi_N^(rho d)|| / M0, with probes log-spaced up to
// probe_mult * C * (N+1); regular iff some ladder rung C satisfies
// s_N <= C (C (N+1))^N for every N up to the rung's separating order (see
// AnalyticWfConfig::n_cap). M0 is the low-frequency magnitude of f_1 psi,
// making the test invariant under rescaling of psi. All comparisons run in
// log space; identically vanishing localizations are regular.
WavefrontEstimate estimate_wf_analytic(const HilbertDist& d,
                                       const std::vector<std::vector<double>>& points,
                                       const DirectionGrid& dirs,
                                       const AnalyticWfConfig& cfg = {});

// Finite-difference verification of the cutoff-sequence derivative bounds
// |D^beta f_N| <= (c (N+1))^{|beta|} for |beta| <= 2; returns the smallest c
// that the measured sups achieve.
struct CutoffConstants {
  double c_achieved = 0.0;
  bool bound_ok = false;  // c_achieved <= c0_nominal * margin
};
CutoffConstants verify_cutoff_constants(const CutoffSequence& seq,
                                        int samples_per_axis = 257,
                                        double margin = 1.25);

// Scalar-pairing correspondence: scan psi at (points x dirs) and
// w = pair_to_w(psi) at ((x,x), (-khat, khat)/sqrt 2); the diagonal verdicts
// must match. Optionally checks the off-diagonal clause: a regular (x, khat)
// for psi forbids singular ((x, -khat), (x1, k1)) for every scanned x1, k1.
struct CorrespondenceReport {
  WavefrontEstimate psi_est;
  WavefrontEstimate w_est;
  std::vector<std::size_t> mismatches;  // report indices with verdict clash
  bool off_diagonal_ok = true;
  bool consistent() const { return mismatches.empty() && off_diagonal_ok; }
};
CorrespondenceReport check_psi_w_correspondence(
    const HilbertDist& psi, const std::vector<std::vector<double>>& points,
    const DirectionGrid& dirs, WfMode mode, const SmoothWfConfig& scfg = {},
    const AnalyticWfConfig& acfg = {}, bool check_off_diagonal = false);

// Every singular covector must lie in the characteristic set of P:
// |sigma_P(x, khat)| <= tol for unit khat.
struct CharCheckReport {
  bool pass = true;
  double max_violation = 0.0;
  std::vector<std::size_t> offending;
};
CharCheckReport char_confinement_check(
    const WavefrontEstimate& est,
    const std::function<double(std::span<const double>,
                               std::span<const double>)>& principal_symbol,
    double tol = 1e-9);

// Dual cone predicate: xi is accepted when <v, xi> >= -tol ||xi|| for every
// generating direction v.
struct ConePredicate {
  std::vector<std::vector<double>> gen;
  double tol = 1e-9;
  bool contains(std::span<const double> xi) const;
};
ConePredicate dual_cone(const std::vector<std::vector<double>>& V,
                        double tol = 1e-9);

// Boundary values of functions analytic in x + i t v0, t in a cone section:
// verifies the Cauchy-Riemann relation d_t G = i v0 . grad_x G by finite
// differences (rejecting inputs whose residual exceeds cr_tol), then runs the
// analytic estimator on the supplied boundary-value distribution and checks
// containment of its singular directions in the dual cone of V.
struct BoundaryValueReport {
  double cr_residual = 0.0;
  bool contained = true;
  std::vector<std::size_t> violations;
  WavefrontEstimate est;
};
BoundaryValueReport boundary_value_bound_check(
    const std::function<cplx(double, std::span<const double>)>& G,
    std::span<const double> v0, const std::vector<std::vector<double>>& V,
    const HilbertDist& bv, const std::vector<std::vector<double>>& points,
    const DirectionGrid& dirs, const AnalyticWfConfig& cfg = {},
    double cr_tol = 1e-6);

}  // namespace microloc
