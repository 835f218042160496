#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "microloc/dist.hpp"
#include "microloc/grid.hpp"

namespace microloc {

// Free Klein-Gordon structures on the cylinder chart R x S^1.
//
// Conventions, fixed project-wide:
//   metric signature (+,-), so P = d_t^2 - d_x^2 + mass^2 on the flat chart;
//   modes k_n = 2 pi n / L, omega_n = sqrt(k_n^2 + mass^2), mass > 0;
//   on-shell transform F(omega, k) = integral f(t,x) e^{i(omega t - k x)} dt dx.
//
// A state is a weight table over the mode basis (ModeSumParams):
//   ground:  wp_n = e^{-eps omega_n^2} / (2 omega_n L),           wm_n = 0
//   KMS:     wp_n = (1 + n_beta(omega_n)) w'_n,  wm_n = n_beta(omega_n) w'_n
// with n_beta = 1/(e^{beta omega} - 1) and w'_n the ground weight. The
// two-point bilinear form is
//   w2(f,g) = sum_n [ wp_n F(-omega_n,-k_n) G(omega_n,k_n)
//                   + wm_n F(omega_n,k_n) G(-omega_n,-k_n) ],
// which for real f reduces to the familiar conj(F) G weighting. The
// commutator bilinear pinned by antisym(w2) = i E is
//   E(f,g) = -i sum_n w'_n e^{-eps omega_n^2} [F_- G_+ - F_+ G_-],
// equal to sum_n (2 omega_n L)^{-1} 2 Im[conj(F) G] on real pairs. It agrees
// with the difference of the fundamental solutions when the first slot is
// the propagated one: <(E^+ - E^-) f, g>_grid = E(f, g), where P E^{+-} = id
// and supp(E^{+-} f) lies in the causal future/past of supp(f).

struct TwoPointFunction {
  ModeSumParams mode;
  double beta = std::numeric_limits<double>::infinity();  // infinity = ground

  bool is_ground() const { return !(beta < std::numeric_limits<double>::infinity()); }
  std::string config_string() const;
  std::uint64_t config_hash() const;
};

TwoPointFunction ground_state(double L, double mass, int n_modes,
                              double epsilon);
TwoPointFunction kms_state(double L, double mass, int n_modes, double epsilon,
                           double beta);

// Config JSON: {"L": num, "m": num, "N_modes": int, "beta": num | "ground",
// "epsilon": num}. Unknown keys and out-of-domain values throw.
TwoPointFunction state_from_json(const std::string& json_text);

// Counterexample state for negative tests: adds c/2 times the symmetrized
// weight to both frequency signs, wp' = wp + (c/2)(wp + wm) and likewise
// for wm. The difference wp - wm is untouched, so the commutator and the
// field equation survive, but the added past-frequency weight breaks the
// frequency split that the Hadamard condition demands. Only the stored mode
// band is modified; dropped-tail bounds keep the base state's formulas.
TwoPointFunction spoiled_state(const TwoPointFunction& base, double c);

// Antisymmetric commutator bilinear on the same mode basis. The regulator
// epsilon matches the state being certified so the CCR identity holds
// mode-exactly; epsilon = 0 gives the unregulated form.
struct CommutatorFunction {
  ModeSumParams mode;  // weight tables unused, only the basis and epsilon
};

CommutatorFunction commutator_function(double L, double mass, int n_modes,
                                       double epsilon = 0.0);
CommutatorFunction commutator_of(const TwoPointFunction& tp);

// On-shell spacetime Fourier coefficients of a sampled test function:
// x-direction by FFT bins (the k_n are exact bins of the periodic chart),
// t-direction by direct midpoint quadrature at the required +-omega_n.
struct OnShellCoeffs {
  std::vector<cplx> plus;   // F(+omega_n, +k_n), indexed by ModeSumParams::idx
  std::vector<cplx> minus;  // F(-omega_n, -k_n)
  // Quadrature bound on |F| at every representable dropped mode,
  // |n| = n_modes+1 .. n_x/2 - 1, used for the reported tail estimates.
  std::vector<double> tail_abs;
};

// Mode sums everywhere below are filled into per-mode term buffers (in
// parallel when jobs > 1) and reduced with the fixed pairwise tree, so
// results are bitwise independent of the job count.
OnShellCoeffs on_shell_coefficients(const ModeSumParams& mode,
                                    const TestFunction& f, unsigned jobs = 1);

struct SmearedValue {
  cplx value{};
  double tail = 0.0;  // bound on the dropped-mode contribution
};

SmearedValue two_point(const TwoPointFunction& tp, const TestFunction& f,
                       const TestFunction& g, unsigned jobs = 1);
SmearedValue two_point_coeffs(const TwoPointFunction& tp,
                              const OnShellCoeffs& F, const OnShellCoeffs& G);
SmearedValue commutator(const CommutatorFunction& E, const TestFunction& f,
                        const TestFunction& g, unsigned jobs = 1);
SmearedValue commutator_coeffs(const CommutatorFunction& E,
                               const OnShellCoeffs& F, const OnShellCoeffs& G);

// Closed-form massless flat-space oracle: the commutator bilinear of two
// unit-amplitude Gaussians f = exp(-(t-t0)^2/(2 st^2)) exp(-(x-x0)^2/(2 sx^2))
// against the d'Alembert kernel -(1/2) sgn(t-s) on |t-s| > |x-y|. The double
// integral collapses to a 1d quadrature of error functions.
double massless_flat_commutator_gaussian(double t0f, double stf, double x0f,
                                         double sxf, double t0g, double stg,
                                         double x0g, double sxg);

// Fundamental solutions by temporal Duhamel integration per mode:
// u_n(t) = integral_{-inf}^{t} sin(omega_n (t - s)) / omega_n f_n(s) ds for
// the future-supported E^+, and the mirrored window for E^-.
enum class CausalSide { future, past };

struct PropagatedField {
  GridSpec grid;
  std::vector<cplx> values;
  double tail = 0.0;        // sup-norm bound on the dropped-mode contribution
  double p_residual = 0.0;  // max interior |P u - f| by second-order stencils
};

PropagatedField advanced_retarded(const ModeSumParams& mode,
                                  const TestFunction& f, CausalSide side,
                                  unsigned jobs = 1);

// P f through the exact analytic payload of f (no stencil error); the
// result carries materialized samples only.
TestFunction apply_kg_operator(double mass, const TestFunction& f);

// KMS identity residual: lhs = integral h(t) w2(f, g shifted by t) dt,
// rhs the same correlation continued to t - i beta with the operators
// swapped, both evaluated as explicit Bose-weighted trigonometric sums.
// For a ground state the continued side is dropped (rhs = 0) and the
// residual is |lhs| itself: the ground-state condition requires it to
// vanish whenever the window has no Fourier content on the forward
// spectrum [mass, infinity).
struct TimeWindow {
  GridSpec grid;  // 1d time grid
  std::vector<cplx> values;
};

struct KmsCheckResult {
  cplx lhs{};
  cplx rhs{};
  double residual = 0.0;
};

KmsCheckResult kms_identity_check(const TwoPointFunction& tp,
                                  const TestFunction& f,
                                  const TestFunction& g, const TimeWindow& h);

// Imaginary-time continuation G(t) = e^{-tH} psi(f) in mode coefficients:
// plus_n = e^{-t omega_n} sqrt(wp_n) F(+omega_n, +k_n),
// minus_n = e^{+t omega_n} sqrt(wm_n) F(-omega_n, -k_n).
// Admissible strip: t in (0, beta/2) for KMS, any t > 0 for ground. The
// growing factor is evaluated on a combined log scale and errors out past
// the overflow cap instead of returning inf.
struct ContinuedVector {
  double t = 0.0;
  std::vector<cplx> plus, minus;
};

ContinuedVector imaginary_time_continuation(const TwoPointFunction& tp,
                                            const TestFunction& f, double t);

// The boundary value t = 0: the one-particle vector psi(f) itself.
ContinuedVector psi_coefficients(const TwoPointFunction& tp,
                                 const TestFunction& f);

double continued_norm(const ContinuedVector& v);
double continued_distance(const ContinuedVector& a, const ContinuedVector& b);

// Pointwise evaluation of G at Euclidean offset dt >= 0 on top of v.t and
// spacetime point (x0, x1); feeds the elliptic-system stencil checks
// (d^2/dt^2 + d^2/dx0^2) G = 0 and (id x P) G = 0.
cplx continued_eval(const ModeSumParams& mode, const ContinuedVector& v,
                    double dt, double x0, double x1);

}  // namespace microloc
