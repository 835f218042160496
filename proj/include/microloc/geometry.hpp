#pragma once

#include <array>
#include <string>
#include <vector>

#include "microloc/util.hpp"

namespace microloc {

// Analytic 1+1 dimensional Lorentzian charts, signature (+,-). The catalog
// metrics are diagonal with closed-form components, inverses, derivatives
// and scalar curvature, so every geometric quantity evaluates to machine
// precision. The curved profiles share the shape f(x) = base + amp * sin(x).
enum class MetricTag {
  minkowski,    // diag(1, -1) on a rectangle
  cylinder,     // diag(1, -1), x periodic with circumference L
  conformal,    // Omega(x)^2 * diag(1, -1)
  static_slab,  // diag(a(x)^2, -1)
};

// symmetric 2x2 tensor in chart indices (t, x)
struct Sym2 {
  double tt = 0.0, tx = 0.0, xx = 0.0;
};

struct Spacetime1p1 {
  MetricTag tag = MetricTag::minkowski;
  double L = 2.0 * kPi;            // circumference, cylinder only
  double base = 1.0, amp = 0.0;    // profile coefficients, curved tags only
  double t_lo = -3.0, t_hi = 3.0;  // chart rectangle
  double x_lo = -3.0, x_hi = 3.0;  // ignored for periodic x (x in [0, L))

  bool periodic_x() const { return tag == MetricTag::cylinder; }
  double profile(double x) const;    // f(x) = base + amp sin x
  double dprofile(double x) const;   // f'
  double d2profile(double x) const;  // f''

  Sym2 metric(double t, double x) const;  // g_{mu nu}
  Sym2 ginv(double t, double x) const;    // g^{mu nu}
  // d g^{mu nu} / d x^axis, axis 0 = t, 1 = x (closed form, catalog
  // metrics are t-independent so axis 0 vanishes identically)
  Sym2 dginv(double t, double x, int axis) const;
  // scalar curvature of the Levi-Civita connection; conventions fixed by
  // R_{tt} = f''/2 - f'^2/(4f) for diag(f, -1), giving R = 2 a''/a for the
  // static slab and R = 2 (Omega'' Omega - Omega'^2)/Omega^4 conformally
  double curvature(double t, double x) const;

  double diameter() const;        // chart diagonal in coordinate norm
  double wrap_x(double x) const;  // reduce a periodic coordinate to [0, L)
  bool contains(double t, double x) const;
  // coordinate distance respecting spatial periodicity
  double chart_dist(const std::array<double, 2>& p,
                    const std::array<double, 2>& q) const;
};

Spacetime1p1 st_minkowski();
Spacetime1p1 st_cylinder(double L);
// Omega = base + amp sin x, requires base > |amp|
Spacetime1p1 st_conformal(double base, double amp);
// a = base + amp sin x, requires base > |amp|
Spacetime1p1 st_static(double base, double amp);

// Catalog loader. Accepts {"tag": "minkowski" | "cylinder" | "conformal" |
// "static", ...} with "L" for the cylinder, "base"/"amp" for the curved
// tags, and optional "t_range"/"x_range" arrays overriding the rectangle.
Spacetime1p1 spacetime_from_json(const std::string& text);

struct CovectorPoint {
  std::array<double, 2> x{};  // chart point (t, x)
  std::array<double, 2> k{};  // covector components (k_t, k_x)
};

enum class ConeClass {
  future_timelike,
  past_timelike,
  future_null,
  past_null,
  spacelike,
  zero,
};

std::string cone_name(ConeClass c);
bool is_future_causal(ConeClass c);
bool is_past_causal(ConeClass c);

// g^{mu nu} k_mu k_nu at p.x
double principal_symbol(const Spacetime1p1& st, const CovectorPoint& p);

// Classification by the sign of the principal symbol, with |sigma| <=
// tol * |k|^2 counted as null; time direction by the sign of g^{t nu} k_nu
// (dt is the future orientation).
ConeClass cone_classify(const Spacetime1p1& st, const CovectorPoint& p,
                        double tol = 1e-10);

// The two future null unit covectors followed by their negatives, in a
// fixed enumeration order (slope-sorted). Every catalog metric has exactly
// two null rays through each point.
std::array<std::array<double, 2>, 4> null_covectors(const Spacetime1p1& st,
                                                    double t, double x);

struct KGOperator {
  Spacetime1p1 st;
  double mass2 = 1.0;  // m^2 >= 0
  double kappa = 0.0;  // curvature coupling
  double curvature(double t, double x) const { return st.curvature(t, x); }
};

// true iff |g^{mu nu} k_mu k_nu| <= tol * |k|^2; throws on k = 0
bool char_set_test(const KGOperator& op, const CovectorPoint& p,
                   double tol = 1e-10);

struct FlowConfig {
  double step = 0.0;        // 0 picks chart diameter / 4096
  double drift_tol = 1e-6;  // relative null-constraint drift allowed per step
};

struct Trajectory {
  std::vector<CovectorPoint> pts;  // start included; x wrapped on cylinders
  std::vector<double> params;      // affine parameter at each point
  bool exited = false;             // left the chart before the span end
};

// Hamilton flow of H = (1/2) g^{mu nu} k_mu k_nu from a characteristic
// start, fixed-step RK4 with the null constraint reprojected onto the cone
// after every step (k_t resolved from the quadratic, nearest root). The
// k component of the flow is the parallel transport of the covector. A
// negative span integrates backward.
Trajectory bicharacteristic_flow(const KGOperator& op,
                                 const CovectorPoint& start, double span,
                                 const FlowConfig& cfg = {});

// covector pair ((x1, -k1), (x2, k2)) in the two-point singular support
struct WfPair {
  CovectorPoint a, b;
};

struct PredictConfig {
  double span = 0.0;     // 0 picks 3 * chart diameter
  double hit_tol = 0.0;  // 0 picks 2 * chart diameter / 4096
  FlowConfig flow;
  int jobs = 1;
};

// Predicted wavefront pairs of the commutator function between x1 and x2:
// null bicharacteristics shot from x1 along all four null covectors, hits
// within hit_tol of x2 recorded with the transported covector, each hit
// emitted in both traversal orientations, deduplicated. Coincident points
// contribute the diagonal pairs for all four null covectors. Timelike
// separated points yield the empty set.
std::vector<WfPair> wf_commutator_predict(const KGOperator& op,
                                          const std::array<double, 2>& x1,
                                          const std::array<double, 2>& x2,
                                          const PredictConfig& cfg = {});

}  // namespace microloc
