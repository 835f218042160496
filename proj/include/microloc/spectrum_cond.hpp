#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "microloc/geometry.hpp"
#include "microloc/kg_field.hpp"
#include "microloc/wavefront.hpp"

namespace microloc {

// Membership machinery for the graph-induced covector cones Gamma_m, the
// Hadamard frequency-split check on scanned wavefront lattices, the
// one-particle equivalence suite tying the two together, and the tube cones
// whose boundary values feed the analytic estimators.

// ---------------------------------------------------------------------------
// Gamma_m covector tuples
// ---------------------------------------------------------------------------

// ((x_1,k_1),...,(x_m,k_m)); at least one covector nonzero.
struct CovectorTuple {
  std::vector<CovectorPoint> entries;
};

// chart containment and the not-all-zero invariant; throws on violation
void validate_tuple(const Spacetime1p1& st, const CovectorTuple& tuple);

// Finite multigraph on vertices 1..m. Edges are stored directed and the
// inverse of every stored edge is stored too; validate enforces that.
// Self loops are legal as graphs (their curves are trivial and their
// covector contributions cancel), so witnesses never need them.
struct MultiGraph {
  int m = 0;
  struct Edge {
    int s = 1, r = 1;
  };
  std::vector<Edge> edges;
};

void validate_graph(const MultiGraph& g);

// One undirected witness edge of an immersion, recorded for s < r with the
// covector value at both endpoints. The curve realizing it is either the
// trivial curve (coincident endpoints) or the connecting causal geodesic;
// on the flat charts any curve transports covectors identically, so the
// descriptor stays implicit and k_source = k_range there.
struct ImmersedEdge {
  int s = 1, r = 2;
  bool trivial = false;
  std::array<double, 2> k_source{};  // k_e at x_s, future-causal
  std::array<double, 2> k_range{};   // k_e at x_r, future-causal
};

struct Immersion {
  std::vector<std::array<double, 2>> x;  // vertex points, index = label - 1
  std::vector<ImmersedEdge> edges;
};

// the underlying multigraph: every witness edge in both directions
MultiGraph graph_of(const Immersion& im, int m);

// endpoint, orientation and cone invariants of a witness; throws on failure
void validate_immersion(const Spacetime1p1& st, const Immersion& im,
                        double tol = 1e-9);

enum class GammaVerdict { member, non_member, undecided };

std::string verdict_name(GammaVerdict v);

struct GammaConfig {
  double tol = 1e-9;      // relative feasibility tolerance
  PredictConfig predict;  // geodesic shooting between distinct curved points
};

struct GammaReport {
  GammaVerdict verdict = GammaVerdict::undecided;
  Immersion witness;        // member verdicts carry the realizing immersion
  std::string obstruction;  // non-member verdicts name the certificate
  double residual = 0.0;    // relative cone-decomposition residual
  bool exhaustive = false;  // true when the searched family is complete
};

// Decide whether the tuple lies in Gamma_m, m = entries.size() <= 4.
//
// The vertex equations k_i = -sum over source-i edges of k_e(x_i) are,
// after eliminating graph multiplicity through cone convexity, a feasibility
// problem over edge covectors drawn from the future causal cone. On the
// flat charts parallel transport is trivial for every piecewise smooth
// curve, so the two null generators per point pair represent the search
// space exactly: feasibility (solved as nonnegative least squares) decides
// membership completely, and an infeasibility certificate y with
// y . column <= 0 for all columns and y . k > 0 certifies non-membership.
// On curved charts members are certified from trivial curves at coincident
// points and from shot null geodesics between distinct points; the only
// non-member certificates are transport-independent cone obstructions
// (the first covector must be past-causal or zero, the last future-causal
// or zero). Everything else is undecided.
GammaReport gamma_member(const Spacetime1p1& st, const CovectorTuple& tuple,
                         const GammaConfig& cfg = {});

struct AdditivityReport {
  int checked = 0;
  int violations = 0;  // certified non-member sums; must stay zero
  int undecided = 0;
  int degenerate = 0;  // all-zero covector sums, excluded by the invariant
  std::vector<std::pair<std::size_t, std::size_t>> violating_pairs;
};

// Sums of member pairs with a common base-point list stay members. Input
// tuples must be certified members; pairs with matching base points are
// drawn in index order up to max_pairs.
AdditivityReport gamma_additivity_check(
    const Spacetime1p1& st, const std::vector<CovectorTuple>& members,
    int max_pairs = 200, const GammaConfig& cfg = {});

// JSON forms used by the command line tools. A tuple is
// {"entries": [{"x": [t, x], "k": [kt, kx]}, ...]}; a library file is either
// a JSON array of tuples or {"tuples": [...]}. Reports serialize the
// verdict, residual and obstruction, plus the witnessing immersion for
// member verdicts.
CovectorTuple tuple_from_json(const std::string& text);
std::vector<CovectorTuple> tuple_library_from_json(const std::string& text);
std::string gamma_report_json(const GammaReport& rep);

// ---------------------------------------------------------------------------
// Lattice set matching and the Hadamard check
// ---------------------------------------------------------------------------

// the singular entries of a scan, as stable indices into est.reports
std::vector<std::size_t> singular_indices(const WavefrontEstimate& est);

struct SetMatchReport {
  std::vector<std::size_t> unmatched_a;  // indices into a with no b partner
  std::vector<std::size_t> unmatched_b;
  std::size_t a_count = 0, b_count = 0;
  double x_radius = 0.0, dir_angle = 0.0;  // dilation actually used
};

// Two-sided matching of singular entries between two scans on one lattice,
// dilated by one lattice cell: entries match when their points differ by at
// most x_radius in every chart factor (periodicity respected) and their
// directions by at most dir_angle. Radii <= 0 self-calibrate to 1.05 times
// the smallest positive lattice spacing.
SetMatchReport match_singular_sets(const Spacetime1p1& st,
                                   const WavefrontEstimate& a,
                                   std::span<const std::size_t> a_idx,
                                   const WavefrontEstimate& b,
                                   std::span<const std::size_t> b_idx,
                                   double x_radius = 0.0,
                                   double dir_angle = 0.0);

enum class HadamardVerdict { hadamard, not_hadamard, undecided };

std::string verdict_name(HadamardVerdict v);

struct HadamardReport {
  HadamardVerdict verdict = HadamardVerdict::undecided;
  SetMatchReport match;  // a: detected state singulars, b: future-selected
                         // commutator singulars
  std::size_t future_selected = 0;  // size of the predicted target set
};

// Hadamard condition on scanned lattices: the singular set of the state
// pairing must equal, two-sidedly up to one lattice cell, the half of the
// commutator singular set whose second covector factor is future-pointing.
// Both scans must share one lattice (identical points and directions in
// identical order); anything else throws.
HadamardReport hadamard_check(const Spacetime1p1& st,
                              const WavefrontEstimate& wf_state,
                              const WavefrontEstimate& wf_commutator);

// ---------------------------------------------------------------------------
// One-particle equivalence suite
// ---------------------------------------------------------------------------

struct MuscConfig {
  Spacetime1p1 st;    // cylinder chart of the state
  GridSpec chart;     // 2d bookkeeping chart, x extent = st.L
  std::vector<std::vector<double>> psi_points;   // 2d scan points
  std::vector<std::vector<double>> pair_points;  // 4d scan points (x1, x2)
  DirectionGrid dirs;                            // 2d direction grid
  SmoothWfConfig smooth;
  AnalyticWfConfig analytic;
  bool run_analytic = true;
  double margin_scale = 1.05;  // one-lattice-cell slack factor
};

struct MuscRow {
  bool wf_in_vplus = false;      // est-WF(psi) inside the future causal cone
  bool wf_equals_nullplus = false;  // est-WF(psi) = future null set on lattice
  bool hadamard = false;            // hadamard_check verdict on the pairing
  bool consistent() const {
    return wf_in_vplus == wf_equals_nullplus && wf_equals_nullplus == hadamard;
  }
};

struct MuscReport {
  MuscRow smooth;
  MuscRow analytic;
  bool analytic_ran = false;
  bool psi_wf_nonempty = false;  // sanity: a nonzero state always registers
  HadamardReport had_smooth, had_analytic;
  bool pass = false;  // rows internally all-equal (per executed mode)
};

// Scans the one-particle vector and the pairing of the given state on the
// configured lattice and reports the three equivalent conditions per mode:
// cone containment, null-future equality, Hadamard frequency split. The
// truth values need not be true (spoiled states give all-false); the pass
// condition is that each executed row is internally all-equal.
MuscReport musc_equivalence_suite(const TwoPointFunction& tp,
                                  const MuscConfig& cfg);

// est-WF(w2) united with est-WF of the transposed pairing, compared against
// est-WF of the commutator distribution on the same lattice.
struct UnionCheckReport {
  SetMatchReport match;
  bool equal = false;
};

UnionCheckReport commutator_union_check(const TwoPointFunction& tp,
                                        const MuscConfig& cfg);

// ---------------------------------------------------------------------------
// Tube cones
// ---------------------------------------------------------------------------

// The convexity cone of the forward tube in m slots and its polar under the
// Euclidean pairing on (R^2)^m: C consists of slot chains with future
// timelike vector increments, the polar of covector chains with future
// causal trailing partial sums and zero total.
struct TubeCones {
  int m = 0;

  // y in (R^2)^m, flattened (t, x) per slot; margin > 0 demands the
  // increments stay strictly inside the open cone by that amount
  bool contains_c(std::span<const double> y, double margin = 0.0) const;

  // k in (R^2)^m covectors; tol absorbs roundoff on the boundary sums
  bool contains_polar(std::span<const double> k, double tol = 1e-9) const;

  // generator presentation of closure(C): the free first slot (both signs
  // of both axes, repeated across slots) plus null increment tails
  std::vector<std::vector<double>> c_generators() const;
};

TubeCones tube_cone(int m);

}  // namespace microloc
