#include "microloc/spectrum_cond.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <utility>

#include "json.hpp"
#include "microloc/dist.hpp"

namespace microloc {

namespace {

double knorm(const std::array<double, 2>& k) { return std::hypot(k[0], k[1]); }

bool flat_chart(const Spacetime1p1& st) {
  return st.tag == MetricTag::minkowski || st.tag == MetricTag::cylinder;
}

double point_eps(const Spacetime1p1& st) { return 1e-12 * (1.0 + st.diameter()); }

// ---------------------------------------------------------------------------
// Nonnegative least squares, Lawson-Hanson active set. The cone feasibility
// problems here have at most eight rows and a few dozen columns, so a dense
// QR factorization per passive set is cheap.
// ---------------------------------------------------------------------------

struct NnlsOut {
  Eigen::VectorXd x;
  Eigen::VectorXd r;  // b - A x at the final iterate
  double rnorm = 0.0;
  bool converged = false;
};

NnlsOut nnls_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const Eigen::Index n = A.cols();
  NnlsOut out;
  out.x = Eigen::VectorXd::Zero(n);
  if (n == 0) {
    out.r = b;
    out.rnorm = b.norm();
    out.converged = true;
    return out;
  }
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  const double wtol = 1e-12 * std::max(1.0, b.norm());
  const int outer_max = 3 * static_cast<int>(n) + 30;
  for (int outer = 0; outer < outer_max; ++outer) {
    const Eigen::VectorXd r = b - A * out.x;
    const Eigen::VectorXd w = A.transpose() * r;
    Eigen::Index t = -1;
    double wbest = wtol;
    for (Eigen::Index j = 0; j < n; ++j)
      if (!passive[static_cast<std::size_t>(j)] && w(j) > wbest) {
        wbest = w(j);
        t = j;
      }
    if (t < 0) {
      out.r = r;
      out.rnorm = r.norm();
      out.converged = true;
      return out;
    }
    passive[static_cast<std::size_t>(t)] = true;
    for (Eigen::Index inner = 0; inner <= n + 1; ++inner) {
      std::vector<Eigen::Index> P;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)]) P.push_back(j);
      Eigen::MatrixXd Ap(A.rows(), static_cast<Eigen::Index>(P.size()));
      for (std::size_t c = 0; c < P.size(); ++c) {
        Ap.col(static_cast<Eigen::Index>(c)) = A.col(P[c]);
      }
      const Eigen::VectorXd z = Ap.colPivHouseholderQr().solve(b);
      bool all_pos = true;
      for (Eigen::Index c = 0; c < z.size(); ++c)
        if (z(c) <= 0.0) all_pos = false;
      if (all_pos) {
        out.x.setZero();
        for (std::size_t c = 0; c < P.size(); ++c)
          out.x(P[c]) = z(static_cast<Eigen::Index>(c));
        break;
      }
      double alpha = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < P.size(); ++c) {
        const double zc = z(static_cast<Eigen::Index>(c));
        if (zc > 0.0) continue;
        const double xc = out.x(P[c]);
        const double denom = xc - zc;
        if (denom > 0.0) alpha = std::min(alpha, xc / denom);
      }
      if (!std::isfinite(alpha)) alpha = 0.0;
      for (std::size_t c = 0; c < P.size(); ++c) {
        const Eigen::Index j = P[c];
        out.x(j) += alpha * (z(static_cast<Eigen::Index>(c)) - out.x(j));
        if (z(static_cast<Eigen::Index>(c)) <= 0.0 && out.x(j) <= 1e-14) {
          out.x(j) = 0.0;
          passive[static_cast<std::size_t>(j)] = false;
        }
      }
    }
  }
  out.r = b - A * out.x;
  out.rnorm = out.r.norm();
  out.converged = false;
  return out;
}

// One candidate edge between vertex slots i < j with its covector value at
// both endpoints. The stacked column it contributes is minus ks at slot i
// and plus kr at slot j.
struct GenCol {
  int i = 0, j = 0;
  std::array<double, 2> ks{}, kr{};
  bool coincident = false;
};

// Edge generator family. In two dimensions the closed future causal cone is
// the convex hull of its two null rays, so on the flat charts the two global
// null covectors per vertex pair represent every admissible edge covector
// exactly and the coefficient search is complete. On curved charts the
// family holds the trivially transported null covectors at coincident
// points plus the parallel transports along shot null geodesics between
// distinct points, which certifies members but cannot exhaust arbitrary
// piecewise smooth curves.
std::vector<GenCol> member_generators(const Spacetime1p1& st,
                                      const std::vector<CovectorPoint>& e,
                                      const GammaConfig& cfg) {
  const int m = static_cast<int>(e.size());
  std::vector<GenCol> gens;
  if (flat_chart(st)) {
    const auto nc = null_covectors(st, e[0].x[0], e[0].x[1]);
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) {
        const bool coin = st.chart_dist(e[static_cast<std::size_t>(i)].x,
                                        e[static_cast<std::size_t>(j)].x) <=
                          point_eps(st);
        gens.push_back({i, j, nc[0], nc[0], coin});
        gens.push_back({i, j, nc[1], nc[1], coin});
      }
    return gens;
  }
  const KGOperator op{st, 1.0, 0.0};
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      const auto& xi = e[static_cast<std::size_t>(i)].x;
      const auto& xj = e[static_cast<std::size_t>(j)].x;
      const auto pairs = wf_commutator_predict(op, xi, xj, cfg.predict);
      for (const auto& pr : pairs) {
        // keep the orientation whose covector field is future causal from
        // slot i to slot j; the shooting emits both traversals
        if (!is_past_causal(cone_classify(st, pr.a)) ||
            !is_future_causal(cone_classify(st, pr.b)))
          continue;
        const std::array<double, 2> ks{-pr.a.k[0], -pr.a.k[1]};
        const bool coin =
            st.chart_dist(xi, xj) <= point_eps(st) &&
            knorm({ks[0] - pr.b.k[0], ks[1] - pr.b.k[1]}) <= 1e-12;
        gens.push_back({i, j, ks, pr.b.k, coin});
      }
    }
  return gens;
}

}  // namespace

void validate_tuple(const Spacetime1p1& st, const CovectorTuple& tuple) {
  require(!tuple.entries.empty(), "gamma: empty covector tuple");
  double kmax = 0.0;
  for (const auto& p : tuple.entries) {
    require(st.contains(p.x[0], p.x[1]), "gamma: point outside the chart");
    kmax = std::max(kmax, knorm(p.k));
  }
  require(kmax > 0.0, "gamma: all covectors vanish");
}

void validate_graph(const MultiGraph& g) {
  require(g.m >= 1, "graph: needs at least one vertex");
  std::map<std::pair<int, int>, int> count;
  for (const auto& ed : g.edges) {
    require(ed.s >= 1 && ed.s <= g.m && ed.r >= 1 && ed.r <= g.m,
            "graph: edge endpoint out of range");
    ++count[{ed.s, ed.r}];
  }
  for (const auto& [key, c] : count) {
    const auto it = count.find({key.second, key.first});
    require(it != count.end() && it->second == c,
            "graph: directed edges must close under inversion");
  }
}

MultiGraph graph_of(const Immersion& im, int m) {
  MultiGraph g;
  g.m = m;
  for (const auto& e : im.edges) {
    g.edges.push_back({e.s, e.r});
    g.edges.push_back({e.r, e.s});
  }
  return g;
}

void validate_immersion(const Spacetime1p1& st, const Immersion& im,
                        double tol) {
  const int m = static_cast<int>(im.x.size());
  require(m >= 1, "immersion: no vertices");
  for (const auto& x : im.x)
    require(st.contains(x[0], x[1]), "immersion: vertex outside the chart");
  const bool flat = flat_chart(st);
  for (const auto& e : im.edges) {
    require(e.s >= 1 && e.r >= 1 && e.s < e.r && e.r <= m,
            "immersion: edges must run from a smaller to a larger label");
    const auto& xs = im.x[static_cast<std::size_t>(e.s - 1)];
    const auto& xr = im.x[static_cast<std::size_t>(e.r - 1)];
    const double kscale = knorm(e.k_source) + knorm(e.k_range);
    const std::array<double, 2> diff{e.k_source[0] - e.k_range[0],
                                     e.k_source[1] - e.k_range[1]};
    if (e.trivial) {
      require(st.chart_dist(xs, xr) <= tol * (1.0 + st.diameter()),
              "immersion: trivial curve between distinct points");
      require(knorm(diff) <= tol * (1.0 + kscale),
              "immersion: trivial curve must transport identically");
    }
    if (flat)
      require(knorm(diff) <= tol * (1.0 + kscale),
              "immersion: flat transport must preserve the covector");
    require(is_future_causal(cone_classify(st, {xs, e.k_source})),
            "immersion: edge covector not future causal at its source");
    require(is_future_causal(cone_classify(st, {xr, e.k_range})),
            "immersion: edge covector not future causal at its range");
  }
}

std::string verdict_name(GammaVerdict v) {
  switch (v) {
    case GammaVerdict::member: return "member";
    case GammaVerdict::non_member: return "non-member";
    case GammaVerdict::undecided: return "undecided";
  }
  return "undecided";
}

std::string verdict_name(HadamardVerdict v) {
  switch (v) {
    case HadamardVerdict::hadamard: return "hadamard";
    case HadamardVerdict::not_hadamard: return "not-hadamard";
    case HadamardVerdict::undecided: return "undecided";
  }
  return "undecided";
}

GammaReport gamma_member(const Spacetime1p1& st, const CovectorTuple& tuple,
                         const GammaConfig& cfg) {
  validate_tuple(st, tuple);
  const auto& e = tuple.entries;
  const int m = static_cast<int>(e.size());
  require(m <= 4, "gamma: tuples of up to four covector points");
  const bool flat = flat_chart(st);

  GammaReport rep;
  rep.exhaustive = flat;

  double scale = 0.0;
  for (const auto& p : e) scale = std::max(scale, knorm(p.k));

  // Transport independent obstructions. Every vertex equation writes the
  // first covector as a negative sum of future causal covectors and the
  // last as a positive one, on any metric; on flat charts transport is
  // trivial for every curve, so the covectors must additionally sum to zero.
  std::string obstruction;
  const auto c1 = cone_classify(st, e.front());
  if (!(is_past_causal(c1) || c1 == ConeClass::zero))
    obstruction = "first covector is neither past causal nor zero";
  if (obstruction.empty()) {
    const auto cm = cone_classify(st, e.back());
    if (!(is_future_causal(cm) || cm == ConeClass::zero))
      obstruction = "last covector is neither future causal nor zero";
  }
  if (obstruction.empty() && flat) {
    std::array<double, 2> total{};
    for (const auto& p : e) {
      total[0] += p.k[0];
      total[1] += p.k[1];
    }
    if (knorm(total) > cfg.tol * scale)
      obstruction = "covector sum does not vanish on a flat chart";
  }

  // Cone decomposition search: stack the vertex equations and ask for a
  // nonnegative combination of the edge generator columns.
  const auto gens = member_generators(st, e, cfg);
  Eigen::VectorXd b(2 * m);
  for (int i = 0; i < m; ++i) {
    b(2 * i) = e[static_cast<std::size_t>(i)].k[0];
    b(2 * i + 1) = e[static_cast<std::size_t>(i)].k[1];
  }
  const double bnorm = b.norm();
  Eigen::MatrixXd A =
      Eigen::MatrixXd::Zero(2 * m, static_cast<Eigen::Index>(gens.size()));
  for (std::size_t c = 0; c < gens.size(); ++c) {
    const auto& g = gens[c];
    const Eigen::Index cc = static_cast<Eigen::Index>(c);
    A(2 * g.i, cc) -= g.ks[0];
    A(2 * g.i + 1, cc) -= g.ks[1];
    A(2 * g.j, cc) += g.kr[0];
    A(2 * g.j + 1, cc) += g.kr[1];
  }
  const auto sol = nnls_solve(A, b / bnorm);
  rep.residual = sol.rnorm;

  bool member_found = false;
  if (sol.converged && sol.rnorm <= cfg.tol) {
    // Assemble the witness. Generators with identical endpoint covectors
    // transport trivially, so all of them for one vertex pair merge into a
    // single edge by cone convexity; geodesic columns stay separate.
    Immersion im;
    im.x.reserve(e.size());
    for (const auto& p : e) im.x.push_back(p.x);
    std::map<std::pair<int, int>, ImmersedEdge> merged;
    std::vector<ImmersedEdge> transported;
    for (std::size_t c = 0; c < gens.size(); ++c) {
      const double cv = sol.x(static_cast<Eigen::Index>(c)) * bnorm;
      if (sol.x(static_cast<Eigen::Index>(c)) <= 1e-12) continue;
      const auto& g = gens[c];
      ImmersedEdge ed;
      ed.s = g.i + 1;
      ed.r = g.j + 1;
      ed.trivial = g.coincident;
      ed.k_source = {cv * g.ks[0], cv * g.ks[1]};
      ed.k_range = {cv * g.kr[0], cv * g.kr[1]};
      if (g.ks == g.kr) {
        auto [it, fresh] = merged.try_emplace({g.i, g.j}, ed);
        if (!fresh) {
          it->second.k_source[0] += ed.k_source[0];
          it->second.k_source[1] += ed.k_source[1];
          it->second.k_range = it->second.k_source;
        }
      } else {
        transported.push_back(ed);
      }
    }
    for (auto& [key, ed] : merged) im.edges.push_back(ed);
    for (auto& ed : transported) im.edges.push_back(ed);

    // verify the witness independently of the solver
    std::vector<std::array<double, 2>> sum(
        static_cast<std::size_t>(m), std::array<double, 2>{0.0, 0.0});
    for (const auto& ed : im.edges) {
      sum[static_cast<std::size_t>(ed.s - 1)][0] -= ed.k_source[0];
      sum[static_cast<std::size_t>(ed.s - 1)][1] -= ed.k_source[1];
      sum[static_cast<std::size_t>(ed.r - 1)][0] += ed.k_range[0];
      sum[static_cast<std::size_t>(ed.r - 1)][1] += ed.k_range[1];
    }
    double dev = 0.0;
    for (int i = 0; i < m; ++i) {
      const auto& ki = e[static_cast<std::size_t>(i)].k;
      dev = std::max(dev, knorm({sum[static_cast<std::size_t>(i)][0] - ki[0],
                                 sum[static_cast<std::size_t>(i)][1] - ki[1]}));
    }
    bool ok = dev <= 10.0 * cfg.tol * std::max(1.0, scale);
    try {
      validate_immersion(st, im, cfg.tol);
      validate_graph(graph_of(im, m));
    } catch (const std::invalid_argument&) {
      ok = false;
    }
    if (ok) {
      member_found = true;
      rep.witness = std::move(im);
    }
  }

  bool farkas = false;
  if (flat && !member_found && sol.converged && sol.rnorm > cfg.tol) {
    // Infeasibility certificate: at the least squares optimum over the cone
    // the residual itself separates, pairing nonpositively with every
    // generator column and positively with the target.
    double worst = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < A.cols(); ++c)
      worst = std::max(
          worst, A.col(c).dot(sol.r) / std::max(1.0, A.col(c).norm()));
    const double rb = sol.r.dot(b / bnorm);
    if ((gens.empty() || worst <= 1e-8 * sol.rnorm) &&
        rb >= 0.5 * sol.rnorm * sol.rnorm) {
      farkas = true;
      if (obstruction.empty())
        obstruction = "cone decomposition infeasible: separating functional verified";
    }
  }

  const bool non_member_found = farkas || !obstruction.empty();
  if (member_found && non_member_found)
    throw std::logic_error(
        "gamma: member witness and non-membership certificate both verified "
        "for one tuple");
  if (member_found) {
    rep.verdict = GammaVerdict::member;
    return rep;
  }
  if (non_member_found) {
    rep.verdict = GammaVerdict::non_member;
    rep.obstruction = obstruction;
    return rep;
  }
  rep.verdict = GammaVerdict::undecided;
  return rep;
}

AdditivityReport gamma_additivity_check(const Spacetime1p1& st,
                                        const std::vector<CovectorTuple>& members,
                                        int max_pairs, const GammaConfig& cfg) {
  AdditivityReport rep;
  const double near = point_eps(st);
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (rep.checked >= max_pairs) break;
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      if (rep.checked >= max_pairs) break;
      const auto& a = members[i];
      const auto& bt = members[j];
      if (a.entries.size() != bt.entries.size()) continue;
      bool same = true;
      for (std::size_t l = 0; same && l < a.entries.size(); ++l)
        same = st.chart_dist(a.entries[l].x, bt.entries[l].x) <= near;
      if (!same) continue;
      CovectorTuple sum = a;
      double smax = 0.0, kscale = 0.0;
      for (std::size_t l = 0; l < sum.entries.size(); ++l) {
        sum.entries[l].k[0] += bt.entries[l].k[0];
        sum.entries[l].k[1] += bt.entries[l].k[1];
        smax = std::max(smax, knorm(sum.entries[l].k));
        kscale = std::max({kscale, knorm(a.entries[l].k), knorm(bt.entries[l].k)});
      }
      if (smax <= 1e-14 * std::max(1.0, kscale)) {
        ++rep.degenerate;
        continue;
      }
      ++rep.checked;
      const auto g = gamma_member(st, sum, cfg);
      if (g.verdict == GammaVerdict::non_member) {
        ++rep.violations;
        rep.violating_pairs.push_back({i, j});
      } else if (g.verdict == GammaVerdict::undecided) {
        ++rep.undecided;
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// JSON forms
// ---------------------------------------------------------------------------

namespace {

std::array<double, 2> pair_of(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw std::invalid_argument(std::string("tuple json: ") + what +
                                " must be a pair of numbers");
  return {j[0].get<double>(), j[1].get<double>()};
}

CovectorTuple tuple_of(const nlohmann::json& j) {
  const nlohmann::json& entries =
      j.is_object() && j.contains("entries") ? j.at("entries") : j;
  if (!entries.is_array() || entries.empty())
    throw std::invalid_argument("tuple json: needs a nonempty entries array");
  CovectorTuple t;
  for (const auto& ej : entries) {
    if (!ej.is_object() || !ej.contains("x") || !ej.contains("k"))
      throw std::invalid_argument("tuple json: entries need x and k pairs");
    CovectorPoint p;
    p.x = pair_of(ej.at("x"), "x");
    p.k = pair_of(ej.at("k"), "k");
    t.entries.push_back(p);
  }
  return t;
}

nlohmann::json parse_json(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("tuple json: ") + e.what());
  }
}

}  // namespace

CovectorTuple tuple_from_json(const std::string& text) {
  return tuple_of(parse_json(text));
}

std::vector<CovectorTuple> tuple_library_from_json(const std::string& text) {
  const nlohmann::json j = parse_json(text);
  const nlohmann::json& arr =
      j.is_object() && j.contains("tuples") ? j.at("tuples") : j;
  if (!arr.is_array())
    throw std::invalid_argument("tuple json: library must be an array");
  std::vector<CovectorTuple> out;
  out.reserve(arr.size());
  for (const auto& tj : arr) out.push_back(tuple_of(tj));
  return out;
}

std::string gamma_report_json(const GammaReport& rep) {
  nlohmann::json j;
  j["verdict"] = verdict_name(rep.verdict);
  j["residual"] = rep.residual;
  j["exhaustive"] = rep.exhaustive;
  if (!rep.obstruction.empty()) j["obstruction"] = rep.obstruction;
  if (rep.verdict == GammaVerdict::member) {
    nlohmann::json w;
    w["x"] = rep.witness.x;
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : rep.witness.edges)
      edges.push_back({{"s", e.s},
                       {"r", e.r},
                       {"trivial", e.trivial},
                       {"k_source", e.k_source},
                       {"k_range", e.k_range}});
    w["edges"] = edges;
    j["witness"] = w;
  }
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Lattice set matching
// ---------------------------------------------------------------------------

std::vector<std::size_t> singular_indices(const WavefrontEstimate& est) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < est.reports.size(); ++i)
    if (est.reports[i].verdict == WfVerdict::singular) out.push_back(i);
  return out;
}

namespace {

double angle_between(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    dot += a[c] * b[c];
    na += a[c] * a[c];
    nb += b[c] * b[c];
  }
  const double denom = std::sqrt(na * nb);
  if (denom == 0.0) return 0.0;
  return std::acos(std::clamp(dot / denom, -1.0, 1.0));
}

// distance between scan points, taken factorwise on doubled charts
double factor_dist(const Spacetime1p1& st, std::span<const double> a,
                   std::span<const double> b) {
  if (a.size() == 2) return st.chart_dist({a[0], a[1]}, {b[0], b[1]});
  const double d1 = st.chart_dist({a[0], a[1]}, {b[0], b[1]});
  const double d2 = st.chart_dist({a[2], a[3]}, {b[2], b[3]});
  return std::max(d1, d2);
}

}  // namespace

SetMatchReport match_singular_sets(const Spacetime1p1& st,
                                   const WavefrontEstimate& a,
                                   std::span<const std::size_t> a_idx,
                                   const WavefrontEstimate& b,
                                   std::span<const std::size_t> b_idx,
                                   double x_radius, double dir_angle) {
  const auto check_dims = [](const WavefrontEstimate& est) {
    for (const auto& r : est.reports)
      require((r.x.size() == 2 || r.x.size() == 4) &&
                  r.khat.size() == r.x.size(),
              "set match: scans must live on a 2d chart or its double");
  };
  check_dims(a);
  check_dims(b);

  SetMatchReport rep;
  rep.a_count = a_idx.size();
  rep.b_count = b_idx.size();

  if (x_radius <= 0.0 || dir_angle <= 0.0) {
    // one lattice cell, read off from the scans themselves
    double min_dist = std::numeric_limits<double>::infinity();
    double min_ang = std::numeric_limits<double>::infinity();
    const auto feed = [&](const WavefrontEstimate& ea, const WavefrontEstimate& eb) {
      for (const auto& ra : ea.reports)
        for (const auto& rb : eb.reports) {
          if (ra.x.size() != rb.x.size()) continue;
          const double d = factor_dist(st, ra.x, rb.x);
          if (d > 0.0) min_dist = std::min(min_dist, d);
          const double ang = angle_between(ra.khat, rb.khat);
          if (ang > 1e-12) min_ang = std::min(min_ang, ang);
        }
    };
    feed(a, a);
    feed(b, b);
    feed(a, b);
    if (x_radius <= 0.0)
      x_radius = std::isfinite(min_dist) ? 1.05 * min_dist : point_eps(st);
    if (dir_angle <= 0.0) dir_angle = std::isfinite(min_ang) ? 1.05 * min_ang : 1e-9;
  }
  rep.x_radius = x_radius;
  rep.dir_angle = dir_angle;

  const auto matches = [&](const DecayReport& ra, const DecayReport& rb) {
    if (ra.x.size() != rb.x.size()) return false;
    return factor_dist(st, ra.x, rb.x) <= x_radius &&
           angle_between(ra.khat, rb.khat) <= dir_angle;
  };
  for (const std::size_t ia : a_idx) {
    bool hit = false;
    for (const std::size_t ib : b_idx)
      if (matches(a.reports[ia], b.reports[ib])) {
        hit = true;
        break;
      }
    if (!hit) rep.unmatched_a.push_back(ia);
  }
  for (const std::size_t ib : b_idx) {
    bool hit = false;
    for (const std::size_t ia : a_idx)
      if (matches(a.reports[ia], b.reports[ib])) {
        hit = true;
        break;
      }
    if (!hit) rep.unmatched_b.push_back(ib);
  }
  return rep;
}

HadamardReport hadamard_check(const Spacetime1p1& st,
                              const WavefrontEstimate& wf_state,
                              const WavefrontEstimate& wf_commutator) {
  require(wf_state.reports.size() == wf_commutator.reports.size(),
          "hadamard: scans must share one lattice");
  for (std::size_t i = 0; i < wf_state.reports.size(); ++i) {
    const auto& ra = wf_state.reports[i];
    const auto& rb = wf_commutator.reports[i];
    require(ra.x.size() == 4 && ra.khat.size() == 4 && rb.x.size() == 4 &&
                rb.khat.size() == 4,
            "hadamard: needs doubled-chart scans");
    for (int c = 0; c < 4; ++c)
      require(std::abs(ra.x[static_cast<std::size_t>(c)] -
                       rb.x[static_cast<std::size_t>(c)]) <= 1e-12 &&
                  std::abs(ra.khat[static_cast<std::size_t>(c)] -
                           rb.khat[static_cast<std::size_t>(c)]) <= 1e-12,
              "hadamard: scans must share one lattice");
  }

  HadamardReport rep;
  const auto a_idx = singular_indices(wf_state);
  std::vector<std::size_t> b_idx;
  for (const std::size_t i : singular_indices(wf_commutator)) {
    const auto& r = wf_commutator.reports[i];
    const CovectorPoint second{{r.x[2], r.x[3]}, {r.khat[2], r.khat[3]}};
    if (knorm(second.k) > 0.0 &&
        is_future_causal(cone_classify(st, second)))
      b_idx.push_back(i);
  }
  rep.future_selected = b_idx.size();
  rep.match = match_singular_sets(st, wf_state, a_idx, wf_commutator, b_idx);
  if (a_idx.empty() || b_idx.empty())
    rep.verdict = HadamardVerdict::undecided;
  else if (rep.match.unmatched_a.empty() && rep.match.unmatched_b.empty())
    rep.verdict = HadamardVerdict::hadamard;
  else
    rep.verdict = HadamardVerdict::not_hadamard;
  return rep;
}

// ---------------------------------------------------------------------------
// One-particle equivalence suite
// ---------------------------------------------------------------------------

namespace {

ModeSumParams transposed_params(const ModeSumParams& p) {
  ModeSumParams t = p;
  std::swap(t.wp, t.wm);
  return t;
}

// signed weight table of the commutator distribution i E = w2 - transpose(w2)
ModeSumParams commutator_params(const ModeSumParams& p) {
  ModeSumParams c = p;
  for (std::size_t i = 0; i < p.wp.size(); ++i) {
    const double w = p.wp[i] - p.wm[i];
    c.wp[i] = w;
    c.wm[i] = -w;
  }
  return c;
}

WavefrontEstimate run_scan(const HilbertDist& d,
                           const std::vector<std::vector<double>>& pts,
                           const DirectionGrid& dirs, WfMode mode,
                           const MuscConfig& cfg) {
  return mode == WfMode::smooth ? estimate_wf_smooth(d, pts, dirs, cfg.smooth)
                                : estimate_wf_analytic(d, pts, dirs, cfg.analytic);
}

double wrap_angle_diff(double a, double b) {
  return std::abs(std::atan2(std::sin(a - b), std::cos(a - b)));
}

void check_musc_config(const TwoPointFunction& tp, const MuscConfig& cfg) {
  require(cfg.chart.dim() == 2, "musc: the bookkeeping chart must be 2d");
  require(cfg.st.periodic_x() &&
              std::abs(cfg.st.L - tp.mode.L) <= 1e-12 * tp.mode.L,
          "musc: chart circumference must match the state");
  require(cfg.dirs.dim == 2, "musc: directions must be 2d");
  require(!cfg.pair_points.empty(), "musc: no pair scan points");
}

}  // namespace

MuscReport musc_equivalence_suite(const TwoPointFunction& tp,
                                  const MuscConfig& cfg) {
  check_musc_config(tp, cfg);
  require(!cfg.psi_points.empty(), "musc: no vector scan points");

  const auto psi = make_mode_sum_psi(cfg.chart, tp.mode);
  const auto w2 = make_mode_sum_w(tp.mode, cfg.chart);
  const auto ee = make_mode_sum_w(commutator_params(tp.mode), cfg.chart);
  const auto ddirs = doubled_directions(cfg.dirs);
  const double margin = cfg.margin_scale * cfg.dirs.half_angle;

  MuscReport out;
  const auto run_row = [&](WfMode mode, MuscRow& row, HadamardReport& had,
                           bool& nonempty) {
    const auto est = run_scan(psi, cfg.psi_points, cfg.dirs, mode, cfg);
    const auto sing = singular_indices(est);
    nonempty = !sing.empty();
    bool contained = nonempty;
    bool equal_null = nonempty;
    for (const std::size_t i : sing) {
      const auto& r = est.reports[i];
      const auto nc = null_covectors(cfg.st, r.x[0], r.x[1]);
      const double th = std::atan2(r.khat[1], r.khat[0]);
      const double hi = std::atan2(nc[0][1], nc[0][0]);
      const double lo = std::atan2(nc[1][1], nc[1][0]);
      if (th < lo - margin || th > hi + margin) contained = false;
      if (std::min(wrap_angle_diff(th, hi), wrap_angle_diff(th, lo)) > margin)
        equal_null = false;
    }
    // reverse inclusion: both future null rays must register at every point
    for (const auto& pt : cfg.psi_points) {
      const auto nc = null_covectors(cfg.st, pt[0], pt[1]);
      for (int a = 0; a < 2; ++a) {
        const double ta = std::atan2(nc[static_cast<std::size_t>(a)][1],
                                     nc[static_cast<std::size_t>(a)][0]);
        bool seen = false;
        for (const std::size_t i : sing) {
          const auto& r = est.reports[i];
          if (cfg.st.chart_dist({r.x[0], r.x[1]}, {pt[0], pt[1]}) >
              point_eps(cfg.st))
            continue;
          if (wrap_angle_diff(std::atan2(r.khat[1], r.khat[0]), ta) <= margin) {
            seen = true;
            break;
          }
        }
        if (!seen) equal_null = false;
      }
    }
    row.wf_in_vplus = contained;
    row.wf_equals_nullplus = equal_null;

    const auto est_w = run_scan(w2, cfg.pair_points, ddirs, mode, cfg);
    const auto est_e = run_scan(ee, cfg.pair_points, ddirs, mode, cfg);
    had = hadamard_check(cfg.st, est_w, est_e);
    row.hadamard = had.verdict == HadamardVerdict::hadamard;
  };

  bool ne_smooth = false, ne_analytic = true;
  run_row(WfMode::smooth, out.smooth, out.had_smooth, ne_smooth);
  if (cfg.run_analytic) {
    out.analytic_ran = true;
    run_row(WfMode::analytic, out.analytic, out.had_analytic, ne_analytic);
  }
  out.psi_wf_nonempty = ne_smooth && ne_analytic;
  out.pass = out.smooth.consistent() &&
             (!out.analytic_ran || out.analytic.consistent());
  return out;
}

UnionCheckReport commutator_union_check(const TwoPointFunction& tp,
                                        const MuscConfig& cfg) {
  check_musc_config(tp, cfg);
  const auto w2 = make_mode_sum_w(tp.mode, cfg.chart);
  const auto wt = make_mode_sum_w(transposed_params(tp.mode), cfg.chart);
  const auto ee = make_mode_sum_w(commutator_params(tp.mode), cfg.chart);
  const auto ddirs = doubled_directions(cfg.dirs);

  const auto est_a = estimate_wf_smooth(w2, cfg.pair_points, ddirs, cfg.smooth);
  const auto est_t = estimate_wf_smooth(wt, cfg.pair_points, ddirs, cfg.smooth);
  const auto est_e = estimate_wf_smooth(ee, cfg.pair_points, ddirs, cfg.smooth);

  // the three scans share one lattice, so the union is indexwise
  std::vector<std::size_t> u;
  for (std::size_t i = 0; i < est_a.reports.size(); ++i)
    if (est_a.reports[i].verdict == WfVerdict::singular ||
        est_t.reports[i].verdict == WfVerdict::singular)
      u.push_back(i);

  UnionCheckReport rep;
  rep.match =
      match_singular_sets(cfg.st, est_a, u, est_e, singular_indices(est_e));
  rep.equal = !u.empty() && rep.match.unmatched_a.empty() &&
              rep.match.unmatched_b.empty();
  return rep;
}

// ---------------------------------------------------------------------------
// Tube cones
// ---------------------------------------------------------------------------

bool TubeCones::contains_c(std::span<const double> y, double margin) const {
  require(static_cast<int>(y.size()) == 2 * m, "tube cone: wrong dimension");
  for (int j = 0; j + 1 < m; ++j) {
    const double dt = y[static_cast<std::size_t>(2 * j + 2)] -
                      y[static_cast<std::size_t>(2 * j)];
    const double dx = y[static_cast<std::size_t>(2 * j + 3)] -
                      y[static_cast<std::size_t>(2 * j + 1)];
    if (!(dt - std::abs(dx) > margin)) return false;
  }
  return true;
}

bool TubeCones::contains_polar(std::span<const double> k, double tol) const {
  require(static_cast<int>(k.size()) == 2 * m, "tube cone: wrong dimension");
  double scale = 1.0;
  for (const double v : k) scale = std::max(scale, std::abs(v));
  double tt = 0.0, tx = 0.0;
  for (int j = 0; j < m; ++j) {
    tt += k[static_cast<std::size_t>(2 * j)];
    tx += k[static_cast<std::size_t>(2 * j + 1)];
  }
  if (std::max(std::abs(tt), std::abs(tx)) > tol * scale) return false;
  double rt = 0.0, rx = 0.0;
  for (int j = m - 1; j >= 1; --j) {
    rt += k[static_cast<std::size_t>(2 * j)];
    rx += k[static_cast<std::size_t>(2 * j + 1)];
    if (rt < std::abs(rx) - tol * scale) return false;
  }
  return true;
}

std::vector<std::vector<double>> TubeCones::c_generators() const {
  std::vector<std::vector<double>> gen;
  const std::array<std::array<double, 2>, 4> base{
      {{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}}};
  for (const auto& v : base) {
    std::vector<double> g(static_cast<std::size_t>(2 * m));
    for (int j = 0; j < m; ++j) {
      g[static_cast<std::size_t>(2 * j)] = v[0];
      g[static_cast<std::size_t>(2 * j + 1)] = v[1];
    }
    gen.push_back(std::move(g));
  }
  for (int j = 1; j < m; ++j)
    for (const double sx : {1.0, -1.0}) {
      std::vector<double> g(static_cast<std::size_t>(2 * m), 0.0);
      for (int i = j; i < m; ++i) {
        g[static_cast<std::size_t>(2 * i)] = 1.0;
        g[static_cast<std::size_t>(2 * i + 1)] = sx;
      }
      gen.push_back(std::move(g));
    }
  return gen;
}

TubeCones tube_cone(int m) {
  require(m >= 2, "tube cone: at least two slots");
  TubeCones t;
  t.m = m;
  return t;
}

}  // namespace microloc
