#include "microloc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "json.hpp"
#include "microloc/parallel.hpp"

namespace microloc {

namespace {

bool curved(MetricTag tag) {
  return tag == MetricTag::conformal || tag == MetricTag::static_slab;
}

double norm2(const std::array<double, 2>& k) {
  return k[0] * k[0] + k[1] * k[1];
}

// roots of g^{tt} r^2 + 2 g^{tx} r + g^{xx} = 0, r = k_t / k_x; the catalog
// metrics keep g^{tt} > 0 and the discriminant positive everywhere
std::array<double, 2> null_slopes(const Sym2& gi) {
  const double disc = gi.tx * gi.tx - gi.tt * gi.xx;
  require(gi.tt > 0.0 && disc > 0.0,
          "null slopes: degenerate inverse metric");
  const double s = std::sqrt(disc);
  return {(-gi.tx + s) / gi.tt, (-gi.tx - s) / gi.tt};
}

// Reproject k onto the null cone keeping k_t, nearest k_x root. The catalog
// metrics are t-independent, so k_t is the exactly conserved Killing
// momentum and only the spatial component absorbs the integration drift.
void project_null(const Sym2& gi, std::array<double, 2>& k) {
  const double disc = gi.tx * gi.tx - gi.tt * gi.xx;
  require(gi.xx < 0.0 && disc > 0.0,
          "null projection: degenerate inverse metric");
  const double s = std::sqrt(disc);
  const double a = (-gi.tx + s) * k[0] / gi.xx;
  const double b = (-gi.tx - s) * k[0] / gi.xx;
  k[1] = std::abs(a - k[1]) <= std::abs(b - k[1]) ? a : b;
}

struct FlowState {
  std::array<double, 2> x{};
  std::array<double, 2> k{};
};

FlowState rhs(const Spacetime1p1& st, const FlowState& s) {
  const Sym2 gi = st.ginv(s.x[0], s.x[1]);
  const Sym2 dt = st.dginv(s.x[0], s.x[1], 0);
  const Sym2 dx = st.dginv(s.x[0], s.x[1], 1);
  FlowState d;
  d.x[0] = gi.tt * s.k[0] + gi.tx * s.k[1];
  d.x[1] = gi.tx * s.k[0] + gi.xx * s.k[1];
  d.k[0] = -0.5 * (dt.tt * s.k[0] * s.k[0] + 2.0 * dt.tx * s.k[0] * s.k[1] +
                   dt.xx * s.k[1] * s.k[1]);
  d.k[1] = -0.5 * (dx.tt * s.k[0] * s.k[0] + 2.0 * dx.tx * s.k[0] * s.k[1] +
                   dx.xx * s.k[1] * s.k[1]);
  return d;
}

FlowState axpy(const FlowState& s, double h, const FlowState& d) {
  FlowState o;
  for (int i = 0; i < 2; ++i) {
    o.x[i] = s.x[i] + h * d.x[i];
    o.k[i] = s.k[i] + h * d.k[i];
  }
  return o;
}

FlowState rk4_step(const Spacetime1p1& st, const FlowState& s, double h) {
  const FlowState k1 = rhs(st, s);
  const FlowState k2 = rhs(st, axpy(s, 0.5 * h, k1));
  const FlowState k3 = rhs(st, axpy(s, 0.5 * h, k2));
  const FlowState k4 = rhs(st, axpy(s, h, k3));
  FlowState o;
  for (int i = 0; i < 2; ++i) {
    o.x[i] = s.x[i] + h / 6.0 * (k1.x[i] + 2.0 * k2.x[i] + 2.0 * k3.x[i] + k4.x[i]);
    o.k[i] = s.k[i] + h / 6.0 * (k1.k[i] + 2.0 * k2.k[i] + 2.0 * k3.k[i] + k4.k[i]);
  }
  return o;
}

double symbol_at(const Spacetime1p1& st, const FlowState& s) {
  const Sym2 gi = st.ginv(s.x[0], s.x[1]);
  return gi.tt * s.k[0] * s.k[0] + 2.0 * gi.tx * s.k[0] * s.k[1] +
         gi.xx * s.k[1] * s.k[1];
}

}  // namespace

double Spacetime1p1::profile(double x) const { return base + amp * std::sin(x); }
double Spacetime1p1::dprofile(double x) const { return amp * std::cos(x); }
double Spacetime1p1::d2profile(double x) const { return -amp * std::sin(x); }

Sym2 Spacetime1p1::metric(double t, double x) const {
  (void)t;
  switch (tag) {
    case MetricTag::minkowski:
    case MetricTag::cylinder:
      return {1.0, 0.0, -1.0};
    case MetricTag::conformal: {
      const double w2 = sq(profile(x));
      return {w2, 0.0, -w2};
    }
    case MetricTag::static_slab:
      return {sq(profile(x)), 0.0, -1.0};
  }
  return {};
}

Sym2 Spacetime1p1::ginv(double t, double x) const {
  (void)t;
  switch (tag) {
    case MetricTag::minkowski:
    case MetricTag::cylinder:
      return {1.0, 0.0, -1.0};
    case MetricTag::conformal: {
      const double iw2 = 1.0 / sq(profile(x));
      return {iw2, 0.0, -iw2};
    }
    case MetricTag::static_slab:
      return {1.0 / sq(profile(x)), 0.0, -1.0};
  }
  return {};
}

Sym2 Spacetime1p1::dginv(double t, double x, int axis) const {
  (void)t;
  if (axis == 0) return {};
  switch (tag) {
    case MetricTag::minkowski:
    case MetricTag::cylinder:
      return {};
    case MetricTag::conformal: {
      const double f = profile(x);
      const double d = -2.0 * dprofile(x) / (f * f * f);
      return {d, 0.0, -d};
    }
    case MetricTag::static_slab: {
      const double f = profile(x);
      return {-2.0 * dprofile(x) / (f * f * f), 0.0, 0.0};
    }
  }
  return {};
}

double Spacetime1p1::curvature(double t, double x) const {
  (void)t;
  switch (tag) {
    case MetricTag::minkowski:
    case MetricTag::cylinder:
      return 0.0;
    case MetricTag::conformal: {
      const double f = profile(x);
      return 2.0 * (d2profile(x) * f - sq(dprofile(x))) / (f * f * f * f);
    }
    case MetricTag::static_slab:
      return 2.0 * d2profile(x) / profile(x);
  }
  return 0.0;
}

double Spacetime1p1::diameter() const {
  const double dt = t_hi - t_lo;
  const double dx = periodic_x() ? L : x_hi - x_lo;
  return std::hypot(dt, dx);
}

double Spacetime1p1::wrap_x(double x) const {
  if (!periodic_x()) return x;
  double y = std::fmod(x, L);
  if (y < 0.0) y += L;
  return y;
}

bool Spacetime1p1::contains(double t, double x) const {
  if (t < t_lo || t > t_hi) return false;
  if (periodic_x()) return true;
  return x >= x_lo && x <= x_hi;
}

double Spacetime1p1::chart_dist(const std::array<double, 2>& p,
                                const std::array<double, 2>& q) const {
  const double dt = p[0] - q[0];
  double dx = p[1] - q[1];
  if (periodic_x()) {
    dx = std::fmod(std::abs(dx), L);
    dx = std::min(dx, L - dx);
  }
  return std::hypot(dt, dx);
}

Spacetime1p1 st_minkowski() { return {}; }

Spacetime1p1 st_cylinder(double L) {
  require(L > 0.0, "cylinder: circumference must be positive");
  Spacetime1p1 st;
  st.tag = MetricTag::cylinder;
  st.L = L;
  st.t_lo = -kPi;
  st.t_hi = kPi;
  st.x_lo = 0.0;
  st.x_hi = L;
  return st;
}

Spacetime1p1 st_conformal(double base, double amp) {
  require(base > std::abs(amp), "conformal: profile must stay positive");
  Spacetime1p1 st;
  st.tag = MetricTag::conformal;
  st.base = base;
  st.amp = amp;
  return st;
}

Spacetime1p1 st_static(double base, double amp) {
  require(base > std::abs(amp), "static: profile must stay positive");
  Spacetime1p1 st;
  st.tag = MetricTag::static_slab;
  st.base = base;
  st.amp = amp;
  return st;
}

Spacetime1p1 spacetime_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  require(j.is_object() && j.contains("tag"),
          "spacetime: JSON object with a \"tag\" field expected");
  const std::string tag = j.at("tag").get<std::string>();
  Spacetime1p1 st;
  if (tag == "minkowski") {
    st = st_minkowski();
  } else if (tag == "cylinder") {
    st = st_cylinder(j.value("L", 2.0 * kPi));
  } else if (tag == "conformal") {
    st = st_conformal(j.value("base", 1.0), j.value("amp", 0.0));
  } else if (tag == "static") {
    st = st_static(j.value("base", 1.0), j.value("amp", 0.0));
  } else {
    require(false, "spacetime: unknown tag \"" + tag + "\"");
  }
  if (j.contains("t_range")) {
    const auto r = j.at("t_range");
    require(r.is_array() && r.size() == 2, "spacetime: t_range is [lo, hi]");
    st.t_lo = r[0].get<double>();
    st.t_hi = r[1].get<double>();
    require(st.t_lo < st.t_hi, "spacetime: t_range is [lo, hi]");
  }
  if (j.contains("x_range")) {
    require(!st.periodic_x(), "spacetime: x_range invalid for a cylinder");
    const auto r = j.at("x_range");
    require(r.is_array() && r.size() == 2, "spacetime: x_range is [lo, hi]");
    st.x_lo = r[0].get<double>();
    st.x_hi = r[1].get<double>();
    require(st.x_lo < st.x_hi, "spacetime: x_range is [lo, hi]");
  }
  if (curved(st.tag)) require(st.base > std::abs(st.amp),
                              "spacetime: profile must stay positive");
  return st;
}

std::string cone_name(ConeClass c) {
  switch (c) {
    case ConeClass::future_timelike: return "future-timelike";
    case ConeClass::past_timelike: return "past-timelike";
    case ConeClass::future_null: return "future-null";
    case ConeClass::past_null: return "past-null";
    case ConeClass::spacelike: return "spacelike";
    case ConeClass::zero: return "zero";
  }
  return "";
}

bool is_future_causal(ConeClass c) {
  return c == ConeClass::future_timelike || c == ConeClass::future_null;
}

bool is_past_causal(ConeClass c) {
  return c == ConeClass::past_timelike || c == ConeClass::past_null;
}

double principal_symbol(const Spacetime1p1& st, const CovectorPoint& p) {
  const Sym2 gi = st.ginv(p.x[0], p.x[1]);
  return gi.tt * p.k[0] * p.k[0] + 2.0 * gi.tx * p.k[0] * p.k[1] +
         gi.xx * p.k[1] * p.k[1];
}

ConeClass cone_classify(const Spacetime1p1& st, const CovectorPoint& p,
                        double tol) {
  const double kk = norm2(p.k);
  if (kk == 0.0) return ConeClass::zero;
  const double sigma = principal_symbol(st, p);
  const Sym2 gi = st.ginv(p.x[0], p.x[1]);
  const double tdir = gi.tt * p.k[0] + gi.tx * p.k[1];
  if (std::abs(sigma) <= tol * kk)
    return tdir > 0.0 ? ConeClass::future_null : ConeClass::past_null;
  if (sigma > 0.0)
    return tdir > 0.0 ? ConeClass::future_timelike : ConeClass::past_timelike;
  return ConeClass::spacelike;
}

std::array<std::array<double, 2>, 4> null_covectors(const Spacetime1p1& st,
                                                    double t, double x) {
  const auto r = null_slopes(st.ginv(t, x));
  const double r_hi = std::max(r[0], r[1]);
  const double r_lo = std::min(r[0], r[1]);
  std::array<std::array<double, 2>, 4> out;
  out[0] = {r_hi, 1.0};
  out[1] = {-r_lo, -1.0};
  out[2] = {-r_hi, -1.0};
  out[3] = {r_lo, 1.0};
  for (auto& k : out) {
    const double n = std::hypot(k[0], k[1]);
    k[0] /= n;
    k[1] /= n;
  }
  return out;
}

bool char_set_test(const KGOperator& op, const CovectorPoint& p, double tol) {
  require(norm2(p.k) > 0.0, "characteristic test: zero covector");
  return std::abs(principal_symbol(op.st, p)) <= tol * norm2(p.k);
}

Trajectory bicharacteristic_flow(const KGOperator& op,
                                 const CovectorPoint& start, double span,
                                 const FlowConfig& cfg) {
  const Spacetime1p1& st = op.st;
  require(st.contains(start.x[0], st.wrap_x(start.x[1])),
          "bicharacteristic flow: start outside the chart");
  require(char_set_test(op, start, 1e-8),
          "bicharacteristic flow: start off the characteristic set");
  const double h0 = cfg.step > 0.0 ? cfg.step : st.diameter() / 4096.0;
  const double h = span >= 0.0 ? h0 : -h0;
  const std::size_t nsteps =
      static_cast<std::size_t>(std::ceil(std::abs(span) / h0 - 1e-12));

  FlowState s{{start.x[0], st.wrap_x(start.x[1])}, start.k};
  project_null(st.ginv(s.x[0], s.x[1]), s.k);

  Trajectory tr;
  tr.pts.reserve(nsteps + 1);
  tr.params.reserve(nsteps + 1);
  tr.pts.push_back({s.x, s.k});
  tr.params.push_back(0.0);
  for (std::size_t i = 1; i <= nsteps; ++i) {
    FlowState nx = rk4_step(st, s, h);
    nx.x[1] = st.wrap_x(nx.x[1]);
    const double drift = std::abs(symbol_at(st, nx));
    require(drift <= cfg.drift_tol * norm2(nx.k),
            "bicharacteristic flow: null constraint drift exceeds tolerance");
    project_null(st.ginv(nx.x[0], nx.x[1]), nx.k);
    if (!st.contains(nx.x[0], nx.x[1])) {
      tr.exited = true;
      break;
    }
    s = nx;
    tr.pts.push_back({s.x, s.k});
    tr.params.push_back(static_cast<double>(i) * h);
  }
  return tr;
}

std::vector<WfPair> wf_commutator_predict(const KGOperator& op,
                                          const std::array<double, 2>& x1,
                                          const std::array<double, 2>& x2,
                                          const PredictConfig& cfg) {
  const Spacetime1p1& st = op.st;
  const double span = cfg.span > 0.0 ? cfg.span : 3.0 * st.diameter();
  const double hit_tol =
      cfg.hit_tol > 0.0 ? cfg.hit_tol : 2.0 * st.diameter() / 4096.0;
  const auto ks = null_covectors(st, x1[0], x1[1]);

  std::vector<WfPair> out;
  const std::array<double, 2> p1{x1[0], st.wrap_x(x1[1])};
  const std::array<double, 2> p2{x2[0], st.wrap_x(x2[1])};
  if (st.chart_dist(p1, p2) <= hit_tol)
    for (const auto& k : ks)
      out.push_back({{x1, {-k[0], -k[1]}}, {x2, k}});

  std::array<std::vector<WfPair>, 4> hits;
  parallel_for(4, static_cast<unsigned>(cfg.jobs), [&](std::size_t i) {
    const Trajectory tr =
        bicharacteristic_flow(op, {x1, ks[i]}, span, cfg.flow);
    // one hit per crossing: the closest point of each contiguous in-range run
    std::optional<std::size_t> best;
    auto flush = [&] {
      if (!best) return;
      const auto& cp = tr.pts[*best];
      if (tr.params[*best] > 1e-12) {
        hits[i].push_back({{x1, {-ks[i][0], -ks[i][1]}}, {p2, cp.k}});
        hits[i].push_back({{x1, ks[i]}, {p2, {-cp.k[0], -cp.k[1]}}});
      }
      best.reset();
    };
    for (std::size_t j = 0; j < tr.pts.size(); ++j) {
      if (st.chart_dist(tr.pts[j].x, p2) <= hit_tol) {
        if (!best || st.chart_dist(tr.pts[j].x, p2) <
                         st.chart_dist(tr.pts[*best].x, p2))
          best = j;
      } else {
        flush();
      }
    }
    flush();
  });
  for (const auto& h : hits)
    for (const auto& pr : h) out.push_back(pr);

  std::vector<WfPair> dedup;
  for (const auto& pr : out) {
    bool seen = false;
    for (const auto& q : dedup) {
      double d = 0.0;
      for (int i = 0; i < 2; ++i)
        d = std::max({d, std::abs(pr.a.k[i] - q.a.k[i]),
                      std::abs(pr.b.k[i] - q.b.k[i])});
      if (d <= 1e-6) {
        seen = true;
        break;
      }
    }
    if (!seen) dedup.push_back(pr);
  }
  return dedup;
}

}  // namespace microloc
