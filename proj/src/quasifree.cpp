#include "microloc/quasifree.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "microloc/parallel.hpp"
#include "microloc/util.hpp"

namespace microloc {

namespace {

void recurse_pairings(std::vector<int>& free_labels,
                      std::vector<std::pair<int, int>>& acc,
                      std::vector<PairingPartition>& out) {
  if (free_labels.empty()) {
    out.push_back({acc});
    return;
  }
  const int first = free_labels.front();
  for (std::size_t p = 1; p < free_labels.size(); ++p) {
    const int second = free_labels[p];
    std::vector<int> rest;
    rest.reserve(free_labels.size() - 2);
    for (std::size_t q = 1; q < free_labels.size(); ++q)
      if (q != p) rest.push_back(free_labels[q]);
    acc.emplace_back(first, second);
    recurse_pairings(rest, acc, out);
    acc.pop_back();
  }
}

void check_same_grid(const GridSpec& a, const GridSpec& b, const char* what) {
  const bool same = a.lo == b.lo && a.hi == b.hi && a.n == b.n;
  require(same, std::string(what) + ": all functions must share one grid");
}

}  // namespace

std::vector<PairingPartition> enumerate_pairings(int m) {
  require(m >= 2, "pairings: m must be at least 2");
  require(m <= 8, "pairings: m capped at 8");
  require(m % 2 == 0, "pairings: m must be even");
  std::vector<int> labels(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) labels[static_cast<std::size_t>(i)] = i + 1;
  std::vector<PairingPartition> out;
  std::vector<std::pair<int, int>> acc;
  recurse_pairings(labels, acc, out);
  return out;
}

cplx m_point(const TwoPointFunction& tp, std::span<const TestFunction> fs,
             int jobs) {
  const int m = static_cast<int>(fs.size());
  require(m <= 8, "m_point: m capped at 8");
  if (m == 0) return cplx(1.0, 0.0);
  if (m % 2 == 1) return cplx(0.0, 0.0);
  for (const auto& f : fs) check_same_grid(fs.front().grid, f.grid, "m_point");

  std::vector<OnShellCoeffs> coeffs(fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i)
    coeffs[i] = on_shell_coefficients(tp.mode, fs[i], jobs);

  // pair values with the original argument order, first slot < second slot
  const std::size_t mm = fs.size();
  std::vector<cplx> pairval(mm * mm, cplx(0.0, 0.0));
  for (std::size_t i = 0; i < mm; ++i)
    for (std::size_t j = i + 1; j < mm; ++j)
      pairval[i * mm + j] = two_point_coeffs(tp, coeffs[i], coeffs[j]).value;

  const auto partitions = enumerate_pairings(m);
  std::vector<cplx> terms(partitions.size());
  parallel_for(partitions.size(), jobs, [&](std::size_t p) {
    cplx prod(1.0, 0.0);
    for (const auto& [a, b] : partitions[p].pairs)
      prod *= pairval[static_cast<std::size_t>(a - 1) * mm +
                      static_cast<std::size_t>(b - 1)];
    terms[p] = prod;
  });
  return pairwise_sum(terms);
}

GramFactor factorize_gram(const Eigen::MatrixXcd& m) {
  require(m.rows() == m.cols() && m.rows() >= 1, "gram: square matrix");
  const double herm_dev = (m - m.adjoint()).cwiseAbs().maxCoeff();
  require(herm_dev <= 1e-8,
          "gram: matrix is not hermitian, deviation " + std::to_string(herm_dev));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
      ((m + m.adjoint()) * 0.5).eval());
  require(es.info() == Eigen::Success, "gram: eigendecomposition failed");
  const Eigen::VectorXd evals = es.eigenvalues();  // ascending
  GramFactor out;
  out.min_eigenvalue = evals(0);
  if (out.min_eigenvalue < -1e-10)
    throw std::invalid_argument(
        "gram: indefinite, offending eigenvalue " +
        std::to_string(out.min_eigenvalue));
  const double top = std::max(evals(evals.size() - 1), 0.0);
  out.clamp_threshold = 1e-12 * top;

  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = evals.size() - 1; i >= 0; --i)
    if (evals(i) > out.clamp_threshold) kept.push_back(i);
  out.rank = static_cast<int>(kept.size());
  out.a.resize(out.rank, m.cols());
  out.lambda.resize(out.rank);
  for (std::size_t r = 0; r < kept.size(); ++r) {
    out.lambda(static_cast<Eigen::Index>(r)) = evals(kept[r]);
    out.a.row(static_cast<Eigen::Index>(r)) =
        std::sqrt(evals(kept[r])) * es.eigenvectors().col(kept[r]).adjoint();
  }
  return out;
}

OneParticleMap build_one_particle_map(const TwoPointFunction& tp,
                                      const std::vector<TestFunction>& basis,
                                      int jobs) {
  require(!basis.empty(), "one-particle map: empty basis");
  require(basis.size() <= 512, "one-particle map: basis capped at 512");
  for (const auto& e : basis)
    check_same_grid(basis.front().grid, e.grid, "one-particle map");

  OneParticleMap opm;
  opm.mode = tp.mode;
  opm.basis_grid = basis.front().grid;
  opm.coeffs.resize(basis.size());
  for (std::size_t j = 0; j < basis.size(); ++j)
    opm.coeffs[j] = on_shell_coefficients(tp.mode, basis[j], jobs);

  const auto d = static_cast<Eigen::Index>(basis.size());
  const std::size_t half = opm.mode.wp.size();
  // upper triangle only, mirrored: keeps the matrix hermitian bit for bit
  opm.gram.resize(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const auto& cj = opm.coeffs[static_cast<std::size_t>(j)];
    for (Eigen::Index k = j; k < d; ++k) {
      const auto& ck = opm.coeffs[static_cast<std::size_t>(k)];
      std::vector<cplx> terms;
      terms.reserve(2 * half);
      for (std::size_t i = 0; i < half; ++i) {
        if (opm.mode.wp[i] != 0.0)
          terms.push_back(opm.mode.wp[i] * std::conj(cj.plus[i]) * ck.plus[i]);
        if (opm.mode.wm[i] != 0.0)
          terms.push_back(opm.mode.wm[i] * std::conj(cj.minus[i]) * ck.minus[i]);
      }
      const cplx v = pairwise_sum(terms);
      if (k == j) {
        opm.gram(j, j) = cplx(v.real(), 0.0);
      } else {
        opm.gram(j, k) = v;
        opm.gram(k, j) = std::conj(v);
      }
    }
  }
  opm.factor = factorize_gram(opm.gram);
  return opm;
}

namespace {

// T_j(f) = w2(conj e_j, f), assembled from on-shell coefficients
Eigen::VectorXcd basis_pairings(const OneParticleMap& opm,
                                const OnShellCoeffs& cf) {
  const auto d = static_cast<Eigen::Index>(opm.coeffs.size());
  const std::size_t half = opm.mode.wp.size();
  Eigen::VectorXcd t(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const auto& cj = opm.coeffs[static_cast<std::size_t>(j)];
    std::vector<cplx> terms;
    terms.reserve(2 * half);
    for (std::size_t i = 0; i < half; ++i) {
      if (opm.mode.wp[i] != 0.0)
        terms.push_back(opm.mode.wp[i] * std::conj(cj.plus[i]) * cf.plus[i]);
      if (opm.mode.wm[i] != 0.0)
        terms.push_back(opm.mode.wm[i] * std::conj(cj.minus[i]) * cf.minus[i]);
    }
    t(j) = pairwise_sum(terms);
  }
  return t;
}

Eigen::VectorXcd project_vector(const OneParticleMap& opm,
                                const Eigen::VectorXcd& t) {
  Eigen::VectorXcd v = opm.factor.a * t;
  for (Eigen::Index r = 0; r < opm.factor.rank; ++r)
    v(r) /= opm.factor.lambda(r);
  return v;
}

}  // namespace

Eigen::VectorXcd psi_apply(const OneParticleMap& opm, const TestFunction& f,
                           int jobs) {
  return project_vector(opm, basis_pairings(
                                 opm, on_shell_coefficients(opm.mode, f, jobs)));
}

double psi_residual(const OneParticleMap& opm, const TestFunction& f,
                    int jobs) {
  const auto cf = on_shell_coefficients(opm.mode, f, jobs);
  const std::size_t half = opm.mode.wp.size();
  std::vector<cplx> terms;
  terms.reserve(2 * half);
  for (std::size_t i = 0; i < half; ++i) {
    if (opm.mode.wp[i] != 0.0)
      terms.push_back(opm.mode.wp[i] * std::norm(cf.plus[i]));
    if (opm.mode.wm[i] != 0.0)
      terms.push_back(opm.mode.wm[i] * std::norm(cf.minus[i]));
  }
  const double full = pairwise_sum(terms).real();
  const double realized = project_vector(opm, basis_pairings(opm, cf)).squaredNorm();
  return std::sqrt(std::max(0.0, full - realized));
}

HilbertDist psi_distribution(const OneParticleMap& opm, const GridSpec& grid,
                             int jobs) {
  require(grid.dim() == 2, "psi realization: 2d charts only");
  const double extent = grid.hi[1] - grid.lo[1];
  require(std::abs(extent - opm.mode.L) <= 1e-9 * opm.mode.L,
          "psi realization: chart x extent must equal the circle length");
  require(grid.n[1] >= 2 * static_cast<std::size_t>(opm.mode.n_modes + 1),
          "psi realization: x resolution below the mode band");
  require(opm.factor.rank > 0, "psi realization: zero-rank map");
  const auto rank = static_cast<std::size_t>(opm.factor.rank);
  require(grid.total() <= kMaxTotalSamples / rank,
          "psi realization: kernel exceeds the sample cap");

  // row alpha of the kernel: sum_n wp U+(alpha,n) e^{i(w t - k x)}
  //                               + wm U-(alpha,n) e^{-i(w t - k x)}
  // with U+- = Lambda^{-1} A conj(E+-), E the basis coefficient matrices.
  const auto d = static_cast<Eigen::Index>(opm.coeffs.size());
  const std::size_t half = opm.mode.wp.size();
  Eigen::MatrixXcd ep(d, static_cast<Eigen::Index>(half));
  Eigen::MatrixXcd em(d, static_cast<Eigen::Index>(half));
  for (Eigen::Index j = 0; j < d; ++j)
    for (std::size_t i = 0; i < half; ++i) {
      ep(j, static_cast<Eigen::Index>(i)) =
          std::conj(opm.coeffs[static_cast<std::size_t>(j)].plus[i]);
      em(j, static_cast<Eigen::Index>(i)) =
          std::conj(opm.coeffs[static_cast<std::size_t>(j)].minus[i]);
    }
  Eigen::MatrixXcd up = opm.factor.a * ep;
  Eigen::MatrixXcd um = opm.factor.a * em;
  for (Eigen::Index r = 0; r < opm.factor.rank; ++r) {
    up.row(r) /= opm.factor.lambda(r);
    um.row(r) /= opm.factor.lambda(r);
  }

  const std::size_t nt = grid.n[0], nx = grid.n[1];
  std::vector<cplx> kernel(rank * grid.total(), cplx(0.0, 0.0));
  parallel_for(rank, jobs, [&](std::size_t alpha) {
    std::vector<cplx> pht(nt), phx(nx);
    cplx* row = kernel.data() + alpha * grid.total();
    for (int n = -opm.mode.n_modes; n <= opm.mode.n_modes; ++n) {
      const std::size_t i = opm.mode.idx(n);
      const double om = opm.mode.omega(n), kn = opm.mode.kx(n);
      const cplx cp = opm.mode.wp[i] * up(static_cast<Eigen::Index>(alpha),
                                          static_cast<Eigen::Index>(i));
      const cplx cm = opm.mode.wm[i] * um(static_cast<Eigen::Index>(alpha),
                                          static_cast<Eigen::Index>(i));
      if (cp == cplx(0.0, 0.0) && cm == cplx(0.0, 0.0)) continue;
      for (std::size_t it = 0; it < nt; ++it)
        pht[it] = std::polar(1.0, om * grid.coord(0, it));
      for (std::size_t ix = 0; ix < nx; ++ix)
        phx[ix] = std::polar(1.0, -kn * grid.coord(1, ix));
      for (std::size_t it = 0; it < nt; ++it) {
        const cplx a = cp * pht[it];
        const cplx b = cm * std::conj(pht[it]);
        cplx* line = row + it * nx;
        for (std::size_t ix = 0; ix < nx; ++ix)
          line[ix] += a * phx[ix] + b * std::conj(phx[ix]);
      }
    }
  });
  return make_kernel_dist(grid, rank, std::move(kernel));
}

}  // namespace microloc
