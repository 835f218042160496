#pragma once

#include <Eigen/Dense>
#include <span>
#include <utility>
#include <vector>

#include "microloc/dist.hpp"
#include "microloc/kg_field.hpp"

namespace microloc {

// Partition of {1..m} into ordered pairs (first < second). Pairs are kept
// sorted by first element, so the flattened list is a canonical form.
struct PairingPartition {
  std::vector<std::pair<int, int>> pairs;
};

// All (m-1)!! pair partitions in lexicographic order of the canonical form.
// Throws for odd m, m < 2, or m > 8.
std::vector<PairingPartition> enumerate_pairings(int m);

// Wick m-point value of the quasifree state: exactly 0 for odd m, and
// sum over partitions of products of two-point values for even m, with the
// original argument order kept inside every pair. m = 0 gives 1 (the state
// normalization). Throws for m > 8.
cplx m_point(const TwoPointFunction& tp, std::span<const TestFunction> fs,
             int jobs = 1);

// Factor A of a Hermitian positive semidefinite Gram matrix, M = A* A, via
// the eigendecomposition. Eigenvalues below -1e-10 reject the input;
// eigenvalues below 1e-12 * max eigenvalue are clamped to zero and dropped
// from the factor, so A has exactly `rank` rows.
struct GramFactor {
  Eigen::MatrixXcd a;           // rank x d
  Eigen::VectorXd lambda;       // kept eigenvalues, descending, size rank
  int rank = 0;
  double min_eigenvalue = 0.0;
  double clamp_threshold = 0.0;
};
GramFactor factorize_gram(const Eigen::MatrixXcd& m);

// One-particle realization of the state on a finite test-function basis:
// M_jk = w2(conj e_j, e_k), A from factorize_gram, psi(e_j) = j-th column
// of A. Vectors for general f are recovered from the pairings
// T_j(f) = w2(conj e_j, f) by psi(f) = Lambda^{-1} A T(f), which is the
// orthogonal projection of the abstract one-particle vector onto the span
// of the realized basis vectors.
struct OneParticleMap {
  ModeSumParams mode;                 // state weights (regulated)
  GridSpec basis_grid;
  std::vector<OnShellCoeffs> coeffs;  // per basis function
  Eigen::MatrixXcd gram;
  GramFactor factor;
};

// Gram assembly and factorization over a common-grid basis, d <= 512.
OneParticleMap build_one_particle_map(const TwoPointFunction& tp,
                                      const std::vector<TestFunction>& basis,
                                      int jobs = 1);

// psi(f) in the realized space, computed from on-shell coefficients.
Eigen::VectorXcd psi_apply(const OneParticleMap& opm, const TestFunction& f,
                           int jobs = 1);

// Norm of the component of the abstract vector psi(f) lost by the basis
// projection: sqrt(w2(conj f, f) - ||psi(f)||^2), clamped at 0. Zero for f
// in the basis span; the recorded quality figure for downstream estimates.
double psi_residual(const OneParticleMap& opm, const TestFunction& f,
                    int jobs = 1);

// Kernel-form Hilbert-space-valued distribution realizing psi(f) through
// midpoint quadrature on the chart, suitable for the wavefront estimators.
// hilbert_dim equals the effective rank.
HilbertDist psi_distribution(const OneParticleMap& opm, const GridSpec& grid,
                             int jobs = 1);

}  // namespace microloc
