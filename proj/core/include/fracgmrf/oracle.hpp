#ifndef FRACGMRF_ORACLE_HPP
#define FRACGMRF_ORACLE_HPP

#include "fracgmrf/gmrf.hpp"
#include "fracgmrf/sparse.hpp"
#include "fracgmrf/types.hpp"

namespace fracgmrf {

/// Modified Bessel function of the second kind, real order. Temme series
/// for x <= 2, Steed continued fraction for x > 2, order recurrence.
double bessel_k(double nu, double x);

/// Matern covariance sigma^2 / (2^{nu-1} Gamma(nu)) (kappa r)^nu K_nu(kappa r).
double matern_cov(double r, double nu, double kappa, double sigma);

/// Covariance of the Neumann solution on the unit square: reflected lattice
/// sum of Matern terms over k in {-K_trunc..K_trunc}^2.
double folded_matern_cov(const Eigen::Vector2d& x, const Eigen::Vector2d& y,
                         const FieldParams& params, int K_trunc);

/// Covariance matrix of the folded Matern field on the N x N tensor grid of
/// [0,1]^2 (node order: x fastest). The lattice truncation starts at K_init
/// shells and doubles until the added shells contribute < 1e-10 relatively.
Mat folded_matern_grid(const FieldParams& params, int N, int K_init = 4);

/// tau^-2 V diag(lambda^-2 beta) V^T through the dense generalized
/// eigendecomposition of (L, C); isolates the FEM error from the rational
/// error. Guarded to n <= 5000.
Mat exact_fem_fractional_cov(const SparseSymMatrix& L, const SparseSymMatrix& C,
                             double beta, double tau);

struct CovErrors {
  double l2;   // Frobenius norm / N^d
  double sup;  // max absolute entry difference
};
CovErrors cov_error_norms(const Mat& Sigma, const Mat& Sigma_hat, int N);

/// Covariance of the model field at grid nodes, realized as blockwise sparse
/// solves against grid-indicator right-hand sides. Grid points must coincide
/// with mesh nodes.
Mat field_cov_grid(const GmrfModel& model, const Mesh& mesh, int grid_N);

}  // namespace fracgmrf

#endif
