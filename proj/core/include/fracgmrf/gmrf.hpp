#ifndef FRACGMRF_GMRF_HPP
#define FRACGMRF_GMRF_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/SparseCholesky>

#include "fracgmrf/fem.hpp"
#include "fracgmrf/mesh.hpp"
#include "fracgmrf/ratapprox.hpp"
#include "fracgmrf/sparse.hpp"

namespace fracgmrf {

/// Whittle-Matern field parameters. 2 beta = nu + d/2; tau is derived from
/// the marginal standard deviation sigma unless overridden in OperatorSpec.
struct FieldParams {
  double nu = 1.0;
  double kappa = 1.0;
  double sigma = 1.0;
  int d = 2;

  static FieldParams from_kappa(double nu, double kappa, double sigma, int d);
  static FieldParams from_range(double nu, double rho, double sigma, int d);

  double beta() const { return nu / 2.0 + d / 4.0; }
  double two_beta() const { return nu + d / 2.0; }
  double rho() const { return std::sqrt(8.0 * nu) / kappa; }
  double tau() const;  // from tau^2 = Gamma(nu) / (sigma^2 kappa^{2 nu} (4 pi)^{d/2} Gamma(nu + d/2))
};

using SparseChol = Eigen::SimplicialLLT<SpMat>;

/// The m+1 precision blocks of the stochastic-weight sum representation,
/// factorized once at build time. Immutable afterwards.
struct GmrfModel {
  FieldParams params;
  int m = 0;
  bool lumped = true;
  double delta = 0.0;
  RationalAlgo algo = RationalAlgo::Brasil;

  int floor_2beta = 0;
  double frac_2beta = 0.0;
  bool integer_case = false;
  double tau = 1.0;
  double kappa0_sq = 1.0;
  double scale = 1.0;  // tau^2 * kappa0^{4 beta}, multiplies every block
  PartialFractions pf;

  std::vector<SparseSymMatrix> blocks;
  std::vector<std::shared_ptr<SparseChol>> factors;

  // kept for covariance evaluation and oracles (reduced under Dirichlet)
  SparseSymMatrix C, Ct, L;       // mass, lumped mass, operator (unscaled)
  std::vector<int> active;        // mesh node index per matrix row

  int n() const { return blocks.empty() ? 0 : blocks.front().n(); }
  int n_blocks() const { return static_cast<int>(blocks.size()); }
  Eigen::Index latent_dim() const { return static_cast<Eigen::Index>(n()) * n_blocks(); }
  double block_logdet(int i) const;
  double total_logdet() const;
};

GmrfModel build_model(const Mesh& mesh, const FieldParams& params, const OperatorSpec& spec,
                      int m, bool lumped = true, double delta = 0.0,
                      RationalAlgo algo = RationalAlgo::Brasil);

/// Dense covariance of the weight vector implied by the model. With
/// consistent_mass the consistent C replaces the lumped mass everywhere,
/// matching the analytic covariance formula exactly. Guarded to n <= 5000.
Mat implied_covariance_dense(const GmrfModel& model, bool consistent_mass);

/// n_samples x n matrix of prior field-weight samples, w = sum_i x_i with
/// x_i drawn through each block's Cholesky factor. Deterministic per seed.
Mat sample_prior(const GmrfModel& model, int n_samples, std::uint64_t seed);

/// Per-block coordinate-list files plus a manifest with the model settings.
void dump_model(const GmrfModel& model, const std::string& dir);

}  // namespace fracgmrf

#endif
