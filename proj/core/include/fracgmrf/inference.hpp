#ifndef FRACGMRF_INFERENCE_HPP
#define FRACGMRF_INFERENCE_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fracgmrf/gmrf.hpp"
#include "fracgmrf/mesh.hpp"

namespace fracgmrf {

struct ObservationSet {
  Mat locations;     // N x dim
  Vec y;             // N
  double sigma_eps;  // noise std dev, Q_eps = sigma_eps^-2 I
};

/// Horizontal concatenation of m+1 copies of A.
Projector stack_projector(const Projector& A, int m);

struct PosteriorState {
  Vec mu;  // length n (m+1)
  std::shared_ptr<SparseChol> factor;   // of Q_{X|y}, read-only after build
  double loglik = 0.0;
  int n_blocks = 0;
  Eigen::Index block_dim = 0;
  Eigen::Index n_obs = 0;
};

/// Posterior of the stacked weights X given y, plus the marginal
/// log-likelihood: 2 l(y) = log|Q| + log|Q_eps| - log|Q_{X|y}|
/// - mu' Q mu - (y - A mu)' Q_eps (y - A mu) - N log(2 pi).
PosteriorState posterior(const GmrfModel& model, const ObservationSet& obs, const Projector& A);

double loglik(const GmrfModel& model, const ObservationSet& obs, const Projector& A);

struct PredictResult {
  Vec mean;     // kriging mean at the new locations
  Mat samples;  // n_samples x N_new draws from the latent predictive
};
PredictResult predict(const PosteriorState& state, const GmrfModel& model,
                      const Projector& A_new, int n_samples, std::uint64_t seed);

struct FitOptions {
  int max_iter = 500;
  double simplex_tol = 1e-6;  // simplex size in transformed coordinates
  double nu_max = 2.0;
  std::optional<double> fix_nu;
  bool dirichlet = false;
};

struct FitTraceRow {
  int iter;
  double sigma, rho, nu, sigma_eps, loglik;  // best-so-far
};

struct FitResult {
  FieldParams params;
  double sigma_eps = 0.0;
  double loglik = 0.0;
  std::vector<FitTraceRow> trace;
  bool converged = false;
  int n_eval = 0;
};

/// Maximum likelihood over (log sigma, log rho, logit(nu/nu_max), log
/// sigma_eps) by Nelder-Mead, rebuilding the model per evaluation with
/// rational coefficients resolved from the cache.
FitResult fit(const Mesh& mesh, const ObservationSet& obs, int m, const FieldParams& init,
              double init_sigma_eps, const FitOptions& opts = {});

struct Scores {
  double mse;
  double neg_log_score;
};
/// Both negatively oriented: smaller is better.
Scores score_predictions(const Vec& y_true, const Vec& pred_mean, const Vec& pred_sd);

/// CSV with header "x[,y],value".
ObservationSet load_observations(const std::string& path, int dim, double sigma_eps);
void save_observations(const ObservationSet& obs, const std::string& path);

}  // namespace fracgmrf

#endif
