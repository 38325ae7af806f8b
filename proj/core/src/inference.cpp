#include "fracgmrf/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fracgmrf/errors.hpp"
#include "fracgmrf/rng.hpp"

namespace fracgmrf {

Projector stack_projector(const Projector& A, int m) {
  if (m < 0) throw std::invalid_argument("stack_projector: m must be >= 0");
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(A.weights.nonZeros()) * (m + 1));
  for (int i = 0; i < A.weights.outerSize(); ++i)
    for (SpMatRow::InnerIterator it(A.weights, i); it; ++it)
      for (int c = 0; c <= m; ++c)
        trips.emplace_back(it.row(), it.col() + c * A.cols(), it.value());
  Projector out;
  out.weights.resize(A.rows(), A.cols() * (m + 1));
  out.weights.setFromTriplets(trips.begin(), trips.end());
  return out;
}

namespace {

SpMat blockdiag_precision(const GmrfModel& model) {
  const int n = model.n();
  std::vector<Triplet> trips;
  Eigen::Index nnz = 0;
  for (int b = 0; b < model.n_blocks(); ++b) nnz += model.blocks[b].nonzeros();
  trips.reserve(static_cast<size_t>(nnz));
  for (int b = 0; b < model.n_blocks(); ++b) {
    const SpMat& Q = model.blocks[b].mat();
    const Eigen::Index off = static_cast<Eigen::Index>(b) * n;
    for (int j = 0; j < Q.outerSize(); ++j)
      for (SpMat::InnerIterator it(Q, j); it; ++it)
        trips.emplace_back(it.row() + off, it.col() + off, it.value());
  }
  SpMat out(model.latent_dim(), model.latent_dim());
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

}  // namespace

PosteriorState posterior(const GmrfModel& model, const ObservationSet& obs, const Projector& A) {
  const Eigen::Index N = obs.y.size();
  if (N < 1) throw std::invalid_argument("posterior: need at least one observation");
  if (A.rows() != N) throw std::invalid_argument("posterior: projector/data size mismatch");
  if (A.cols() != model.n()) throw std::invalid_argument("posterior: projector/model size mismatch");
  if (!(obs.sigma_eps > 0)) throw std::invalid_argument("posterior: sigma_eps must be positive");

  const Projector Abar = stack_projector(A, model.n_blocks() - 1);
  const SpMat Abar_c = SpMat(Abar.weights);  // column-major copy for products
  const double qe = 1.0 / (obs.sigma_eps * obs.sigma_eps);

  SpMat Qxy = blockdiag_precision(model);
  Qxy += qe * SpMat(Abar_c.transpose() * Abar_c);

  auto factor = std::make_shared<SparseChol>();
  factor->compute(Qxy);
  if (factor->info() != Eigen::Success)
    throw NumericalError("posterior: Q_{X|y} is not positive definite");

  const Vec rhs = qe * (Abar_c.transpose() * obs.y);
  const Vec mu = factor->solve(rhs);

  const double logdet_Q = model.total_logdet();
  const double logdet_Qxy =
      2.0 * factor->matrixL().nestedExpression().diagonal().array().log().sum();
  const double logdet_Qeps = -2.0 * static_cast<double>(N) * std::log(obs.sigma_eps);

  const Vec resid = obs.y - Abar_c * mu;
  double quad_mu = 0.0;
  const int n = model.n();
  for (int b = 0; b < model.n_blocks(); ++b) {
    const Vec mu_b = mu.segment(static_cast<Eigen::Index>(b) * n, n);
    quad_mu += mu_b.dot(model.blocks[b].mat() * mu_b);
  }
  const double quad_resid = qe * resid.squaredNorm();

  PosteriorState st;
  st.mu = mu;
  st.factor = factor;
  st.n_blocks = model.n_blocks();
  st.block_dim = n;
  st.n_obs = N;
  st.loglik = 0.5 * (logdet_Q + logdet_Qeps - logdet_Qxy - quad_mu - quad_resid -
                     static_cast<double>(N) * std::log(2.0 * M_PI));
  return st;
}

double loglik(const GmrfModel& model, const ObservationSet& obs, const Projector& A) {
  return posterior(model, obs, A).loglik;
}

PredictResult predict(const PosteriorState& state, const GmrfModel& model,
                      const Projector& A_new, int n_samples, std::uint64_t seed) {
  if (A_new.cols() != state.block_dim)
    throw std::invalid_argument("predict: projector built on a different mesh");
  const Projector Abar = stack_projector(A_new, state.n_blocks - 1);
  PredictResult out;
  out.mean = Abar.weights * state.mu;
  if (n_samples > 0) {
    GaussianStream stream(seed);
    const Eigen::Index dim = state.mu.size();
    out.samples.resize(n_samples, A_new.rows());
    Vec z(dim);
    for (int s = 0; s < n_samples; ++s) {
      for (Eigen::Index i = 0; i < dim; ++i) z[i] = stream.next();
      Vec v = state.factor->matrixU().solve(z);
      Vec x = state.mu + state.factor->permutationPinv() * v;
      out.samples.row(s) = (Abar.weights * x).transpose();
    }
  }
  return out;
}

namespace {

struct NuTransform {
  double nu_max;
  double to_internal(double nu) const {
    const double r = std::clamp(nu / nu_max, 1e-12, 1.0 - 1e-12);
    return std::log(r / (1.0 - r));
  }
  double to_nu(double t) const { return nu_max / (1.0 + std::exp(-t)); }
};

}  // namespace

FitResult fit(const Mesh& mesh, const ObservationSet& obs, int m, const FieldParams& init,
              double init_sigma_eps, const FitOptions& opts) {
  if (obs.y.size() < 10) throw std::invalid_argument("fit: need at least 10 observations");
  const int d = mesh.dim;
  const NuTransform nt{opts.nu_max};
  const bool free_nu = !opts.fix_nu.has_value();
  const int npar = free_nu ? 4 : 3;

  const Projector A_mesh = make_projector(mesh, obs.locations);

  auto unpack = [&](const Vec& th, FieldParams& p, double& se) {
    const double sigma = std::exp(th[0]);
    const double rho = std::exp(th[1]);
    const double nu = free_nu ? nt.to_nu(th[2]) : *opts.fix_nu;
    se = std::exp(th[free_nu ? 3 : 2]);
    p = FieldParams::from_range(nu, rho, sigma, d);
  };

  int n_eval = 0;
  auto objective = [&](const Vec& th) {
    FieldParams p{};
    double se = 0.0;
    try {
      unpack(th, p, se);
      OperatorSpec spec;
      spec.kappa = p.kappa;
      spec.boundary = opts.dirichlet ? Boundary::Dirichlet : Boundary::Neumann;
      GmrfModel model = build_model(mesh, p, spec, m);
      Projector A = A_mesh;
      if (opts.dirichlet) A = reduce_projector(A_mesh, model.active);
      ObservationSet o = obs;
      o.sigma_eps = se;
      ++n_eval;
      return -loglik(model, o, A);
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  Vec th0(npar);
  th0[0] = std::log(init.sigma);
  th0[1] = std::log(init.rho());
  if (free_nu) th0[2] = nt.to_internal(init.nu);
  th0[npar - 1] = std::log(init_sigma_eps);
  if (!std::isfinite(objective(th0)))
    throw std::invalid_argument("fit: log-likelihood is not finite at the initial point; rescale the initial parameters");

  // Nelder-Mead
  const double alpha_r = 1.0, gamma_e = 2.0, rho_c = 0.5, sigma_s = 0.5;
  std::vector<Vec> simplex(npar + 1, th0);
  std::vector<double> fval(npar + 1);
  for (int i = 1; i <= npar; ++i) simplex[i][i - 1] += 0.25;
  for (int i = 0; i <= npar; ++i) fval[i] = objective(simplex[i]);

  FitResult res;
  double best = std::numeric_limits<double>::infinity();
  Vec best_th = th0;
  auto record = [&](int iter) {
    const auto it = std::min_element(fval.begin(), fval.end());
    if (*it < best) {
      best = *it;
      best_th = simplex[static_cast<int>(it - fval.begin())];
    }
    FieldParams p{};
    double se = 0.0;
    unpack(best_th, p, se);
    res.trace.push_back({iter, p.sigma, p.rho(), p.nu, se, -best});
  };
  record(0);

  bool converged = false;
  int iter = 1;
  for (; iter <= opts.max_iter; ++iter) {
    std::vector<int> ord(npar + 1);
    for (int i = 0; i <= npar; ++i) ord[i] = i;
    std::sort(ord.begin(), ord.end(), [&](int a, int b) { return fval[a] < fval[b]; });
    std::vector<Vec> sx(npar + 1);
    std::vector<double> sf(npar + 1);
    for (int i = 0; i <= npar; ++i) {
      sx[i] = simplex[ord[i]];
      sf[i] = fval[ord[i]];
    }
    simplex = sx;
    fval = sf;

    double size = 0.0;
    for (int i = 1; i <= npar; ++i) size = std::max(size, (simplex[i] - simplex[0]).norm());
    if (size < opts.simplex_tol) {
      converged = true;
      record(iter);
      break;
    }

    Vec centroid = Vec::Zero(npar);
    for (int i = 0; i < npar; ++i) centroid += simplex[i];
    centroid /= npar;

    const Vec xr = centroid + alpha_r * (centroid - simplex[npar]);
    const double fr = objective(xr);
    if (fr < fval[0]) {
      const Vec xe = centroid + gamma_e * (xr - centroid);
      const double fe = objective(xe);
      if (fe < fr) {
        simplex[npar] = xe;
        fval[npar] = fe;
      } else {
        simplex[npar] = xr;
        fval[npar] = fr;
      }
    } else if (fr < fval[npar - 1]) {
      simplex[npar] = xr;
      fval[npar] = fr;
    } else {
      const bool outside = fr < fval[npar];
      const Vec xc = outside ? centroid + rho_c * (xr - centroid)
                             : centroid - rho_c * (centroid - simplex[npar]);
      const double fc = objective(xc);
      if (fc < (outside ? fr : fval[npar])) {
        simplex[npar] = xc;
        fval[npar] = fc;
      } else {
        for (int i = 1; i <= npar; ++i) {
          simplex[i] = simplex[0] + sigma_s * (simplex[i] - simplex[0]);
          fval[i] = objective(simplex[i]);
        }
      }
    }
    record(iter);
  }

  FieldParams p{};
  double se = 0.0;
  unpack(best_th, p, se);
  res.params = p;
  res.sigma_eps = se;
  res.loglik = -best;
  res.converged = converged;
  res.n_eval = n_eval;
  return res;
}

Scores score_predictions(const Vec& y_true, const Vec& pred_mean, const Vec& pred_sd) {
  if (y_true.size() != pred_mean.size() || y_true.size() != pred_sd.size())
    throw std::invalid_argument("score_predictions: length mismatch");
  if ((pred_sd.array() <= 0.0).any())
    throw std::invalid_argument("score_predictions: predictive sd must be positive");
  const Vec err = y_true - pred_mean;
  Scores s;
  s.mse = err.squaredNorm() / static_cast<double>(err.size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double z = err[i] / pred_sd[i];
    acc += 0.5 * std::log(2.0 * M_PI) + std::log(pred_sd[i]) + 0.5 * z * z;
  }
  s.neg_log_score = acc / static_cast<double>(err.size());
  return s;
}

ObservationSet load_observations(const std::string& path, int dim, double sigma_eps) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_observations: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_observations: empty file " + path);
  std::vector<std::array<double, 3>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::array<double, 3> row{};
    std::stringstream ss(line);
    std::string cell;
    for (int c = 0; c <= dim; ++c) {
      if (!std::getline(ss, cell, ','))
        throw std::runtime_error("load_observations: " + path + ":" + std::to_string(lineno) +
                                 ": expected " + std::to_string(dim + 1) + " columns");
      row[c] = std::stod(cell);
    }
    rows.push_back(row);
  }
  ObservationSet obs;
  obs.sigma_eps = sigma_eps;
  obs.locations.resize(static_cast<Eigen::Index>(rows.size()), dim);
  obs.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    for (int c = 0; c < dim; ++c) obs.locations(static_cast<Eigen::Index>(i), c) = rows[i][c];
    obs.y[static_cast<Eigen::Index>(i)] = rows[i][dim];
  }
  return obs;
}

void save_observations(const ObservationSet& obs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_observations: cannot open " + path);
  const int dim = static_cast<int>(obs.locations.cols());
  out << (dim == 1 ? "x,value" : "x,y,value") << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < obs.y.size(); ++i) {
    for (int c = 0; c < dim; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", obs.locations(i, c));
      out << buf << ',';
    }
    std::snprintf(buf, sizeof(buf), "%.17g", obs.y[i]);
    out << buf << '\n';
  }
}

}  // namespace fracgmrf
