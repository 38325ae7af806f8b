#include "fracgmrf/gmrf.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "fracgmrf/errors.hpp"
#include "fracgmrf/rng.hpp"

namespace fracgmrf {

FieldParams FieldParams::from_kappa(double nu, double kappa, double sigma, int d) {
  if (!(nu > 0) || !(kappa > 0) || !(sigma > 0) || (d != 1 && d != 2))
    throw std::invalid_argument("FieldParams: need nu, kappa, sigma > 0 and d in {1,2}");
  return FieldParams{nu, kappa, sigma, d};
}

FieldParams FieldParams::from_range(double nu, double rho, double sigma, int d) {
  if (!(rho > 0)) throw std::invalid_argument("FieldParams: range must be positive");
  return from_kappa(nu, std::sqrt(8.0 * nu) / rho, sigma, d);
}

double FieldParams::tau() const {
  const double tau_sq = std::tgamma(nu) /
                        (sigma * sigma * std::pow(kappa, 2.0 * nu) *
                         std::pow(4.0 * M_PI, d / 2.0) * std::tgamma(nu + d / 2.0));
  return std::sqrt(tau_sq);
}

double GmrfModel::block_logdet(int i) const {
  return 2.0 * factors[i]->matrixL().nestedExpression().diagonal().array().log().sum();
}

double GmrfModel::total_logdet() const {
  double s = 0.0;
  for (int i = 0; i < n_blocks(); ++i) s += block_logdet(i);
  return s;
}

namespace {

SpMat mirror_lower(const SpMat& mat) {
  // products of symmetric matrices are symmetric in exact arithmetic only;
  // rebuild from the lower triangle so the stored halves match bitwise
  std::vector<Triplet> full;
  full.reserve(static_cast<size_t>(mat.nonZeros()));
  for (int j = 0; j < mat.outerSize(); ++j)
    for (SpMat::InnerIterator it(mat, j); it; ++it) {
      if (it.row() < it.col()) continue;
      full.emplace_back(it.row(), it.col(), it.value());
      if (it.row() != it.col()) full.emplace_back(it.col(), it.row(), it.value());
    }
  SpMat out(mat.rows(), mat.cols());
  out.setFromTriplets(full.begin(), full.end());
  out.makeCompressed();
  return out;
}

SpMat prune_tiny(const SpMat& mat) {
  const double thresh = 1e-300;
  SpMat out = mat;
  out.prune([thresh](const Eigen::Index&, const Eigen::Index&, double v) {
    return std::abs(v) > thresh;
  });
  return out;
}

}  // namespace

GmrfModel build_model(const Mesh& mesh, const FieldParams& params, const OperatorSpec& spec,
                      int m, bool lumped, double delta, RationalAlgo algo) {
  GmrfModel model;
  model.params = params;
  model.lumped = lumped;
  model.delta = delta;
  model.algo = algo;
  model.tau = spec.has_tau() ? spec.tau : params.tau();
  model.kappa0_sq = spec.kappa0_sq();
  model.active = active_nodes(mesh, spec.boundary);

  const double two_beta = params.two_beta();
  const double nearest = std::round(two_beta);
  model.integer_case = std::abs(two_beta - nearest) <= 1e-12;
  if (model.integer_case) {
    model.floor_2beta = static_cast<int>(nearest);
    model.frac_2beta = 0.0;
    model.m = 0;
  } else {
    model.floor_2beta = static_cast<int>(std::floor(two_beta));
    model.frac_2beta = two_beta - model.floor_2beta;
    if (m < 1) throw std::invalid_argument("build_model: m >= 1 required for fractional 2*beta");
    model.m = m;
  }

  SparseSymMatrix Cfull = assemble_mass(mesh);
  if (spec.boundary == Boundary::Dirichlet) Cfull = reduce(Cfull, model.active);
  model.C = Cfull;
  model.Ct = lump_mass(model.C);
  model.L = assemble_operator(mesh, spec);
  if (model.L.n() != model.C.n())
    throw std::invalid_argument("build_model: operator/mass dimension mismatch");

  const int n = model.C.n();
  const SpMat& Cuse = lumped ? model.Ct.mat() : model.C.mat();
  const SpMat Lhat = SpMat(model.L.mat() / model.kappa0_sq);

  // P_j = Lhat (Cuse^-1 Lhat)^j, P_{-1} = Cuse
  auto next_power = [&](const SpMat& prev) {
    SpMat res;
    if (lumped) {
      const Vec dinv = model.Ct.mat().diagonal().cwiseInverse();
      SpMat scaled = prev;
      for (int j = 0; j < scaled.outerSize(); ++j)
        for (SpMat::InnerIterator it(scaled, j); it; ++it)
          it.valueRef() *= dinv[it.row()];
      res = Lhat * scaled;
    } else {
      // consistent mass: dense solve, kept for oracle validation at small n
      if (n > 2000)
        throw std::invalid_argument("build_model: consistent-mass blocks limited to n <= 2000");
      Eigen::SimplicialLLT<SpMat> cchol(model.C.mat());
      if (cchol.info() != Eigen::Success)
        throw NumericalError("build_model: mass matrix factorization failed");
      Mat dense = cchol.solve(Mat(prev));
      dense = Mat(Lhat) * dense;
      res = dense.sparseView();
    }
    return mirror_lower(prune_tiny(res));
  };

  std::vector<SpMat> powers;  // powers[j] = P_{j-1}; powers[0] = Cuse
  powers.push_back(Cuse);
  powers.push_back(Lhat);
  const int max_pow = model.integer_case ? model.floor_2beta - 1 : model.floor_2beta;
  for (int j = 1; j <= max_pow; ++j) powers.push_back(next_power(powers.back()));

  const double scale_pow = model.integer_case ? static_cast<double>(model.floor_2beta)
                                              : two_beta;
  model.scale = model.tau * model.tau * std::pow(model.kappa0_sq, scale_pow);

  if (model.integer_case) {
    // Q = tau^2 L (C^-1 L)^{2 beta - 1}; kappa0 rescaling cancels exactly
    const int npow = model.floor_2beta;
    if (npow < 1) throw std::invalid_argument("build_model: integer 2*beta must be >= 1");
    SpMat Q = model.scale * powers[npow];
    model.blocks.push_back(SparseSymMatrix::from_full(Q));
  } else {
    model.pf = cached_partial_fractions(model.frac_2beta, model.m, delta, algo);
    const int fl = model.floor_2beta;
    const SpMat& Pfl = powers[fl + 1];      // Lhat (C^-1 Lhat)^fl
    const SpMat& Pflm1 = powers[fl];        // Lhat (C^-1 Lhat)^{fl-1}, or Cuse at fl = 0
    for (int i = 0; i < model.m; ++i) {
      SpMat Q = (model.scale / model.pf.r[i]) * SpMat(Pfl - model.pf.p[i] * Pflm1);
      model.blocks.push_back(SparseSymMatrix::from_full(Q));
    }
    // K_{fl}^{-1}: fl = 0 gives (k C^-1)^{-1} = C / k
    SpMat Qlast = (model.scale / model.pf.k) * powers[fl];
    model.blocks.push_back(SparseSymMatrix::from_full(Qlast));
  }

  for (int i = 0; i < model.n_blocks(); ++i) {
    auto chol = std::make_shared<SparseChol>();
    chol->compute(model.blocks[i].mat());
    if (chol->info() != Eigen::Success)
      throw NumericalError("build_model: Cholesky failed on precision block " +
                           std::to_string(i + 1) + " of " + std::to_string(model.n_blocks()));
    model.factors.push_back(std::move(chol));
  }
  return model;
}

Mat implied_covariance_dense(const GmrfModel& model, bool consistent_mass) {
  const int n = model.n();
  if (n > 5000) throw std::invalid_argument("implied_covariance_dense: n > 5000");
  const Mat Cuse = consistent_mass ? Mat(model.C.mat()) : Mat(model.Ct.mat());
  const Mat Lhat = Mat(model.L.mat()) / model.kappa0_sq;
  const double cov_scale = 1.0 / model.scale;

  Eigen::LLT<Mat> lulh(Lhat);
  if (model.integer_case) {
    const int npow = model.floor_2beta;
    Mat cov = lulh.solve(Mat::Identity(n, n));  // Lhat^-1
    for (int j = 1; j < npow; ++j) cov = lulh.solve(Cuse * cov);
    return cov_scale * cov;
  }

  const int fl = model.floor_2beta;
  Mat cov = Mat::Zero(n, n);
  for (int i = 0; i < model.m; ++i) {
    const Mat Mi = Lhat - model.pf.p[i] * Cuse;
    cov += model.pf.r[i] * Eigen::LLT<Mat>(Mi).solve(Mat::Identity(n, n));
  }
  if (fl >= 1) {
    Mat Kf = lulh.solve(Mat::Identity(n, n));
    for (int j = 1; j < fl; ++j) Kf = lulh.solve(Cuse * Kf);
    // prefix (Lhat^-1 Cuse)^fl applied to the pole sum
    for (int j = 0; j < fl; ++j) cov = lulh.solve(Cuse * cov);
    cov += model.pf.k * Kf;
  } else {
    cov += model.pf.k * Cuse.inverse();
  }
  return cov_scale * cov;
}

Mat sample_prior(const GmrfModel& model, int n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("sample_prior: n_samples must be >= 1");
  const int n = model.n();
  GaussianStream stream(seed);
  Mat out = Mat::Zero(n_samples, n);
  Vec z(n);
  for (int s = 0; s < n_samples; ++s) {
    for (int i = 0; i < model.n_blocks(); ++i) {
      const auto& chol = *model.factors[i];
      for (int j = 0; j < n; ++j) z[j] = stream.next();
      // Q = P^T L L^T P  =>  x = P^-1 L^-T z has covariance Q^-1
      Vec v = chol.matrixU().solve(z);
      out.row(s) += (chol.permutationPinv() * v).transpose();
    }
  }
  return out;
}

void dump_model(const GmrfModel& model, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (int i = 0; i < model.n_blocks(); ++i)
    model.blocks[i].save(dir + "/Q" + std::to_string(i + 1) + ".txt");
  std::ofstream man(dir + "/manifest.txt");
  if (!man) throw std::runtime_error("dump_model: cannot write manifest");
  char buf[64];
  auto put = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    man << key << '=' << buf << '\n';
  };
  put("beta", model.params.beta());
  put("nu", model.params.nu);
  put("kappa", model.params.kappa);
  put("sigma", model.params.sigma);
  put("tau", model.tau);
  put("delta", model.delta);
  man << "d=" << model.params.d << '\n';
  man << "m=" << model.m << '\n';
  man << "blocks=" << model.n_blocks() << '\n';
  man << "lumped=" << (model.lumped ? 1 : 0) << '\n';
  man << "integer_case=" << (model.integer_case ? 1 : 0) << '\n';
  man << "algo=" << (model.algo == RationalAlgo::Brasil ? "brasil" : "chebpade") << '\n';
}

}  // namespace fracgmrf
