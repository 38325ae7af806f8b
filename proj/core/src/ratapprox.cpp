#include "fracgmrf/ratapprox.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <stdexcept>
#include <tuple>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "fracgmrf/errors.hpp"

namespace fracgmrf {

namespace {

double polyval(const Vec& coeffs, double x) {
  double v = 0.0;
  for (Eigen::Index i = coeffs.size() - 1; i >= 0; --i) v = v * x + coeffs[i];
  return v;
}

Vec polyder(const Vec& coeffs) {
  if (coeffs.size() <= 1) return Vec::Zero(1);
  Vec d(coeffs.size() - 1);
  for (Eigen::Index i = 1; i < coeffs.size(); ++i) d[i - 1] = i * coeffs[i];
  return d;
}

/// Real roots of a polynomial (ascending coefficients) via the companion
/// matrix. Throws NumericalError when a root has a significant imaginary
/// part or roots are not distinct.
Vec real_distinct_roots(const Vec& coeffs, const char* who) {
  Eigen::Index deg = coeffs.size() - 1;
  while (deg > 0 && coeffs[deg] == 0.0) --deg;
  if (deg == 0) return Vec(0);
  Mat comp = Mat::Zero(deg, deg);
  for (Eigen::Index i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
  for (Eigen::Index i = 0; i < deg; ++i) comp(i, deg - 1) = -coeffs[i] / coeffs[deg];
  Eigen::EigenSolver<Mat> es(comp);
  if (es.info() != Eigen::Success)
    throw NumericalError(std::string(who) + ": companion eigensolve failed");
  const auto ev = es.eigenvalues();
  double maxmod = 0.0;
  for (Eigen::Index i = 0; i < deg; ++i) maxmod = std::max(maxmod, std::abs(ev[i]));
  Vec roots(deg);
  for (Eigen::Index i = 0; i < deg; ++i) {
    if (std::abs(ev[i].imag()) > 1e-8 * std::max(maxmod, 1.0))
      throw NumericalError(std::string(who) + ": complex denominator root " +
                           std::to_string(ev[i].real()) + " + " +
                           std::to_string(ev[i].imag()) + "i");
    roots[i] = ev[i].real();
  }
  std::sort(roots.data(), roots.data() + deg);
  for (Eigen::Index i = 0; i + 1 < deg; ++i)
    if (std::abs(roots[i + 1] - roots[i]) <= 1e-8 * std::max(maxmod, 1.0))
      throw NumericalError(std::string(who) + ": repeated pole near " + std::to_string(roots[i]));
  return roots;
}

}  // namespace

double RationalCoeffs::eval(double x) const { return polyval(a, x) / polyval(b, x); }

double PartialFractions::eval_x(double x) const {
  const double lam = 1.0 / x;
  double v = k;
  for (Eigen::Index i = 0; i < m; ++i) v += r[i] / (lam - p[i]);
  return v;
}

double chebyshev_T(int n, double x) {
  if (n == 0) return 1.0;
  double t0 = 1.0, t1 = x;
  for (int i = 2; i <= n; ++i) {
    const double t2 = 2.0 * x * t1 - t0;
    t0 = t1;
    t1 = t2;
  }
  return t1;
}

Vec chebyshev_coeffs(const std::function<double(double)>& f, double a, double b, int K) {
  // Gauss-Chebyshev quadrature on a grid fine enough that aliasing from the
  // neglected tail is negligible for the slowly decaying x^alpha expansions.
  const int P = 1 << 16;
  Vec c = Vec::Zero(K + 1);
  std::vector<double> fx(P), ct(P), c0(P), c1(P);
  for (int j = 0; j < P; ++j) {
    const double th = M_PI * (j + 0.5) / P;
    ct[j] = std::cos(th);
    fx[j] = f(a + (b - a) * 0.5 * (ct[j] + 1.0));
  }
  double acc = 0.0;
  for (int j = 0; j < P; ++j) acc += fx[j];
  c[0] = acc / P;
  if (K >= 1) {
    acc = 0.0;
    for (int j = 0; j < P; ++j) {
      c0[j] = 1.0;
      c1[j] = ct[j];
      acc += fx[j] * ct[j];
    }
    c[1] = 2.0 * acc / P;
  }
  for (int k = 2; k <= K; ++k) {
    acc = 0.0;
    for (int j = 0; j < P; ++j) {
      const double c2 = 2.0 * ct[j] * c1[j] - c0[j];
      c0[j] = c1[j];
      c1[j] = c2;
      acc += fx[j] * c2;
    }
    c[k] = 2.0 * acc / P;
  }
  return c;
}

double chebyshev_eval(const Vec& coeffs, double t) {
  double b1 = 0.0, b2 = 0.0;
  for (Eigen::Index k = coeffs.size() - 1; k >= 1; --k) {
    const double bn = 2.0 * t * b1 - b2 + coeffs[k];
    b2 = b1;
    b1 = bn;
  }
  return t * b1 - b2 + coeffs[0];
}

namespace {

/// Chebyshev -> monomial coefficients in the same variable t.
Vec cheb_to_monomial(const Vec& cheb) {
  const Eigen::Index n = cheb.size();
  std::vector<Vec> T(n);
  T[0] = Vec::Ones(1);
  if (n > 1) {
    T[1] = Vec::Zero(2);
    T[1][1] = 1.0;
  }
  for (Eigen::Index k = 2; k < n; ++k) {
    T[k] = Vec::Zero(k + 1);
    T[k].segment(1, k) += 2.0 * T[k - 1];
    T[k].head(T[k - 2].size()) -= T[k - 2];
  }
  Vec out = Vec::Zero(n);
  for (Eigen::Index k = 0; k < n; ++k) out.head(k + 1) += cheb[k] * T[k];
  return out;
}

/// Compose p(t) with the affine map t = (2x - a - b)/(b - a) by Horner steps.
Vec affine_substitute(const Vec& p, double a, double b) {
  const double lin0 = -(a + b) / (b - a), lin1 = 2.0 / (b - a);
  Vec out = Vec::Zero(p.size());
  Eigen::Index deg = 0;
  out[0] = p[p.size() - 1];
  for (Eigen::Index i = p.size() - 2; i >= 0; --i) {
    // out = out * (lin0 + lin1 x) + p[i]
    Vec next = Vec::Zero(p.size());
    for (Eigen::Index j = 0; j <= deg; ++j) {
      next[j] += out[j] * lin0;
      next[j + 1] += out[j] * lin1;
    }
    ++deg;
    next[0] += p[i];
    out = next;
  }
  return out;
}

void normalize_monic(Vec& a, Vec& b, const char* who) {
  const double lead = b[b.size() - 1];
  if (!(std::abs(lead) > 1e-300 * b.cwiseAbs().maxCoeff()))
    throw NumericalError(std::string(who) + ": denominator is not of full degree");
  a /= lead;
  b /= lead;
}

double measure_sup_error(const RationalCoeffs& rc) {
  const int G = 100001;
  double sup = 0.0;
  for (int i = 0; i < G; ++i) {
    const double x = rc.delta + (1.0 - rc.delta) * static_cast<double>(i) / (G - 1);
    sup = std::max(sup, std::abs(std::pow(x, rc.alpha) - rc.eval(x)));
  }
  return sup;
}

void check_rational_inputs(double alpha, int m, double delta, const char* who) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument(std::string(who) + ": alpha must be in (0,1)");
  if (m < 1) throw std::invalid_argument(std::string(who) + ": m must be >= 1");
  if (!(delta >= 0.0 && delta < 1.0))
    throw std::invalid_argument(std::string(who) + ": delta must be in [0,1)");
}

}  // namespace

RationalCoeffs chebyshev_pade(double alpha, int m, double delta) {
  check_rational_inputs(alpha, m, delta, "chebyshev_pade");
  const double a = delta, b = 1.0;
  const Vec c = chebyshev_coeffs([alpha](double x) { return std::pow(x, alpha); }, a, b, 2 * m);

  // [m/m] Pade of the one-sided series g(z) = sum (c_k/2) z^k.
  Vec g = 0.5 * c;
  Mat A(m, m);
  Vec rhs(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) A(i, j) = g[m + i - j];
    rhs[i] = -g[m + 1 + i];
  }
  Eigen::FullPivLU<Mat> lu(A);
  if (!lu.isInvertible())
    throw NumericalError("chebyshev_pade: Pade system is singular; try a smaller m");
  Vec d(m + 1);
  d[0] = 1.0;
  d.tail(m) = lu.solve(rhs);
  Vec n = Vec::Zero(m + 1);
  for (int i = 0; i <= m; ++i)
    for (int j = 0; j <= std::min(i, m); ++j) n[i] += d[j] * g[i - j];

  // Symmetrize n(z)/d(z) + n(1/z)/d(1/z) into Chebyshev coefficients in t.
  auto laurent = [m](const Vec& u, const Vec& v, int l) {
    double s = 0.0;
    for (int j = 0; j <= m; ++j) {
      const int idx = j - l;
      if (idx >= 0 && idx <= m) s += u[j] * v[idx];
    }
    return s;
  };
  Vec ncheb(m + 1), dcheb(m + 1);
  ncheb[0] = 2.0 * laurent(n, d, 0);
  dcheb[0] = laurent(d, d, 0);
  for (int l = 1; l <= m; ++l) {
    ncheb[l] = 2.0 * (laurent(n, d, l) + laurent(n, d, -l));
    dcheb[l] = 2.0 * laurent(d, d, l);
  }

  RationalCoeffs rc;
  rc.m = m;
  rc.alpha = alpha;
  rc.delta = delta;
  rc.a = affine_substitute(cheb_to_monomial(ncheb), a, b);
  rc.b = affine_substitute(cheb_to_monomial(dcheb), a, b);
  normalize_monic(rc.a, rc.b, "chebyshev_pade");
  rc.sup_error = measure_sup_error(rc);
  return rc;
}

namespace {

/// Barycentric rational interpolant of type [m/m] through 2m+1 nodes,
/// from the nullspace of the Loewner matrix of interlaced node splits.
struct BaryRational {
  Vec support, values, weights;

  double eval(double x) const {
    double num = 0.0, den = 0.0;
    for (Eigen::Index j = 0; j < support.size(); ++j) {
      const double dxj = x - support[j];
      if (dxj == 0.0) return values[j];
      const double t = weights[j] / dxj;
      num += t * values[j];
      den += t;
    }
    return num / den;
  }
};

BaryRational interpolate_rational(const Vec& nodes, const Vec& values) {
  const Eigen::Index n = nodes.size();  // 2m+1
  const Eigen::Index msup = (n + 1) / 2;
  BaryRational r;
  r.support.resize(msup);
  r.values.resize(msup);
  Vec xt(n - msup), ft(n - msup);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i % 2 == 0) {
      r.support[i / 2] = nodes[i];
      r.values[i / 2] = values[i];
    } else {
      xt[i / 2] = nodes[i];
      ft[i / 2] = values[i];
    }
  }
  Mat loewner(n - msup, msup);
  for (Eigen::Index i = 0; i < n - msup; ++i)
    for (Eigen::Index j = 0; j < msup; ++j)
      loewner(i, j) = (ft[i] - r.values[j]) / (xt[i] - r.support[j]);
  Eigen::JacobiSVD<Mat> svd(loewner, Eigen::ComputeFullV);
  r.weights = svd.matrixV().col(msup - 1);
  return r;
}

double local_max_error(const std::function<double(double)>& f, const BaryRational& r,
                       double lo, double hi, int npi) {
  double best = 0.0;
  int jbest = 0;
  std::vector<double> xs(npi), es(npi);
  for (int j = 0; j < npi; ++j) {
    xs[j] = lo + (hi - lo) * static_cast<double>(j) / (npi - 1);
    es[j] = std::abs(f(xs[j]) - r.eval(xs[j]));
    if (es[j] > best) {
      best = es[j];
      jbest = j;
    }
  }
  if (jbest > 0 && jbest + 1 < npi) {
    const double e0 = es[jbest - 1], e1 = es[jbest], e2 = es[jbest + 1];
    const double curv = e0 - 2.0 * e1 + e2;
    if (curv < 0.0) {
      double xstar = xs[jbest] + 0.5 * (e0 - e2) / curv * (xs[jbest] - xs[jbest - 1]);
      xstar = std::clamp(xstar, xs[jbest - 1], xs[jbest + 1]);
      best = std::max(best, std::abs(f(xstar) - r.eval(xstar)));
    }
  }
  return best;
}

}  // namespace

RationalCoeffs brasil(double alpha, int m, double delta, const BrasilOptions& opts) {
  check_rational_inputs(alpha, m, delta, "brasil");
  const double a = delta, b = 1.0;
  auto f = [alpha](double x) { return std::pow(x, alpha); };

  const int n = 2 * m + 1;
  Vec nodes(n);
  for (int k = 0; k < n; ++k)
    nodes[k] = a + (b - a) * 0.5 * (1.0 - std::cos(M_PI * (k + 0.5) / n));
  std::sort(nodes.data(), nodes.data() + n);

  BaryRational best_r;
  double best_dev = std::numeric_limits<double>::infinity();
  double gamma = opts.gamma, prev_dev = std::numeric_limits<double>::infinity();
  bool converged = false;
  Vec prev_nodes;

  Vec fvals(n), loc(n + 1);
  for (int it = 0; it < opts.max_iter; ++it) {
    for (int i = 0; i < n; ++i) fvals[i] = f(nodes[i]);
    BaryRational r = interpolate_rational(nodes, fvals);

    bool finite = true;
    for (int i = 0; i <= n; ++i) {
      const double lo = (i == 0) ? a : nodes[i - 1];
      const double hi = (i == n) ? b : nodes[i];
      loc[i] = local_max_error(f, r, lo, hi, opts.samples_per_interval);
      if (!std::isfinite(loc[i])) finite = false;
    }
    if (!finite) {
      // interpolant degenerated (pole between nodes); step back halfway
      if (prev_nodes.size() == 0)
        throw NumericalError("brasil: degenerate interpolant at the initial nodes");
      nodes = 0.5 * (nodes + prev_nodes);
      gamma = std::max(0.02, gamma * 0.5);
      continue;
    }
    const double dev = (loc.maxCoeff() - loc.minCoeff()) / loc.maxCoeff();
    if (dev < best_dev) {
      best_dev = dev;
      best_r = r;
    }
    if (dev <= opts.tol) {
      converged = true;
      break;
    }
    gamma = (dev >= prev_dev) ? std::max(0.02, gamma * 0.8) : std::min(opts.gamma, gamma * 1.1);
    prev_dev = dev;

    double log_gm = 0.0;
    for (int i = 0; i <= n; ++i) log_gm += std::log(std::max(loc[i], 1e-300));
    log_gm /= (n + 1);
    Vec lens(n + 1);
    for (int i = 0; i <= n; ++i) {
      const double lo = (i == 0) ? a : nodes[i - 1];
      const double hi = (i == n) ? b : nodes[i];
      const double fac = std::clamp(
          std::exp(gamma * (log_gm - std::log(std::max(loc[i], 1e-300)))), 0.25, 4.0);
      lens[i] = (hi - lo) * fac;
    }
    lens *= (b - a) / lens.sum();
    prev_nodes = nodes;
    double acc = a;
    for (int i = 0; i < n; ++i) {
      acc += lens[i];
      nodes[i] = acc;
    }
  }
  if (!std::isfinite(best_dev))
    throw NumericalError("brasil: no valid interpolant found");

  // Expand the barycentric form into monomial coefficients:
  // N(x) = sum_j w_j f_j prod_{l != j} (x - s_l), D(x) likewise without f_j.
  const Eigen::Index msup = best_r.support.size();
  Vec acoef = Vec::Zero(msup), bcoef = Vec::Zero(msup);
  for (Eigen::Index j = 0; j < msup; ++j) {
    Vec prod = Vec::Zero(msup);
    prod[0] = 1.0;
    Eigen::Index deg = 0;
    for (Eigen::Index l = 0; l < msup; ++l) {
      if (l == j) continue;
      for (Eigen::Index t = deg; t >= 0; --t) {
        prod[t + 1] += prod[t];
        prod[t] *= -best_r.support[l];
      }
      ++deg;
    }
    acoef += best_r.weights[j] * best_r.values[j] * prod;
    bcoef += best_r.weights[j] * prod;
  }

  RationalCoeffs rc;
  rc.m = m;
  rc.alpha = alpha;
  rc.delta = delta;
  rc.a = acoef;
  rc.b = bcoef;
  normalize_monic(rc.a, rc.b, "brasil");
  rc.converged = converged;
  rc.deviation = best_dev;
  rc.sup_error = measure_sup_error(rc);
  return rc;
}

PartialFractions decompose_rational(const Vec& a, const Vec& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("decompose_rational: need equal-degree coefficients, m >= 1");
  PartialFractions pf;
  pf.m = static_cast<int>(b.size()) - 1;
  pf.k = a[pf.m] / b[pf.m];
  pf.p = real_distinct_roots(b, "decompose_rational");
  if (pf.p.size() != static_cast<Eigen::Index>(pf.m))
    throw NumericalError("decompose_rational: denominator degree collapsed");
  pf.r.resize(pf.m);
  const Vec bq = polyder(b);
  for (int i = 0; i < pf.m; ++i) pf.r[i] = polyval(a, pf.p[i]) / polyval(bq, pf.p[i]);
  return pf;
}

PartialFractions to_partial_fractions(const RationalCoeffs& coeffs) {
  // Substitute x = 1/lambda: with equal degrees the coefficient arrays just
  // reverse, and the decomposition happens in the operator variable.
  const Vec arev = coeffs.a.reverse();
  const Vec brev = coeffs.b.reverse();
  PartialFractions pf = decompose_rational(arev, brev);
  pf.alpha = coeffs.alpha;

  std::ostringstream bad;
  if (!(pf.k > 0.0)) bad << " k=" << pf.k;
  for (int i = 0; i < pf.m; ++i) {
    if (!(pf.p[i] < 0.0)) bad << " p_" << i + 1 << "=" << pf.p[i];
    if (!(pf.r[i] > 0.0)) bad << " r_" << i + 1 << "=" << pf.r[i];
  }
  if (!bad.str().empty())
    throw NumericalError("to_partial_fractions: positivity violated:" + bad.str());

  // Reconstruction check at 20 Chebyshev points of [delta, 1].
  for (int i = 0; i < 20; ++i) {
    const double x = coeffs.delta +
                     (1.0 - coeffs.delta) * 0.5 * (1.0 - std::cos(M_PI * (i + 0.5) / 20.0));
    const double direct = coeffs.eval(x);
    const double recon = pf.eval_x(x);
    if (std::abs(recon - direct) > 1e-10 * std::abs(direct))
      throw NumericalError("to_partial_fractions: reconstruction mismatch at x=" +
                           std::to_string(x));
  }
  return pf;
}

CalibratedOrder calibrated_order(double beta, int d, double h, double eps) {
  if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("calibrated_order: h must be in (0,1)");
  if (!(eps > 0.0)) throw std::invalid_argument("calibrated_order: eps must be positive");
  const double two_beta = 2.0 * beta;
  const double frac = two_beta - std::floor(two_beta);
  CalibratedOrder out;
  if (frac < 1e-12 || frac > 1.0 - 1e-12) {
    out.integer_case = true;
    out.m = 0;
    return out;
  }
  const double rate = std::min(4.0 * beta - 0.5 * d - eps, 2.0);
  const double lh = std::log(h);
  const double val = (rate + 0.5 * d) * (rate + 0.5 * d) * lh * lh /
                     (4.0 * M_PI * M_PI * frac);
  out.m = std::max(1, static_cast<int>(std::ceil(val)));
  return out;
}

namespace {

std::shared_mutex cache_mutex;
std::map<std::tuple<long long, int, double, int>, PartialFractions> pf_cache;

}  // namespace

PartialFractions cached_partial_fractions(double alpha, int m, double delta, RationalAlgo algo) {
  const long long key_alpha = static_cast<long long>(std::llround(alpha * 1e6));
  const auto key = std::make_tuple(key_alpha, m, delta, static_cast<int>(algo));
  {
    std::shared_lock lock(cache_mutex);
    auto it = pf_cache.find(key);
    if (it != pf_cache.end()) return it->second;
  }
  const RationalCoeffs rc = (algo == RationalAlgo::Brasil)
                                ? brasil(alpha, m, delta)
                                : chebyshev_pade(alpha, m, delta);
  PartialFractions pf = to_partial_fractions(rc);
  std::unique_lock lock(cache_mutex);
  return pf_cache.emplace(key, std::move(pf)).first->second;
}

}  // namespace fracgmrf
