#ifndef FRACGMRF_RATAPPROX_HPP
#define FRACGMRF_RATAPPROX_HPP

#include <functional>
#include <limits>

#include "fracgmrf/types.hpp"

namespace fracgmrf {

/// Rational approximation r(x) = p(x)/q(x) of x^alpha on [delta, 1], with
/// numerator and denominator of equal degree m and monic denominator.
struct RationalCoeffs {
  int m = 0;
  Vec a;  // numerator coefficients, ascending powers, size m+1
  Vec b;  // denominator coefficients, ascending powers, size m+1, b[m] = 1
  double delta = 0.0;
  double alpha = 0.0;
  bool converged = true;                                      // brasil only
  double deviation = std::numeric_limits<double>::quiet_NaN();  // equioscillation spread
  double sup_error = std::numeric_limits<double>::quiet_NaN();  // on a dense grid

  double eval(double x) const;
};

/// Partial fractions of the approximation in the operator variable
/// lambda = 1/x:  p(x)/q(x) = k + sum_i r_i / (lambda - p_i).
/// Poles are negative, residues and k positive (enforced at construction).
struct PartialFractions {
  int m = 0;
  double k = 0.0;
  Vec r;  // residues, size m
  Vec p;  // poles, size m
  double alpha = 0.0;

  /// k + sum_i r_i / (lambda - p_i) at lambda = 1/x.
  double eval_x(double x) const;
};

enum class RationalAlgo { Brasil, ChebyshevPade };

// Chebyshev building blocks.
double chebyshev_T(int n, double x);
/// Coefficients c_0..c_K with f(x) ~ c_0 + sum_{k>=1} c_k T_k(t),
/// t the affine map of [a,b] onto [-1,1].
Vec chebyshev_coeffs(const std::function<double(double)>& f, double a, double b, int K);
double chebyshev_eval(const Vec& coeffs, double t);

/// Clenshaw-Lord Chebyshev-Pade approximant of x^alpha on [delta, 1]:
/// [m/m] Pade of the one-sided Laurent series of the Chebyshev expansion,
/// symmetrized back to a rational function of x.
RationalCoeffs chebyshev_pade(double alpha, int m, double delta);

struct BrasilOptions {
  double tol = 1e-4;   // relative equioscillation deviation
  int max_iter = 200;
  double gamma = 0.6;  // rebalancing exponent (annealed downward on stall)
  int samples_per_interval = 48;
};

/// Best rational approximation of x^alpha on [delta, 1] by iterative
/// interval rebalancing of a barycentric interpolant.
RationalCoeffs brasil(double alpha, int m, double delta, const BrasilOptions& opts = {});

/// Partial fractions of p/q in its own variable: poles are the roots of q,
/// k the leading-coefficient ratio, residues p(p_i)/q'(p_i). No sign checks.
PartialFractions decompose_rational(const Vec& a, const Vec& b);

/// Operator-variable decomposition of `coeffs` used by the GMRF blocks,
/// with positivity validation and a reconstruction check.
PartialFractions to_partial_fractions(const RationalCoeffs& coeffs);

struct CalibratedOrder {
  int m = 0;
  bool integer_case = false;  // 2*beta integer: no rational part
};
CalibratedOrder calibrated_order(double beta, int d, double h, double eps = 0.01);

/// Process-wide cache keyed by (alpha rounded to 1e-6, m, delta, algo).
PartialFractions cached_partial_fractions(double alpha, int m, double delta, RationalAlgo algo);

}  // namespace fracgmrf

#endif
