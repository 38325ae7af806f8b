#ifndef FRACGMRF_FEM_HPP
#define FRACGMRF_FEM_HPP

#include <cmath>
#include <functional>
#include <vector>

#include "fracgmrf/mesh.hpp"
#include "fracgmrf/sparse.hpp"

namespace fracgmrf {

enum class Boundary { Neumann, Dirichlet };

/// Specification of the operator kappa^2 - Laplacian. kappa is either a
/// positive constant or a spatially varying function bounded below by
/// kappa0 > 0 (required under Neumann conditions). tau, when set, overrides
/// the value derived from the marginal standard deviation; it scales the
/// field variance by tau^-2 and never enters assembly.
struct OperatorSpec {
  double kappa = 1.0;
  std::function<double(const Vec&)> kappa_fn;  // empty: constant kappa
  double kappa0 = 0.0;                         // lower bound for varying kappa
  Boundary boundary = Boundary::Neumann;
  double tau = std::numeric_limits<double>::quiet_NaN();

  bool varying() const { return static_cast<bool>(kappa_fn); }
  bool has_tau() const { return std::isfinite(tau); }
  double kappa0_sq() const {
    const double k0 = varying() ? kappa0 : kappa;
    return k0 * k0;
  }
};

SparseSymMatrix assemble_mass(const Mesh& mesh);
SparseSymMatrix assemble_stiffness(const Mesh& mesh);

/// L = G + (kappa^2 weighted mass). Constant kappa uses the entry-wise
/// identity L = G + kappa^2 C; varying kappa integrates kappa^2 phi_i phi_j
/// with a 3-point Gauss rule (1D) or the 3-point mid-edge rule (2D).
/// Dirichlet conditions drop boundary rows and columns.
SparseSymMatrix assemble_operator(const Mesh& mesh, const OperatorSpec& spec);

/// Diagonal matrix of row sums. Throws NumericalError if a row sum is <= 0.
SparseSymMatrix lump_mass(const SparseSymMatrix& C);

struct SpectralBounds {
  double lambda_min_lower = 0.0;
  double lambda_max_upper = 0.0;
  bool power_converged = true;  // false: Gershgorin fallback was used
};

/// Bounds for the generalized spectrum of (L, C): kappa0^2 below, a power
/// iteration on lumped(C)^-1 L (at most 50 steps, inflated by 1.01) above.
SpectralBounds spectral_bounds(const SparseSymMatrix& L, const SparseSymMatrix& C,
                               const OperatorSpec& spec);

/// Indices of nodes carrying basis functions under `boundary` (all nodes for
/// Neumann, interior nodes for Dirichlet), in ascending order.
std::vector<int> active_nodes(const Mesh& mesh, Boundary boundary);

}  // namespace fracgmrf

#endif
