#include "fracgmrf/fem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fracgmrf/errors.hpp"

namespace fracgmrf {

namespace {

void element_geometry_2d(const Mesh& mesh, int e, double& area, Eigen::Matrix<double, 3, 2>& grads) {
  const auto p0 = mesh.nodes.row(mesh.elements(e, 0));
  const auto p1 = mesh.nodes.row(mesh.elements(e, 1));
  const auto p2 = mesh.nodes.row(mesh.elements(e, 2));
  const double det = (p1(0) - p0(0)) * (p2(1) - p0(1)) - (p2(0) - p0(0)) * (p1(1) - p0(1));
  area = 0.5 * std::abs(det);
  // grad phi_i = (b_i, c_i) / (2 area), b and c cyclic differences
  const double b0 = p1(1) - p2(1), b1 = p2(1) - p0(1), b2 = p0(1) - p1(1);
  const double c0 = p2(0) - p1(0), c1 = p0(0) - p2(0), c2 = p1(0) - p0(0);
  grads << b0, c0, b1, c1, b2, c2;
  grads /= det;  // signed det keeps orientation consistent
}

}  // namespace

SparseSymMatrix assemble_mass(const Mesh& mesh) {
  std::vector<Triplet> lower;
  if (mesh.dim == 1) {
    lower.reserve(mesh.n_elements() * 3);
    for (int e = 0; e < mesh.n_elements(); ++e) {
      const int i = mesh.elements(e, 0), j = mesh.elements(e, 1);
      const double len = mesh.element_measure(e);
      lower.emplace_back(i, i, len / 3.0);
      lower.emplace_back(j, j, len / 3.0);
      lower.emplace_back(std::max(i, j), std::min(i, j), len / 6.0);
    }
  } else {
    lower.reserve(mesh.n_elements() * 6);
    for (int e = 0; e < mesh.n_elements(); ++e) {
      const double area = mesh.element_measure(e);
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b <= a; ++b) {
          const int i = mesh.elements(e, a), j = mesh.elements(e, b);
          const double v = (a == b) ? area / 6.0 : area / 12.0;
          lower.emplace_back(std::max(i, j), std::min(i, j), v);
        }
    }
  }
  return SparseSymMatrix::from_lower_triplets(mesh.n_nodes(), lower);
}

SparseSymMatrix assemble_stiffness(const Mesh& mesh) {
  std::vector<Triplet> lower;
  if (mesh.dim == 1) {
    lower.reserve(mesh.n_elements() * 3);
    for (int e = 0; e < mesh.n_elements(); ++e) {
      const int i = mesh.elements(e, 0), j = mesh.elements(e, 1);
      const double len = mesh.element_measure(e);
      lower.emplace_back(i, i, 1.0 / len);
      lower.emplace_back(j, j, 1.0 / len);
      lower.emplace_back(std::max(i, j), std::min(i, j), -1.0 / len);
    }
  } else {
    lower.reserve(mesh.n_elements() * 6);
    Eigen::Matrix<double, 3, 2> grads;
    double area;
    for (int e = 0; e < mesh.n_elements(); ++e) {
      element_geometry_2d(mesh, e, area, grads);
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b <= a; ++b) {
          const int i = mesh.elements(e, a), j = mesh.elements(e, b);
          const double v = area * grads.row(a).dot(grads.row(b));
          lower.emplace_back(std::max(i, j), std::min(i, j), v);
        }
    }
  }
  return SparseSymMatrix::from_lower_triplets(mesh.n_nodes(), lower);
}

SparseSymMatrix assemble_operator(const Mesh& mesh, const OperatorSpec& spec) {
  if (!spec.varying() && !(spec.kappa > 0))
    throw std::invalid_argument("assemble_operator: kappa must be positive");
  if (spec.varying() && spec.boundary == Boundary::Neumann && !(spec.kappa0 > 0))
    throw std::invalid_argument("assemble_operator: varying kappa requires kappa0 > 0 under Neumann");

  SparseSymMatrix G = assemble_stiffness(mesh);
  SparseSymMatrix full;
  if (!spec.varying()) {
    const SpMat sum = G.mat() + spec.kappa * spec.kappa * assemble_mass(mesh).mat();
    full = SparseSymMatrix::from_full(sum);
  } else {
    const double k0sq = spec.kappa0 * spec.kappa0;
    std::vector<Triplet> lower;
    auto ksq_at = [&](const Vec& x) {
      const double k = spec.kappa_fn(x);
      if (spec.boundary == Boundary::Neumann && k < spec.kappa0)
        throw std::invalid_argument(
            "assemble_operator: kappa(x) below kappa0 at a quadrature point");
      (void)k0sq;
      return k * k;
    };
    if (mesh.dim == 1) {
      // 3-point Gauss-Legendre per element
      static const double gp[3] = {-std::sqrt(3.0 / 5.0), 0.0, std::sqrt(3.0 / 5.0)};
      static const double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
      for (int e = 0; e < mesh.n_elements(); ++e) {
        const int i = mesh.elements(e, 0), j = mesh.elements(e, 1);
        const double x0 = mesh.nodes(i, 0), x1 = mesh.nodes(j, 0);
        const double len = x1 - x0;
        double m00 = 0, m01 = 0, m11 = 0;
        for (int q = 0; q < 3; ++q) {
          const double t = 0.5 * (gp[q] + 1.0);
          Vec x(1);
          x(0) = x0 + t * len;
          const double w = 0.5 * len * gw[q] * ksq_at(x);
          m00 += w * (1.0 - t) * (1.0 - t);
          m01 += w * (1.0 - t) * t;
          m11 += w * t * t;
        }
        lower.emplace_back(i, i, m00);
        lower.emplace_back(j, j, m11);
        lower.emplace_back(std::max(i, j), std::min(i, j), m01);
      }
    } else {
      // 3-point mid-edge rule, degree-2 exact
      static const double bary[3][3] = {{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}};
      for (int e = 0; e < mesh.n_elements(); ++e) {
        const double area = mesh.element_measure(e);
        const auto p0 = mesh.nodes.row(mesh.elements(e, 0));
        const auto p1 = mesh.nodes.row(mesh.elements(e, 1));
        const auto p2 = mesh.nodes.row(mesh.elements(e, 2));
        double mloc[3][3] = {};
        for (int q = 0; q < 3; ++q) {
          Vec x(2);
          x(0) = bary[q][0] * p0(0) + bary[q][1] * p1(0) + bary[q][2] * p2(0);
          x(1) = bary[q][0] * p0(1) + bary[q][1] * p1(1) + bary[q][2] * p2(1);
          const double w = area / 3.0 * ksq_at(x);
          for (int a = 0; a < 3; ++a)
            for (int b = 0; b <= a; ++b) mloc[a][b] += w * bary[q][a] * bary[q][b];
        }
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b <= a; ++b) {
            const int i = mesh.elements(e, a), j = mesh.elements(e, b);
            lower.emplace_back(std::max(i, j), std::min(i, j), mloc[a][b]);
          }
      }
    }
    SparseSymMatrix Mk = SparseSymMatrix::from_lower_triplets(mesh.n_nodes(), lower);
    full = SparseSymMatrix::from_full(SpMat(G.mat() + Mk.mat()));
  }

  if (spec.boundary == Boundary::Dirichlet)
    return reduce(full, active_nodes(mesh, Boundary::Dirichlet));
  return full;
}

SparseSymMatrix lump_mass(const SparseSymMatrix& C) {
  std::vector<Triplet> lower;
  lower.reserve(C.n());
  const Vec sums = C.mat() * Vec::Ones(C.n());
  for (int i = 0; i < C.n(); ++i) {
    if (!(sums[i] > 0.0))
      throw NumericalError("lump_mass: nonpositive row sum at row " + std::to_string(i));
    lower.emplace_back(i, i, sums[i]);
  }
  return SparseSymMatrix::from_lower_triplets(C.n(), lower);
}

SpectralBounds spectral_bounds(const SparseSymMatrix& L, const SparseSymMatrix& C,
                               const OperatorSpec& spec) {
  if (L.n() != C.n()) throw std::invalid_argument("spectral_bounds: dimension mismatch");
  SpectralBounds out;
  out.lambda_min_lower = spec.kappa0_sq();

  const SparseSymMatrix Ct = lump_mass(C);
  Vec d = Ct.mat().diagonal().cwiseInverse();
  // power iteration on Ct^-1 L from an alternating-sign start
  Vec v(L.n());
  for (int i = 0; i < L.n(); ++i) v[i] = (i % 2 == 0) ? 1.0 : -1.0;
  v.normalize();
  double lambda = 0.0, prev = 0.0;
  bool converged = false;
  for (int step = 0; step < 50; ++step) {
    Vec w = L.mat() * v;
    w.array() *= d.array();
    const double nrm = w.norm();
    if (!(nrm > 0)) break;
    v = w / nrm;
    prev = lambda;
    lambda = v.dot(L.mat() * v) / v.dot(Ct.mat() * v);
    if (step > 3 && std::abs(lambda - prev) <= 1e-4 * std::abs(lambda)) {
      converged = true;
      break;
    }
  }
  if (converged) {
    out.lambda_max_upper = 1.01 * lambda;
    out.power_converged = true;
  } else {
    // Gershgorin bound of Ct^-1 L
    Vec rowsum = Vec::Zero(L.n());
    const SpMat& m = L.mat();
    for (int j = 0; j < m.outerSize(); ++j)
      for (SpMat::InnerIterator it(m, j); it; ++it) rowsum[it.row()] += std::abs(it.value());
    out.lambda_max_upper = (rowsum.array() * d.array()).maxCoeff();
    out.power_converged = false;
  }
  return out;
}

std::vector<int> active_nodes(const Mesh& mesh, Boundary boundary) {
  std::vector<int> keep;
  if (boundary == Boundary::Neumann) {
    keep.resize(mesh.n_nodes());
    for (int i = 0; i < mesh.n_nodes(); ++i) keep[i] = i;
    return keep;
  }
  std::vector<bool> on_boundary(mesh.n_nodes(), false);
  for (int b : mesh.boundary_nodes) on_boundary[b] = true;
  for (int i = 0; i < mesh.n_nodes(); ++i)
    if (!on_boundary[i]) keep.push_back(i);
  return keep;
}

}  // namespace fracgmrf
