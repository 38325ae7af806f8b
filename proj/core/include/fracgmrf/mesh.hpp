#ifndef FRACGMRF_MESH_HPP
#define FRACGMRF_MESH_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "fracgmrf/types.hpp"

namespace fracgmrf {

/// Simplicial mesh of an interval (dim 1) or a polygonal domain (dim 2).
/// Immutable after construction; safe to share across threads.
struct Mesh {
  int dim = 0;
  Mat nodes;                       // n_nodes x dim
  Eigen::MatrixXi elements;        // n_elements x (dim+1), 0-based node indices
  std::vector<int> boundary_nodes;
  double h = 0.0;                  // max element diameter

  // Structured-grid metadata used for O(1) point location. Loaded meshes
  // fall back to a linear element scan.
  bool structured = false;
  int nx = 0, ny = 0;
  double xa = 0, xb = 0, ya = 0, yb = 0;

  int n_nodes() const { return static_cast<int>(nodes.rows()); }
  int n_elements() const { return static_cast<int>(elements.rows()); }
  double element_measure(int e) const;   // length in 1D, area in 2D
  double element_diameter(int e) const;
  double domain_measure() const;
  /// min element diameter / max element diameter
  double quasi_uniformity() const;
};

Mesh build_interval_mesh(double a, double b, int n_nodes);
Mesh build_rect_mesh(std::array<double, 2> x_range, std::array<double, 2> y_range,
                     int nx, int ny);

/// Element containing `point` together with its barycentric weights
/// (2 in 1D, 3 in 2D). Points within 1e-10*h outside the domain are snapped.
struct ElementHit {
  int element;
  std::array<double, 3> weights;
};
std::optional<ElementHit> locate_point(const Mesh& mesh, const Vec& point);

/// phi_j(point). Throws std::domain_error for points outside the domain.
double hat_eval(const Mesh& mesh, int basis_index, const Vec& point);

/// Sparse matrix of hat-function evaluations, A_ij = phi_j(s_i).
struct Projector {
  SpMatRow weights;  // N x n_nodes, <= dim+1 nonzeros per row
  Eigen::Index rows() const { return weights.rows(); }
  Eigen::Index cols() const { return weights.cols(); }
};
Projector make_projector(const Mesh& mesh, const Mat& locations);

/// Drop columns, keeping those listed in `keep` (Dirichlet reduction).
Projector reduce_projector(const Projector& A, const std::vector<int>& keep);

// Plain-text mesh format: "dim n_nodes n_elements" header, node coordinate
// lines, then element index lines.
void save_mesh(const Mesh& mesh, const std::string& path);
Mesh load_mesh(const std::string& path);

// Coordinate-list export, one "row col value" line per stored entry.
void save_projector(const Projector& A, const std::string& path);

}  // namespace fracgmrf

#endif
