#include "fracgmrf/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace fracgmrf {

double Mesh::element_measure(int e) const {
  if (dim == 1) {
    return std::abs(nodes(elements(e, 1), 0) - nodes(elements(e, 0), 0));
  }
  const auto p0 = nodes.row(elements(e, 0));
  const auto p1 = nodes.row(elements(e, 1));
  const auto p2 = nodes.row(elements(e, 2));
  return 0.5 * std::abs((p1(0) - p0(0)) * (p2(1) - p0(1)) -
                        (p2(0) - p0(0)) * (p1(1) - p0(1)));
}

double Mesh::element_diameter(int e) const {
  if (dim == 1) return element_measure(e);
  double d = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b)
      d = std::max(d, (nodes.row(elements(e, a)) - nodes.row(elements(e, b))).norm());
  return d;
}

double Mesh::domain_measure() const {
  double total = 0.0;
  for (int e = 0; e < n_elements(); ++e) total += element_measure(e);
  return total;
}

double Mesh::quasi_uniformity() const {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (int e = 0; e < n_elements(); ++e) {
    const double d = element_diameter(e);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return hi > 0 ? lo / hi : 0.0;
}

Mesh build_interval_mesh(double a, double b, int n_nodes) {
  if (n_nodes < 2) throw std::invalid_argument("build_interval_mesh: n_nodes must be >= 2");
  if (!(b > a)) throw std::invalid_argument("build_interval_mesh: requires b > a");
  Mesh m;
  m.dim = 1;
  m.nodes.resize(n_nodes, 1);
  for (int i = 0; i < n_nodes; ++i)
    m.nodes(i, 0) = a + (b - a) * static_cast<double>(i) / (n_nodes - 1);
  m.elements.resize(n_nodes - 1, 2);
  for (int e = 0; e < n_nodes - 1; ++e) {
    m.elements(e, 0) = e;
    m.elements(e, 1) = e + 1;
  }
  m.boundary_nodes = {0, n_nodes - 1};
  m.h = (b - a) / (n_nodes - 1);
  m.structured = true;
  m.nx = n_nodes;
  m.xa = a;
  m.xb = b;
  return m;
}

Mesh build_rect_mesh(std::array<double, 2> xr, std::array<double, 2> yr, int nx, int ny) {
  if (nx < 2 || ny < 2) throw std::invalid_argument("build_rect_mesh: nx, ny must be >= 2");
  if (!(xr[1] > xr[0]) || !(yr[1] > yr[0]))
    throw std::invalid_argument("build_rect_mesh: degenerate range");
  Mesh m;
  m.dim = 2;
  const int n = nx * ny;
  m.nodes.resize(n, 2);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int id = j * nx + i;
      m.nodes(id, 0) = xr[0] + (xr[1] - xr[0]) * static_cast<double>(i) / (nx - 1);
      m.nodes(id, 1) = yr[0] + (yr[1] - yr[0]) * static_cast<double>(j) / (ny - 1);
    }
  // Each cell split along the lower-left -> upper-right diagonal.
  m.elements.resize(2 * (nx - 1) * (ny - 1), 3);
  int e = 0;
  for (int j = 0; j + 1 < ny; ++j)
    for (int i = 0; i + 1 < nx; ++i) {
      const int v00 = j * nx + i, v10 = v00 + 1;
      const int v01 = v00 + nx, v11 = v01 + 1;
      m.elements.row(e++) << v00, v10, v11;
      m.elements.row(e++) << v00, v11, v01;
    }
  std::set<int> bset;
  for (int i = 0; i < nx; ++i) {
    bset.insert(i);
    bset.insert((ny - 1) * nx + i);
  }
  for (int j = 0; j < ny; ++j) {
    bset.insert(j * nx);
    bset.insert(j * nx + nx - 1);
  }
  m.boundary_nodes.assign(bset.begin(), bset.end());
  const double dx = (xr[1] - xr[0]) / (nx - 1);
  const double dy = (yr[1] - yr[0]) / (ny - 1);
  m.h = std::hypot(dx, dy);
  m.structured = true;
  m.nx = nx;
  m.ny = ny;
  m.xa = xr[0];
  m.xb = xr[1];
  m.ya = yr[0];
  m.yb = yr[1];
  return m;
}

namespace {

std::optional<ElementHit> bary_in_element(const Mesh& mesh, int e, const Vec& p, double tol) {
  if (mesh.dim == 1) {
    const double x0 = mesh.nodes(mesh.elements(e, 0), 0);
    const double x1 = mesh.nodes(mesh.elements(e, 1), 0);
    const double len = x1 - x0;
    const double w1 = (p(0) - x0) / len;
    if (w1 < -tol || w1 > 1.0 + tol) return std::nullopt;
    const double c1 = std::clamp(w1, 0.0, 1.0);
    return ElementHit{e, {1.0 - c1, c1, 0.0}};
  }
  const auto p0 = mesh.nodes.row(mesh.elements(e, 0));
  const auto p1 = mesh.nodes.row(mesh.elements(e, 1));
  const auto p2 = mesh.nodes.row(mesh.elements(e, 2));
  const double det = (p1(0) - p0(0)) * (p2(1) - p0(1)) - (p2(0) - p0(0)) * (p1(1) - p0(1));
  const double w1 = ((p(0) - p0(0)) * (p2(1) - p0(1)) - (p2(0) - p0(0)) * (p(1) - p0(1))) / det;
  const double w2 = ((p1(0) - p0(0)) * (p(1) - p0(1)) - (p(0) - p0(0)) * (p1(1) - p0(1))) / det;
  const double w0 = 1.0 - w1 - w2;
  if (w0 < -tol || w1 < -tol || w2 < -tol) return std::nullopt;
  double c0 = std::max(w0, 0.0), c1 = std::max(w1, 0.0), c2 = std::max(w2, 0.0);
  const double s = c0 + c1 + c2;
  return ElementHit{e, {c0 / s, c1 / s, c2 / s}};
}

}  // namespace

std::optional<ElementHit> locate_point(const Mesh& mesh, const Vec& point) {
  // Boundary snap tolerance in barycentric units.
  const double tol = 1e-10;
  if (mesh.structured) {
    if (mesh.dim == 1) {
      const double rel = (point(0) - mesh.xa) / (mesh.xb - mesh.xa);
      if (rel < -tol || rel > 1.0 + tol) return std::nullopt;
      int e = std::clamp(static_cast<int>(rel * (mesh.nx - 1)), 0, mesh.nx - 2);
      // rounding can land one cell off
      for (int cand : {e, e - 1, e + 1})
        if (cand >= 0 && cand < mesh.n_elements())
          if (auto hit = bary_in_element(mesh, cand, point, tol)) return hit;
      return std::nullopt;
    }
    const double rx = (point(0) - mesh.xa) / (mesh.xb - mesh.xa);
    const double ry = (point(1) - mesh.ya) / (mesh.yb - mesh.ya);
    if (rx < -tol || rx > 1.0 + tol || ry < -tol || ry > 1.0 + tol) return std::nullopt;
    const int ci = std::clamp(static_cast<int>(rx * (mesh.nx - 1)), 0, mesh.nx - 2);
    const int cj = std::clamp(static_cast<int>(ry * (mesh.ny - 1)), 0, mesh.ny - 2);
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di) {
        const int i = ci + di, j = cj + dj;
        if (i < 0 || j < 0 || i + 1 >= mesh.nx || j + 1 >= mesh.ny) continue;
        const int base = 2 * (j * (mesh.nx - 1) + i);
        if (auto hit = bary_in_element(mesh, base, point, tol)) return hit;
        if (auto hit = bary_in_element(mesh, base + 1, point, tol)) return hit;
      }
    return std::nullopt;
  }
  for (int e = 0; e < mesh.n_elements(); ++e)
    if (auto hit = bary_in_element(mesh, e, point, tol)) return hit;
  return std::nullopt;
}

double hat_eval(const Mesh& mesh, int basis_index, const Vec& point) {
  if (basis_index < 0 || basis_index >= mesh.n_nodes())
    throw std::invalid_argument("hat_eval: basis index out of range");
  const auto hit = locate_point(mesh, point);
  if (!hit) throw std::domain_error("hat_eval: point outside the mesh domain");
  for (int v = 0; v <= mesh.dim; ++v)
    if (mesh.elements(hit->element, v) == basis_index) return hit->weights[v];
  return 0.0;
}

Projector make_projector(const Mesh& mesh, const Mat& locations) {
  if (locations.cols() != mesh.dim)
    throw std::invalid_argument("make_projector: location dimension mismatch");
  const Eigen::Index npts = locations.rows();
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(npts) * (mesh.dim + 1));
  std::vector<Eigen::Index> offending;
  for (Eigen::Index i = 0; i < npts; ++i) {
    const Vec p = locations.row(i).transpose();
    const auto hit = locate_point(mesh, p);
    if (!hit) {
      offending.push_back(i);
      continue;
    }
    for (int v = 0; v <= mesh.dim; ++v)
      if (hit->weights[v] != 0.0)
        trips.emplace_back(i, mesh.elements(hit->element, v), hit->weights[v]);
  }
  if (!offending.empty()) {
    std::ostringstream oss;
    oss << "make_projector: " << offending.size() << " location(s) outside the domain, indices:";
    for (size_t k = 0; k < offending.size() && k < 10; ++k) oss << ' ' << offending[k];
    if (offending.size() > 10) oss << " ...";
    throw std::domain_error(oss.str());
  }
  Projector A;
  A.weights.resize(npts, mesh.n_nodes());
  A.weights.setFromTriplets(trips.begin(), trips.end());
  return A;
}

Projector reduce_projector(const Projector& A, const std::vector<int>& keep) {
  std::vector<int> col_map(A.cols(), -1);
  for (size_t k = 0; k < keep.size(); ++k) col_map[keep[k]] = static_cast<int>(k);
  std::vector<Triplet> trips;
  for (int i = 0; i < A.weights.outerSize(); ++i)
    for (SpMatRow::InnerIterator it(A.weights, i); it; ++it)
      if (col_map[it.col()] >= 0) trips.emplace_back(it.row(), col_map[it.col()], it.value());
  Projector out;
  out.weights.resize(A.rows(), static_cast<Eigen::Index>(keep.size()));
  out.weights.setFromTriplets(trips.begin(), trips.end());
  return out;
}

void save_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_mesh: cannot open " + path);
  out << mesh.dim << ' ' << mesh.n_nodes() << ' ' << mesh.n_elements() << '\n';
  char buf[64];
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    for (int d = 0; d < mesh.dim; ++d) {
      std::snprintf(buf, sizeof(buf), "%.17g", mesh.nodes(i, d));
      out << (d ? " " : "") << buf;
    }
    out << '\n';
  }
  for (int e = 0; e < mesh.n_elements(); ++e) {
    for (int v = 0; v <= mesh.dim; ++v) out << (v ? " " : "") << mesh.elements(e, v);
    out << '\n';
  }
}

Mesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_mesh: cannot open " + path);
  Mesh m;
  int n_nodes = 0, n_elements = 0;
  if (!(in >> m.dim >> n_nodes >> n_elements) || (m.dim != 1 && m.dim != 2) ||
      n_nodes < 2 || n_elements < 1)
    throw std::runtime_error("load_mesh: bad header in " + path);
  m.nodes.resize(n_nodes, m.dim);
  for (int i = 0; i < n_nodes; ++i)
    for (int d = 0; d < m.dim; ++d)
      if (!(in >> m.nodes(i, d))) throw std::runtime_error("load_mesh: truncated node list");
  m.elements.resize(n_elements, m.dim + 1);
  for (int e = 0; e < n_elements; ++e)
    for (int v = 0; v <= m.dim; ++v) {
      if (!(in >> m.elements(e, v))) throw std::runtime_error("load_mesh: truncated element list");
      if (m.elements(e, v) < 0 || m.elements(e, v) >= n_nodes)
        throw std::runtime_error("load_mesh: element index out of range");
    }
  for (int e = 0; e < n_elements; ++e) {
    m.h = std::max(m.h, m.element_diameter(e));
    if (m.element_measure(e) <= 0.0)
      throw std::runtime_error("load_mesh: degenerate element");
  }
  // boundary detection: facets used by exactly one element
  if (m.dim == 1) {
    std::vector<int> count(n_nodes, 0);
    for (int e = 0; e < n_elements; ++e) {
      ++count[m.elements(e, 0)];
      ++count[m.elements(e, 1)];
    }
    for (int i = 0; i < n_nodes; ++i)
      if (count[i] == 1) m.boundary_nodes.push_back(i);
  } else {
    std::map<std::pair<int, int>, int> edge_count;
    for (int e = 0; e < n_elements; ++e)
      for (int v = 0; v < 3; ++v) {
        int a = m.elements(e, v), b = m.elements(e, (v + 1) % 3);
        if (a > b) std::swap(a, b);
        ++edge_count[{a, b}];
      }
    std::set<int> bset;
    for (const auto& [edge, cnt] : edge_count)
      if (cnt == 1) {
        bset.insert(edge.first);
        bset.insert(edge.second);
      }
    m.boundary_nodes.assign(bset.begin(), bset.end());
  }
  return m;
}

void save_projector(const Projector& A, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_projector: cannot open " + path);
  char buf[64];
  for (int i = 0; i < A.weights.outerSize(); ++i)
    for (SpMatRow::InnerIterator it(A.weights, i); it; ++it) {
      std::snprintf(buf, sizeof(buf), "%.17g", it.value());
      out << it.row() << ' ' << it.col() << ' ' << buf << '\n';
    }
}

}  // namespace fracgmrf
