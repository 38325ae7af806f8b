#include "fracgmrf/sparse.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace fracgmrf {

SparseSymMatrix SparseSymMatrix::from_lower_triplets(int n, const std::vector<Triplet>& lower) {
  // Sum duplicates within the lower triangle first so each unordered pair has
  // a single accumulated value to mirror.
  SpMat lo(n, n);
  lo.setFromTriplets(lower.begin(), lower.end());
  std::vector<Triplet> full;
  full.reserve(static_cast<size_t>(lo.nonZeros()) * 2);
  for (int j = 0; j < lo.outerSize(); ++j)
    for (SpMat::InnerIterator it(lo, j); it; ++it) {
      if (it.row() < it.col())
        throw std::invalid_argument("from_lower_triplets: entry above the diagonal");
      full.emplace_back(it.row(), it.col(), it.value());
      if (it.row() != it.col()) full.emplace_back(it.col(), it.row(), it.value());
    }
  SparseSymMatrix out;
  out.m_.resize(n, n);
  out.m_.setFromTriplets(full.begin(), full.end());
  out.m_.makeCompressed();
  return out;
}

SparseSymMatrix SparseSymMatrix::from_full(const SpMat& fullmat) {
  std::vector<Triplet> lower;
  lower.reserve(static_cast<size_t>(fullmat.nonZeros()) / 2 + fullmat.rows());
  for (int j = 0; j < fullmat.outerSize(); ++j)
    for (SpMat::InnerIterator it(fullmat, j); it; ++it)
      if (it.row() >= it.col()) lower.emplace_back(it.row(), it.col(), it.value());
  return from_lower_triplets(static_cast<int>(fullmat.rows()), lower);
}

bool SparseSymMatrix::exactly_symmetric() const {
  SpMat t = m_.transpose();
  if (t.nonZeros() != m_.nonZeros()) return false;
  for (int j = 0; j < m_.outerSize(); ++j) {
    SpMat::InnerIterator a(m_, j), b(t, j);
    for (; a && b; ++a, ++b)
      if (a.row() != b.row() || a.value() != b.value()) return false;
    if (a || b) return false;
  }
  return true;
}

void SparseSymMatrix::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("SparseSymMatrix::save: cannot open " + path);
  Eigen::Index nnz_lower = 0;
  for (int j = 0; j < m_.outerSize(); ++j)
    for (SpMat::InnerIterator it(m_, j); it; ++it)
      if (it.row() >= it.col()) ++nnz_lower;
  out << n() << ' ' << nnz_lower << '\n';
  char buf[64];
  for (int j = 0; j < m_.outerSize(); ++j)
    for (SpMat::InnerIterator it(m_, j); it; ++it)
      if (it.row() >= it.col()) {
        std::snprintf(buf, sizeof(buf), "%.17g", it.value());
        out << it.row() << ' ' << it.col() << ' ' << buf << '\n';
      }
}

SparseSymMatrix SparseSymMatrix::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("SparseSymMatrix::load: cannot open " + path);
  int n = 0;
  Eigen::Index nnz = 0;
  if (!(in >> n >> nnz) || n <= 0 || nnz < 0)
    throw std::runtime_error("SparseSymMatrix::load: bad header in " + path);
  std::vector<Triplet> lower;
  lower.reserve(static_cast<size_t>(nnz));
  for (Eigen::Index k = 0; k < nnz; ++k) {
    int i = 0, j = 0;
    double v = 0;
    if (!(in >> i >> j >> v)) throw std::runtime_error("SparseSymMatrix::load: truncated file");
    if (i < j || i >= n || j < 0)
      throw std::runtime_error("SparseSymMatrix::load: entry outside lower triangle");
    lower.emplace_back(i, j, v);
  }
  return from_lower_triplets(n, lower);
}

SparseSymMatrix reduce(const SparseSymMatrix& A, const std::vector<int>& keep) {
  std::vector<int> map(A.n(), -1);
  for (size_t k = 0; k < keep.size(); ++k) map[keep[k]] = static_cast<int>(k);
  std::vector<Triplet> lower;
  const SpMat& m = A.mat();
  for (int j = 0; j < m.outerSize(); ++j)
    for (SpMat::InnerIterator it(m, j); it; ++it) {
      if (it.row() < it.col()) continue;
      const int r = map[it.row()], c = map[it.col()];
      if (r < 0 || c < 0) continue;
      lower.emplace_back(std::max(r, c), std::min(r, c), it.value());
    }
  return SparseSymMatrix::from_lower_triplets(static_cast<int>(keep.size()), lower);
}

}  // namespace fracgmrf
