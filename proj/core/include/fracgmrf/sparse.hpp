#ifndef FRACGMRF_SPARSE_HPP
#define FRACGMRF_SPARSE_HPP

#include <string>
#include <vector>

#include "fracgmrf/types.hpp"

namespace fracgmrf {

/// Symmetric sparse matrix in compressed-column storage. Construction
/// mirrors one stored triangle so the two halves are bit-identical.
class SparseSymMatrix {
 public:
  SparseSymMatrix() = default;

  /// Accumulate lower-triangle triplets (i >= j, duplicates summed in input
  /// order) and mirror into the upper triangle.
  static SparseSymMatrix from_lower_triplets(int n, const std::vector<Triplet>& lower);

  /// Adopt a full matrix, mirroring its lower triangle.
  static SparseSymMatrix from_full(const SpMat& full);

  int n() const { return static_cast<int>(m_.rows()); }
  const SpMat& mat() const { return m_; }
  Eigen::Index nonzeros() const { return m_.nonZeros(); }

  bool exactly_symmetric() const;

  /// "n nnz" header then lower-triangle "row col value" lines.
  void save(const std::string& path) const;
  static SparseSymMatrix load(const std::string& path);

 private:
  SpMat m_;
};

/// Keep the rows/columns listed in `keep` (in order).
SparseSymMatrix reduce(const SparseSymMatrix& A, const std::vector<int>& keep);

}  // namespace fracgmrf

#endif
