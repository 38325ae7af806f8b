#ifndef FRACGMRF_TYPES_HPP
#define FRACGMRF_TYPES_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace fracgmrf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;                     // column-major
using SpMatRow = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<double>;

inline constexpr const char* kVersion = "fracgmrf 0.1.0";

}  // namespace fracgmrf

#endif
