/// @file dense.hpp
/// @brief Small dense linear algebra kit: LU with partial pivoting, inverse,
///        products. Desk-scale only; backs the spectral module and the
///        nonsingularity checks in dataset generation.

#ifndef NILU_DENSE_HPP
#define NILU_DENSE_HPP

#include "nilu/sparse.hpp"

namespace nilu {

struct DenseLu {
    DenseMatrix lu;        // combined factors, L unit lower / U upper
    std::vector<int> piv;  // row permutation
    bool singular = false;
};

DenseLu dense_lu(DenseMatrix A);
Vec lu_solve(const DenseLu& f, Vec b);
DenseMatrix dense_inverse(const DenseMatrix& A);
DenseMatrix matmul(const DenseMatrix& A, const DenseMatrix& B);
Vec dense_matvec(const DenseMatrix& A, const Vec& x);
double dense_frobenius(const DenseMatrix& A);

}  // namespace nilu

#endif  // NILU_DENSE_HPP
