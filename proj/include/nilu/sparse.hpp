/// @file sparse.hpp
/// @brief CSR sparse matrix storage and the kernels shared by every module:
///        matvec, triangular solves, norms, pattern manipulation, dense conversion,
///        Matrix Market I/O.

#ifndef NILU_SPARSE_HPP
#define NILU_SPARSE_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace nilu {

using Vec = std::vector<double>;

/// Thrown when a triangular factor has a zero or missing diagonal entry.
class SingularFactorError : public std::runtime_error {
public:
    SingularFactorError(const std::string& what, int row)
        : std::runtime_error(what), row_(row) {}
    int row() const { return row_; }

private:
    int row_;
};

/// Dense row-major matrix, used for desk-scale spectral work and oracles.
struct DenseMatrix {
    int n_rows = 0;
    int n_cols = 0;
    Vec data;  // row-major, length n_rows * n_cols

    DenseMatrix() = default;
    DenseMatrix(int rows, int cols) : n_rows(rows), n_cols(cols), data(static_cast<size_t>(rows) * cols, 0.0) {}

    double& operator()(int i, int j) { return data[static_cast<size_t>(i) * n_cols + j]; }
    double operator()(int i, int j) const { return data[static_cast<size_t>(i) * n_cols + j]; }
};

/// Square sparse matrix in compressed-row form.
///
/// Invariants: row_ptr is nondecreasing with row_ptr[0] = 0 and row_ptr[n] = nnz;
/// column indices are strictly increasing within each row. Explicit zeros are
/// legal pattern members (the ILU pattern is positional, not value-based).
/// Immutable by convention once built; safe to read concurrently.
struct CsrMatrix {
    int n = 0;
    std::vector<int> row_ptr;  // length n + 1
    std::vector<int> col_idx;  // length nnz
    Vec values;                // length nnz

    int nnz() const { return static_cast<int>(col_idx.size()); }

    /// Index of stored entry (i, j), or -1 when (i, j) is not in the pattern.
    int find(int i, int j) const;
};

using CooTriple = std::tuple<int, int, double>;

/// Build canonical CSR from unordered (row, col, value) triples.
/// Duplicate positions are summed. Throws std::invalid_argument on out-of-range
/// indices.
CsrMatrix csr_from_coo(std::vector<CooTriple> triples, int n);

/// y = A x. Throws std::invalid_argument on dimension mismatch.
Vec spmv(const CsrMatrix& A, const Vec& x);

/// y = A^T x without materializing the transpose.
Vec spmv_transpose(const CsrMatrix& A, const Vec& x);

/// sqrt(sum of squared stored values).
double frobenius_norm(const CsrMatrix& A);

/// Pattern union with the full diagonal; new diagonal entries get value 0,
/// existing entries are untouched. Idempotent.
CsrMatrix add_missing_diagonal(const CsrMatrix& A);

/// Solve L v = b by forward substitution, O(nnz). Requires a lower-triangular
/// pattern with a stored nonzero diagonal; throws SingularFactorError otherwise.
Vec lower_tri_solve(const CsrMatrix& L, const Vec& b);

/// Solve U v = b by backward substitution, O(nnz). Upper-triangular counterpart
/// of lower_tri_solve.
Vec upper_tri_solve(const CsrMatrix& U, const Vec& b);

/// Solve L^T v = b (resp. U^T v = b) directly on the untransposed storage.
Vec lower_tri_transpose_solve(const CsrMatrix& L, const Vec& b);
Vec upper_tri_transpose_solve(const CsrMatrix& U, const Vec& b);

/// Element-exact dense expansion. Throws std::invalid_argument when n exceeds
/// the cap (guards accidental huge allocations).
DenseMatrix to_dense(const CsrMatrix& A, int dense_cap = 2000);

/// Exact sparse product C = A B including fill outside either input pattern.
CsrMatrix sparse_product(const CsrMatrix& A, const CsrMatrix& B);

// --- Matrix Market coordinate format (real general), 1-based on disk ---

void write_matrix_market(const CsrMatrix& A, const std::string& path);
CsrMatrix read_matrix_market(const std::string& path);

// --- plain text vector files (first line: length, then one value per line) ---

void write_vector(const Vec& v, const std::string& path);
Vec read_vector(const std::string& path);

// --- small dense/vector helpers used across modules ---

double dot(const Vec& a, const Vec& b);
double norm2(const Vec& v);
void axpy(double alpha, const Vec& x, Vec& y);  // y += alpha x

}  // namespace nilu

#endif  // NILU_SPARSE_HPP
