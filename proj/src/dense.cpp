#include "nilu/dense.hpp"

#include <cmath>

namespace nilu {

DenseLu dense_lu(DenseMatrix A) {
    if (A.n_rows != A.n_cols) throw std::invalid_argument("dense_lu: matrix not square");
    const int n = A.n_rows;
    DenseLu f;
    f.piv.resize(n);
    for (int i = 0; i < n; ++i) f.piv[i] = i;
    for (int k = 0; k < n; ++k) {
        int p = k;
        double best = std::abs(A(k, k));
        for (int i = k + 1; i < n; ++i) {
            const double m = std::abs(A(i, k));
            if (m > best) {
                best = m;
                p = i;
            }
        }
        if (best == 0.0) {
            f.singular = true;
            f.lu = std::move(A);
            return f;
        }
        if (p != k) {
            for (int j = 0; j < n; ++j) std::swap(A(k, j), A(p, j));
            std::swap(f.piv[k], f.piv[p]);
        }
        const double pivot = A(k, k);
        for (int i = k + 1; i < n; ++i) {
            const double m = A(i, k) / pivot;
            A(i, k) = m;
            for (int j = k + 1; j < n; ++j) A(i, j) -= m * A(k, j);
        }
    }
    f.lu = std::move(A);
    return f;
}

Vec lu_solve(const DenseLu& f, Vec b) {
    if (f.singular) throw std::runtime_error("lu_solve: singular matrix");
    const int n = f.lu.n_rows;
    Vec pb(n);
    for (int i = 0; i < n; ++i) pb[i] = b[f.piv[i]];
    for (int i = 1; i < n; ++i) {
        double acc = pb[i];
        for (int j = 0; j < i; ++j) acc -= f.lu(i, j) * pb[j];
        pb[i] = acc;
    }
    for (int i = n - 1; i >= 0; --i) {
        double acc = pb[i];
        for (int j = i + 1; j < n; ++j) acc -= f.lu(i, j) * pb[j];
        pb[i] = acc / f.lu(i, i);
    }
    return pb;
}

DenseMatrix dense_inverse(const DenseMatrix& A) {
    const int n = A.n_rows;
    const DenseLu f = dense_lu(A);
    DenseMatrix inv(n, n);
    Vec e(n, 0.0);
    for (int j = 0; j < n; ++j) {
        e[j] = 1.0;
        const Vec col = lu_solve(f, e);
        for (int i = 0; i < n; ++i) inv(i, j) = col[i];
        e[j] = 0.0;
    }
    return inv;
}

DenseMatrix matmul(const DenseMatrix& A, const DenseMatrix& B) {
    if (A.n_cols != B.n_rows) throw std::invalid_argument("matmul: dimension mismatch");
    DenseMatrix C(A.n_rows, B.n_cols);
    for (int i = 0; i < A.n_rows; ++i)
        for (int k = 0; k < A.n_cols; ++k) {
            const double a = A(i, k);
            if (a == 0.0) continue;
            for (int j = 0; j < B.n_cols; ++j) C(i, j) += a * B(k, j);
        }
    return C;
}

Vec dense_matvec(const DenseMatrix& A, const Vec& x) {
    if (static_cast<int>(x.size()) != A.n_cols)
        throw std::invalid_argument("dense_matvec: dimension mismatch");
    Vec y(A.n_rows, 0.0);
    for (int i = 0; i < A.n_rows; ++i) {
        double acc = 0.0;
        for (int j = 0; j < A.n_cols; ++j) acc += A(i, j) * x[j];
        y[i] = acc;
    }
    return y;
}

double dense_frobenius(const DenseMatrix& A) {
    double s = 0.0;
    for (double v : A.data) s += v * v;
    return std::sqrt(s);
}

}  // namespace nilu
