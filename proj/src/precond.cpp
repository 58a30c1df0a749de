#include "nilu/precond.hpp"

#include <cmath>

namespace nilu {

JacobiPreconditioner::JacobiPreconditioner(const CsrMatrix& A) : diag_(A.n, 1.0) {
    for (int i = 0; i < A.n; ++i) {
        const int k = A.find(i, i);
        if (k >= 0 && A.values[k] != 0.0) diag_[i] = A.values[k];
    }
}

Vec JacobiPreconditioner::apply_inverse(const Vec& v) const {
    if (v.size() != diag_.size())
        throw std::invalid_argument("jacobi apply_inverse: dimension mismatch");
    Vec out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[i] = v[i] / diag_[i];
    return out;
}

FactorPair ilu0(const CsrMatrix& A, double pivot_guard, bool strict, IluDiagnostics* diag) {
    const CsrMatrix P = add_missing_diagonal(A);
    const int n = P.n;
    Vec w = P.values;  // working copy, factorized in place on the fixed pattern

    std::vector<int> diag_pos(n, -1);
    for (int i = 0; i < n; ++i) diag_pos[i] = P.find(i, i);

    IluDiagnostics local;
    for (int i = 0; i < n; ++i) {
        for (int kk = P.row_ptr[i]; kk < P.row_ptr[i + 1]; ++kk) {
            const int k = P.col_idx[kk];
            if (k >= i) break;
            double pivot = w[diag_pos[k]];
            if (pivot == 0.0) {
                if (strict)
                    throw SingularFactorError("ilu0: zero pivot at row " + std::to_string(k), k);
                pivot = pivot_guard;  // sign convention: zero treated as +guard
                w[diag_pos[k]] = pivot;
                local.guarded_pivots++;
            }
            const double mult = w[kk] / pivot;
            w[kk] = mult;
            // subtract mult * row k from row i, restricted to the pattern
            for (int kj = P.row_ptr[k]; kj < P.row_ptr[k + 1]; ++kj) {
                const int j = P.col_idx[kj];
                if (j <= k) continue;
                const int pos = P.find(i, j);
                if (pos >= 0) w[pos] -= mult * w[kj];
            }
        }
        double& piv = w[diag_pos[i]];
        if (piv == 0.0) {
            if (strict)
                throw SingularFactorError("ilu0: zero pivot at row " + std::to_string(i), i);
            piv = pivot_guard;
            local.guarded_pivots++;
        }
    }
    if (diag) *diag = local;

    FactorPair F;
    F.L.n = n;
    F.U.n = n;
    F.L.row_ptr.assign(n + 1, 0);
    F.U.row_ptr.assign(n + 1, 0);
    for (int i = 0; i < n; ++i) {
        for (int k = P.row_ptr[i]; k < P.row_ptr[i + 1]; ++k) {
            const int j = P.col_idx[k];
            if (j < i) {
                F.L.col_idx.push_back(j);
                F.L.values.push_back(w[k]);
            } else if (j == i) {
                F.L.col_idx.push_back(i);
                F.L.values.push_back(1.0);
                F.U.col_idx.push_back(i);
                F.U.values.push_back(w[k]);
            } else {
                F.U.col_idx.push_back(j);
                F.U.values.push_back(w[k]);
            }
        }
        F.L.row_ptr[i + 1] = static_cast<int>(F.L.col_idx.size());
        F.U.row_ptr[i + 1] = static_cast<int>(F.U.col_idx.size());
    }
    return F;
}

Vec factored_apply_inverse(const FactorPair& F, const Vec& r) {
    return upper_tri_solve(F.U, lower_tri_solve(F.L, r));
}

Vec factored_apply_inverse_transpose(const FactorPair& F, const Vec& r) {
    return lower_tri_transpose_solve(F.L, upper_tri_transpose_solve(F.U, r));
}

void write_factor_pair(const FactorPair& F, const std::string& prefix) {
    write_matrix_market(F.L, prefix + ".L.mtx");
    write_matrix_market(F.U, prefix + ".U.mtx");
}

FactorPair read_factor_pair(const std::string& prefix, double epsilon) {
    FactorPair F;
    F.L = read_matrix_market(prefix + ".L.mtx");
    F.U = read_matrix_market(prefix + ".U.mtx");
    F.epsilon = epsilon;
    return F;
}

}  // namespace nilu
