#include "nilu/graph.hpp"

#include <cmath>

namespace nilu {

DenseMatrix node_features_raw(const CsrMatrix& A) {
    const int n = A.n;
    DenseMatrix F(n, kNodeFeatureCount);
    Vec col_nnz(n, 0.0), col_norm1(n, 0.0), col_max(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double row_nnz = 0.0, row_norm1 = 0.0, row_max = 0.0, diag = 0.0;
        for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
            const int j = A.col_idx[k];
            const double a = A.values[k];
            const double mag = std::abs(a);
            row_nnz += 1.0;
            row_norm1 += mag;
            row_max = std::max(row_max, mag);
            if (j == i) diag = a;
            col_nnz[j] += 1.0;
            col_norm1[j] += mag;
            col_max[j] = std::max(col_max[j], mag);
        }
        F(i, 0) = row_nnz;
        F(i, 2) = row_norm1;
        F(i, 4) = diag;
        F(i, 5) = row_norm1 > 0.0 ? std::abs(diag) / row_norm1 : 0.0;
        F(i, 6) = row_max;
    }
    for (int i = 0; i < n; ++i) {
        F(i, 1) = col_nnz[i];
        F(i, 3) = col_norm1[i];
        F(i, 7) = col_max[i];
    }
    return F;
}

void standardize_columns(DenseMatrix& F) {
    const int n = F.n_rows;
    if (n == 0) return;
    for (int j = 0; j < F.n_cols; ++j) {
        double mean = 0.0;
        for (int i = 0; i < n; ++i) mean += F(i, j);
        mean /= n;
        double var = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = F(i, j) - mean;
            var += d * d;
        }
        var /= n;
        if (var <= 1e-24) {
            for (int i = 0; i < n; ++i) F(i, j) = 0.0;
        } else {
            const double inv_std = 1.0 / std::sqrt(var);
            for (int i = 0; i < n; ++i) F(i, j) = (F(i, j) - mean) * inv_std;
        }
    }
}

CoatesGraph coates_graph(const CsrMatrix& A) {
    const CsrMatrix B = add_missing_diagonal(A);
    CoatesGraph g;
    g.n = B.n;
    g.row_ptr = B.row_ptr;
    g.diag_edge.assign(B.n, -1);
    const int m = B.nnz();
    g.edge_src.reserve(m);
    g.edge_dst.reserve(m);
    g.edge_feats.reserve(static_cast<size_t>(m) * 2);
    g.matrix_values = B.values;
    for (int i = 0; i < B.n; ++i) {
        for (int k = B.row_ptr[i]; k < B.row_ptr[i + 1]; ++k) {
            const int j = B.col_idx[k];
            g.edge_src.push_back(i);
            g.edge_dst.push_back(j);
            const double pos = i < j ? 1.0 : (i > j ? -1.0 : 0.0);
            g.edge_feats.push_back(B.values[k]);
            g.edge_feats.push_back(pos);
            if (i == j) g.diag_edge[i] = k;
        }
    }
    DenseMatrix F = node_features_raw(B);
    standardize_columns(F);
    g.node_feats = std::move(F.data);
    return g;
}

}  // namespace nilu
