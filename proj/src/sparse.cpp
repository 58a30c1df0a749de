#include "nilu/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace nilu {

int CsrMatrix::find(int i, int j) const {
    const int lo = row_ptr[i], hi = row_ptr[i + 1];
    auto first = col_idx.begin() + lo;
    auto last = col_idx.begin() + hi;
    auto it = std::lower_bound(first, last, j);
    if (it != last && *it == j) return static_cast<int>(it - col_idx.begin());
    return -1;
}

CsrMatrix csr_from_coo(std::vector<CooTriple> triples, int n) {
    if (n < 0) throw std::invalid_argument("csr_from_coo: negative dimension");
    for (const auto& [r, c, v] : triples) {
        (void)v;
        if (r < 0 || r >= n || c < 0 || c >= n)
            throw std::invalid_argument("csr_from_coo: index out of range");
    }
    std::sort(triples.begin(), triples.end(), [](const CooTriple& a, const CooTriple& b) {
        if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
        return std::get<1>(a) < std::get<1>(b);
    });

    CsrMatrix A;
    A.n = n;
    A.row_ptr.assign(n + 1, 0);
    for (size_t k = 0; k < triples.size();) {
        const int r = std::get<0>(triples[k]);
        const int c = std::get<1>(triples[k]);
        double v = 0.0;
        while (k < triples.size() && std::get<0>(triples[k]) == r && std::get<1>(triples[k]) == c) {
            v += std::get<2>(triples[k]);
            ++k;
        }
        A.col_idx.push_back(c);
        A.values.push_back(v);
        A.row_ptr[r + 1]++;
    }
    for (int i = 0; i < n; ++i) A.row_ptr[i + 1] += A.row_ptr[i];
    return A;
}

Vec spmv(const CsrMatrix& A, const Vec& x) {
    if (static_cast<int>(x.size()) != A.n)
        throw std::invalid_argument("spmv: dimension mismatch");
    Vec y(A.n, 0.0);
    for (int i = 0; i < A.n; ++i) {
        double acc = 0.0;
        for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
            acc += A.values[k] * x[A.col_idx[k]];
        y[i] = acc;
    }
    return y;
}

Vec spmv_transpose(const CsrMatrix& A, const Vec& x) {
    if (static_cast<int>(x.size()) != A.n)
        throw std::invalid_argument("spmv_transpose: dimension mismatch");
    Vec y(A.n, 0.0);
    for (int i = 0; i < A.n; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
            y[A.col_idx[k]] += A.values[k] * xi;
    }
    return y;
}

double frobenius_norm(const CsrMatrix& A) {
    double s = 0.0;
    for (double v : A.values) s += v * v;
    return std::sqrt(s);
}

CsrMatrix add_missing_diagonal(const CsrMatrix& A) {
    CsrMatrix B;
    B.n = A.n;
    B.row_ptr.assign(A.n + 1, 0);
    B.col_idx.reserve(A.col_idx.size() + A.n);
    B.values.reserve(A.values.size() + A.n);
    for (int i = 0; i < A.n; ++i) {
        bool placed_diag = false;
        for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
            const int j = A.col_idx[k];
            if (!placed_diag && j > i) {
                B.col_idx.push_back(i);
                B.values.push_back(0.0);
                placed_diag = true;
            }
            if (j == i) placed_diag = true;
            B.col_idx.push_back(j);
            B.values.push_back(A.values[k]);
        }
        if (!placed_diag) {
            B.col_idx.push_back(i);
            B.values.push_back(0.0);
        }
        B.row_ptr[i + 1] = static_cast<int>(B.col_idx.size());
    }
    return B;
}

Vec lower_tri_solve(const CsrMatrix& L, const Vec& b) {
    if (static_cast<int>(b.size()) != L.n)
        throw std::invalid_argument("lower_tri_solve: dimension mismatch");
    Vec v(L.n, 0.0);
    for (int i = 0; i < L.n; ++i) {
        double acc = b[i];
        double diag = 0.0;
        bool have_diag = false;
        for (int k = L.row_ptr[i]; k < L.row_ptr[i + 1]; ++k) {
            const int j = L.col_idx[k];
            if (j > i) throw std::invalid_argument("lower_tri_solve: entry above diagonal");
            if (j == i) {
                diag = L.values[k];
                have_diag = true;
            } else {
                acc -= L.values[k] * v[j];
            }
        }
        if (!have_diag || diag == 0.0)
            throw SingularFactorError("lower_tri_solve: zero/absent diagonal at row " + std::to_string(i), i);
        v[i] = acc / diag;
    }
    return v;
}

Vec upper_tri_solve(const CsrMatrix& U, const Vec& b) {
    if (static_cast<int>(b.size()) != U.n)
        throw std::invalid_argument("upper_tri_solve: dimension mismatch");
    Vec v(U.n, 0.0);
    for (int i = U.n - 1; i >= 0; --i) {
        double acc = b[i];
        double diag = 0.0;
        bool have_diag = false;
        for (int k = U.row_ptr[i]; k < U.row_ptr[i + 1]; ++k) {
            const int j = U.col_idx[k];
            if (j < i) throw std::invalid_argument("upper_tri_solve: entry below diagonal");
            if (j == i) {
                diag = U.values[k];
                have_diag = true;
            } else {
                acc -= U.values[k] * v[j];
            }
        }
        if (!have_diag || diag == 0.0)
            throw SingularFactorError("upper_tri_solve: zero/absent diagonal at row " + std::to_string(i), i);
        v[i] = acc / diag;
    }
    return v;
}

Vec lower_tri_transpose_solve(const CsrMatrix& L, const Vec& b) {
    if (static_cast<int>(b.size()) != L.n)
        throw std::invalid_argument("lower_tri_transpose_solve: dimension mismatch");
    Vec v = b;  // column-oriented substitution for the upper-triangular L^T
    for (int i = L.n - 1; i >= 0; --i) {
        double diag = 0.0;
        bool have_diag = false;
        for (int k = L.row_ptr[i]; k < L.row_ptr[i + 1]; ++k) {
            const int j = L.col_idx[k];
            if (j > i) throw std::invalid_argument("lower_tri_transpose_solve: entry above diagonal");
            if (j == i) {
                diag = L.values[k];
                have_diag = true;
            }
        }
        if (!have_diag || diag == 0.0)
            throw SingularFactorError(
                "lower_tri_transpose_solve: zero/absent diagonal at row " + std::to_string(i), i);
        v[i] /= diag;
        for (int k = L.row_ptr[i]; k < L.row_ptr[i + 1]; ++k) {
            const int j = L.col_idx[k];
            if (j < i) v[j] -= L.values[k] * v[i];
        }
    }
    return v;
}

Vec upper_tri_transpose_solve(const CsrMatrix& U, const Vec& b) {
    if (static_cast<int>(b.size()) != U.n)
        throw std::invalid_argument("upper_tri_transpose_solve: dimension mismatch");
    Vec v = b;  // column-oriented substitution for the lower-triangular U^T
    for (int i = 0; i < U.n; ++i) {
        double diag = 0.0;
        bool have_diag = false;
        for (int k = U.row_ptr[i]; k < U.row_ptr[i + 1]; ++k) {
            const int j = U.col_idx[k];
            if (j < i) throw std::invalid_argument("upper_tri_transpose_solve: entry below diagonal");
            if (j == i) {
                diag = U.values[k];
                have_diag = true;
            }
        }
        if (!have_diag || diag == 0.0)
            throw SingularFactorError(
                "upper_tri_transpose_solve: zero/absent diagonal at row " + std::to_string(i), i);
        v[i] /= diag;
        for (int k = U.row_ptr[i]; k < U.row_ptr[i + 1]; ++k) {
            const int j = U.col_idx[k];
            if (j > i) v[j] -= U.values[k] * v[i];
        }
    }
    return v;
}

DenseMatrix to_dense(const CsrMatrix& A, int dense_cap) {
    if (A.n > dense_cap)
        throw std::invalid_argument("to_dense: dimension exceeds dense cap");
    DenseMatrix D(A.n, A.n);
    for (int i = 0; i < A.n; ++i)
        for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
            D(i, A.col_idx[k]) = A.values[k];
    return D;
}

CsrMatrix sparse_product(const CsrMatrix& A, const CsrMatrix& B) {
    if (A.n != B.n) throw std::invalid_argument("sparse_product: dimension mismatch");
    const int n = A.n;
    CsrMatrix C;
    C.n = n;
    C.row_ptr.assign(n + 1, 0);
    std::vector<double> acc(n, 0.0);
    std::vector<int> marker(n, -1);
    std::vector<int> cols;
    for (int i = 0; i < n; ++i) {
        cols.clear();
        for (int ka = A.row_ptr[i]; ka < A.row_ptr[i + 1]; ++ka) {
            const int k = A.col_idx[ka];
            const double av = A.values[ka];
            for (int kb = B.row_ptr[k]; kb < B.row_ptr[k + 1]; ++kb) {
                const int j = B.col_idx[kb];
                if (marker[j] != i) {
                    marker[j] = i;
                    acc[j] = 0.0;
                    cols.push_back(j);
                }
                acc[j] += av * B.values[kb];
            }
        }
        std::sort(cols.begin(), cols.end());
        for (int j : cols) {
            C.col_idx.push_back(j);
            C.values.push_back(acc[j]);
        }
        C.row_ptr[i + 1] = static_cast<int>(C.col_idx.size());
    }
    return C;
}

void write_matrix_market(const CsrMatrix& A, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_matrix_market: cannot open " + path);
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << A.n << " " << A.n << " " << A.nnz() << "\n";
    out << std::setprecision(17);
    for (int i = 0; i < A.n; ++i)
        for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
            out << (i + 1) << " " << (A.col_idx[k] + 1) << " " << A.values[k] << "\n";
    if (!out) throw std::runtime_error("write_matrix_market: write failed for " + path);
}

CsrMatrix read_matrix_market(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_matrix_market: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("%%MatrixMarket", 0) != 0)
        throw std::runtime_error("read_matrix_market: missing MatrixMarket banner in " + path);
    {
        std::istringstream hs(line);
        std::string tag, object, format, field, symmetry;
        hs >> tag >> object >> format >> field >> symmetry;
        if (object != "matrix" || format != "coordinate" || field != "real" || symmetry != "general")
            throw std::runtime_error("read_matrix_market: unsupported header in " + path);
    }
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] != '%') break;
    }
    int rows = 0, cols = 0, nnz = 0;
    {
        std::istringstream ss(line);
        if (!(ss >> rows >> cols >> nnz))
            throw std::runtime_error("read_matrix_market: bad size line in " + path);
    }
    if (rows != cols) throw std::runtime_error("read_matrix_market: matrix not square in " + path);
    std::vector<CooTriple> triples;
    triples.reserve(nnz);
    for (int k = 0; k < nnz; ++k) {
        int i = 0, j = 0;
        double v = 0.0;
        if (!(in >> i >> j >> v))
            throw std::runtime_error("read_matrix_market: truncated entries in " + path);
        triples.emplace_back(i - 1, j - 1, v);
    }
    return csr_from_coo(std::move(triples), rows);
}

void write_vector(const Vec& v, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_vector: cannot open " + path);
    out << v.size() << "\n" << std::setprecision(17);
    for (double x : v) out << x << "\n";
    if (!out) throw std::runtime_error("write_vector: write failed for " + path);
}

Vec read_vector(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_vector: cannot open " + path);
    size_t len = 0;
    if (!(in >> len)) throw std::runtime_error("read_vector: bad length in " + path);
    Vec v(len, 0.0);
    for (size_t k = 0; k < len; ++k)
        if (!(in >> v[k])) throw std::runtime_error("read_vector: truncated file " + path);
    return v;
}

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

double norm2(const Vec& v) { return std::sqrt(dot(v, v)); }

void axpy(double alpha, const Vec& x, Vec& y) {
    for (size_t k = 0; k < x.size(); ++k) y[k] += alpha * x[k];
}

}  // namespace nilu
