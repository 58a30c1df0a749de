#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "nilu/sparse.hpp"

using namespace nilu;

namespace {

CsrMatrix random_sparse(int n, double density, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<CooTriple> t;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i == j || u(rng) < density) t.emplace_back(i, j, g(rng));
    return csr_from_coo(std::move(t), n);
}

// independent dense matvec oracle
Vec dense_matvec_oracle(const CsrMatrix& A, const Vec& x) {
    Vec y(A.n, 0.0);
    for (int i = 0; i < A.n; ++i)
        for (int j = 0; j < A.n; ++j) {
            const int k = A.find(i, j);
            if (k >= 0) y[i] += A.values[k] * x[j];
        }
    return y;
}

}  // namespace

TEST_CASE("csr_from_coo sorts rows and sums duplicates") {
    std::vector<CooTriple> t{{1, 2, 3.0}, {0, 1, 1.0}, {1, 0, 2.0}, {0, 1, 4.0}};
    const CsrMatrix A = csr_from_coo(t, 3);
    CHECK(A.nnz() == 3);
    CHECK(A.find(0, 1) >= 0);
    CHECK(A.values[A.find(0, 1)] == doctest::Approx(5.0));
    CHECK(A.values[A.find(1, 0)] == doctest::Approx(2.0));
    for (int i = 0; i < A.n; ++i)
        for (int k = A.row_ptr[i] + 1; k < A.row_ptr[i + 1]; ++k)
            CHECK(A.col_idx[k] > A.col_idx[k - 1]);
    CHECK_THROWS_AS(csr_from_coo({{0, 3, 1.0}}, 3), std::invalid_argument);
}

TEST_CASE("spmv matches the dense oracle") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const CsrMatrix A = random_sparse(15, 0.2, rng);
        Vec x(A.n);
        for (double& v : x) v = g(rng);
        const Vec y = spmv(A, x);
        const Vec ref = dense_matvec_oracle(A, x);
        for (int i = 0; i < A.n; ++i) CHECK(y[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    }
    CHECK_THROWS_AS(spmv(random_sparse(4, 0.5, rng), Vec(3, 1.0)), std::invalid_argument);
}

TEST_CASE("spmv_transpose equals matvec with the transposed dense matrix") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> g(0.0, 1.0);
    const CsrMatrix A = random_sparse(12, 0.3, rng);
    Vec x(A.n);
    for (double& v : x) v = g(rng);
    const Vec y = spmv_transpose(A, x);
    Vec ref(A.n, 0.0);
    for (int i = 0; i < A.n; ++i)
        for (int j = 0; j < A.n; ++j) {
            const int k = A.find(j, i);
            if (k >= 0) ref[i] += A.values[k] * x[j];
        }
    for (int i = 0; i < A.n; ++i) CHECK(y[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("frobenius_norm sums squared stored values") {
    const CsrMatrix A = csr_from_coo({{0, 0, 3.0}, {1, 1, 4.0}}, 2);
    CHECK(frobenius_norm(A) == doctest::Approx(5.0));
}

TEST_CASE("add_missing_diagonal inserts zero-valued diagonal entries and is idempotent") {
    const CsrMatrix A = csr_from_coo({{0, 1, 2.0}, {1, 0, 3.0}, {2, 2, 4.0}}, 3);
    const CsrMatrix B = add_missing_diagonal(A);
    CHECK(B.nnz() == 5);
    for (int i = 0; i < 3; ++i) CHECK(B.find(i, i) >= 0);
    CHECK(B.values[B.find(0, 0)] == 0.0);
    CHECK(B.values[B.find(2, 2)] == doctest::Approx(4.0));
    CHECK(B.values[B.find(0, 1)] == doctest::Approx(2.0));
    const CsrMatrix C = add_missing_diagonal(B);
    CHECK(C.row_ptr == B.row_ptr);
    CHECK(C.col_idx == B.col_idx);
    CHECK(C.values == B.values);
}

TEST_CASE("triangular solves invert triangular matvecs") {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        const int n = 10;
        std::vector<CooTriple> lt, ut;
        for (int i = 0; i < n; ++i) {
            lt.emplace_back(i, i, 1.0 + u(rng));
            ut.emplace_back(i, i, 1.0 + u(rng));
            for (int j = 0; j < i; ++j)
                if (u(rng) < 0.4) lt.emplace_back(i, j, g(rng));
            for (int j = i + 1; j < n; ++j)
                if (u(rng) < 0.4) ut.emplace_back(i, j, g(rng));
        }
        const CsrMatrix L = csr_from_coo(std::move(lt), n);
        const CsrMatrix U = csr_from_coo(std::move(ut), n);
        Vec x(n);
        for (double& v : x) v = g(rng);
        Vec r;

        r = lower_tri_solve(L, spmv(L, x));
        for (int i = 0; i < n; ++i) CHECK(r[i] == doctest::Approx(x[i]).epsilon(1e-10));
        r = upper_tri_solve(U, spmv(U, x));
        for (int i = 0; i < n; ++i) CHECK(r[i] == doctest::Approx(x[i]).epsilon(1e-10));
        r = lower_tri_transpose_solve(L, spmv_transpose(L, x));
        for (int i = 0; i < n; ++i) CHECK(r[i] == doctest::Approx(x[i]).epsilon(1e-10));
        r = upper_tri_transpose_solve(U, spmv_transpose(U, x));
        for (int i = 0; i < n; ++i) CHECK(r[i] == doctest::Approx(x[i]).epsilon(1e-10));
    }
}

TEST_CASE("triangular solve rejects a missing diagonal") {
    const CsrMatrix L = csr_from_coo({{1, 0, 2.0}, {0, 0, 1.0}}, 2);
    CHECK_THROWS_AS(lower_tri_solve(L, Vec(2, 1.0)), SingularFactorError);
}

TEST_CASE("to_dense is element-exact and enforces the cap") {
    const CsrMatrix A = csr_from_coo({{0, 1, 2.5}, {1, 1, -1.0}}, 2);
    const DenseMatrix D = to_dense(A);
    CHECK(D(0, 0) == 0.0);
    CHECK(D(0, 1) == 2.5);
    CHECK(D(1, 1) == -1.0);
    CHECK_THROWS_AS(to_dense(A, 1), std::invalid_argument);
}

TEST_CASE("sparse_product matches the dense product including fill") {
    std::mt19937_64 rng(14);
    const CsrMatrix A = random_sparse(9, 0.3, rng);
    const CsrMatrix B = random_sparse(9, 0.3, rng);
    const CsrMatrix C = sparse_product(A, B);
    const DenseMatrix Da = to_dense(A), Db = to_dense(B);
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j) {
            double ref = 0.0;
            for (int k = 0; k < 9; ++k) ref += Da(i, k) * Db(k, j);
            const int pos = C.find(i, j);
            const double got = pos >= 0 ? C.values[pos] : 0.0;
            CHECK(got == doctest::Approx(ref).epsilon(1e-12));
        }
}

TEST_CASE("matrix market round trip preserves structure and values") {
    std::mt19937_64 rng(15);
    const CsrMatrix A = random_sparse(8, 0.3, rng);
    const std::string path = "mm_roundtrip_test.mtx";
    write_matrix_market(A, path);
    const CsrMatrix B = read_matrix_market(path);
    CHECK(B.n == A.n);
    CHECK(B.row_ptr == A.row_ptr);
    CHECK(B.col_idx == A.col_idx);
    REQUIRE(B.values.size() == A.values.size());
    for (size_t k = 0; k < A.values.size(); ++k)
        CHECK(B.values[k] == doctest::Approx(A.values[k]).epsilon(1e-14));
    // header and 1-based indices on disk
    std::FILE* f = std::fopen(path.c_str(), "r");
    REQUIRE(f != nullptr);
    char line[256];
    REQUIRE(std::fgets(line, sizeof line, f) != nullptr);
    CHECK(std::string(line).rfind("%%MatrixMarket matrix coordinate real general", 0) == 0);
    std::fclose(f);
    std::remove(path.c_str());
}

TEST_CASE("vector file round trip") {
    const Vec v{1.5, -2.25, 1e-12, 3.0};
    const std::string path = "vec_roundtrip_test.vec";
    write_vector(v, path);
    const Vec w = read_vector(path);
    REQUIRE(w.size() == v.size());
    for (size_t i = 0; i < v.size(); ++i) CHECK(w[i] == doctest::Approx(v[i]).epsilon(1e-15));
    std::remove(path.c_str());
}

TEST_CASE("vector helpers") {
    Vec y{1.0, 2.0};
    axpy(2.0, Vec{3.0, -1.0}, y);
    CHECK(y[0] == doctest::Approx(7.0));
    CHECK(y[1] == doctest::Approx(0.0));
    CHECK(dot(Vec{1.0, 2.0}, Vec{3.0, 4.0}) == doctest::Approx(11.0));
    CHECK(norm2(Vec{3.0, 4.0}) == doctest::Approx(5.0));
}
