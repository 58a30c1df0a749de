#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "nilu/graph.hpp"

using namespace nilu;

TEST_CASE("raw node features match a hand computation") {
    // A = [[2, -1, 0], [0, 0, 3], [0, 0, 1]] before diagonal completion
    const CsrMatrix A = csr_from_coo({{0, 0, 2.0}, {0, 1, -1.0}, {1, 2, 3.0}, {2, 2, 1.0}}, 3);
    const DenseMatrix F = node_features_raw(add_missing_diagonal(A));
    // node 0: row nnz 2, col nnz 1, row sum 3, col sum 2, diag 2, dominance 2/3,
    // row max 2, col max 2
    CHECK(F(0, 0) == doctest::Approx(2.0));
    CHECK(F(0, 1) == doctest::Approx(1.0));
    CHECK(F(0, 2) == doctest::Approx(3.0));
    CHECK(F(0, 3) == doctest::Approx(2.0));
    CHECK(F(0, 4) == doctest::Approx(2.0));
    CHECK(F(0, 5) == doctest::Approx(2.0 / 3.0));
    CHECK(F(0, 6) == doctest::Approx(2.0));
    CHECK(F(0, 7) == doctest::Approx(2.0));
    // node 1: the completed diagonal entry (1,1)=0 joins the pattern
    CHECK(F(1, 0) == doctest::Approx(2.0));
    CHECK(F(1, 1) == doctest::Approx(2.0));
    CHECK(F(1, 2) == doctest::Approx(3.0));
    CHECK(F(1, 3) == doctest::Approx(1.0));
    CHECK(F(1, 4) == doctest::Approx(0.0));
    CHECK(F(1, 5) == doctest::Approx(0.0));
    CHECK(F(1, 6) == doctest::Approx(3.0));
    CHECK(F(1, 7) == doctest::Approx(1.0));
    // node 2: row {1}, col {3, 1}
    CHECK(F(2, 0) == doctest::Approx(1.0));
    CHECK(F(2, 1) == doctest::Approx(2.0));
    CHECK(F(2, 2) == doctest::Approx(1.0));
    CHECK(F(2, 3) == doctest::Approx(4.0));
    CHECK(F(2, 4) == doctest::Approx(1.0));
    CHECK(F(2, 5) == doctest::Approx(1.0));
    CHECK(F(2, 6) == doctest::Approx(1.0));
    CHECK(F(2, 7) == doctest::Approx(3.0));
}

TEST_CASE("standardize_columns yields mean 0 / population variance 1") {
    std::mt19937_64 rng(51);
    std::normal_distribution<double> g(3.0, 2.0);
    DenseMatrix F(40, 4);
    for (double& v : F.data) v = g(rng);
    // degenerate column
    for (int i = 0; i < 40; ++i) F(i, 2) = 7.0;
    standardize_columns(F);
    for (int j = 0; j < 4; ++j) {
        double mean = 0.0, var = 0.0;
        for (int i = 0; i < 40; ++i) mean += F(i, j);
        mean /= 40;
        for (int i = 0; i < 40; ++i) var += (F(i, j) - mean) * (F(i, j) - mean);
        var /= 40;
        if (j == 2) {
            for (int i = 0; i < 40; ++i) CHECK(F(i, 2) == 0.0);
        } else {
            CHECK(std::abs(mean) < 1e-12);
            CHECK(var == doctest::Approx(1.0).epsilon(1e-10));
        }
    }
}

TEST_CASE("coates graph enumerates the completed pattern in CSR order") {
    const CsrMatrix A = csr_from_coo({{0, 1, 5.0}, {1, 0, -2.0}, {1, 1, 3.0}}, 2);
    const CoatesGraph g = coates_graph(A);
    const CsrMatrix Ad = add_missing_diagonal(A);
    REQUIRE(g.num_edges() == Ad.nnz());
    CHECK(g.n == 2);
    int e = 0;
    for (int i = 0; i < Ad.n; ++i)
        for (int k = Ad.row_ptr[i]; k < Ad.row_ptr[i + 1]; ++k, ++e) {
            CHECK(g.edge_src[e] == i);
            CHECK(g.edge_dst[e] == Ad.col_idx[k]);
            CHECK(g.matrix_values[e] == doctest::Approx(Ad.values[k]));
            CHECK(g.edge_feats[2 * e] == doctest::Approx(Ad.values[k]));
            const double pos = g.edge_feats[2 * e + 1];
            if (i < Ad.col_idx[k]) CHECK(pos == 1.0);
            if (i == Ad.col_idx[k]) CHECK(pos == 0.0);
            if (i > Ad.col_idx[k]) CHECK(pos == -1.0);
        }
    CHECK(g.row_ptr == Ad.row_ptr);
    for (int i = 0; i < g.n; ++i) {
        CHECK(g.edge_src[g.diag_edge[i]] == i);
        CHECK(g.edge_dst[g.diag_edge[i]] == i);
    }
    CHECK(static_cast<int>(g.node_feats.size()) == g.n * kNodeFeatureCount);
}

TEST_CASE("node features are equivariant under simultaneous permutation") {
    std::mt19937_64 rng(52);
    std::normal_distribution<double> gd(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n = 12;
    std::vector<CooTriple> t;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i == j || u(rng) < 0.25) t.emplace_back(i, j, gd(rng));
    const CsrMatrix A = csr_from_coo(t, n);

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<CooTriple> tp;
    for (auto& [i, j, v] : t) tp.emplace_back(perm[i], perm[j], v);
    const CsrMatrix Ap = csr_from_coo(tp, n);

    const CoatesGraph g = coates_graph(A);
    const CoatesGraph gp = coates_graph(Ap);
    for (int i = 0; i < n; ++i)
        for (int f = 0; f < kNodeFeatureCount; ++f)
            CHECK(gp.node_feats[perm[i] * kNodeFeatureCount + f] ==
                  doctest::Approx(g.node_feats[i * kNodeFeatureCount + f]).epsilon(1e-12));
}
