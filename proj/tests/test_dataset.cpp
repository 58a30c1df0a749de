#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "nilu/dataset.hpp"

using namespace nilu;

TEST_CASE("poisson2d assembles the 5-point stencil") {
    const int k = 3;
    const CsrMatrix A = poisson2d(k);
    REQUIRE(A.n == k * k);
    // hand count: nnz = 5n - 4k (each boundary loses one neighbor per side)
    CHECK(A.nnz() == 5 * A.n - 4 * k);
    for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c) {
            const int i = r * k + c;
            CHECK(A.values[A.find(i, i)] == doctest::Approx(4.0));
            if (c + 1 < k) CHECK(A.values[A.find(i, i + 1)] == doctest::Approx(-1.0));
            if (r + 1 < k) CHECK(A.values[A.find(i, i + k)] == doctest::Approx(-1.0));
            if (c + 1 < k) CHECK(A.values[A.find(i + 1, i)] == doctest::Approx(-1.0));
            if (r + 1 < k) CHECK(A.values[A.find(i + k, i)] == doctest::Approx(-1.0));
            // no diagonal-neighbor coupling
            if (r + 1 < k && c + 1 < k) CHECK(A.find(i, i + k + 1) == -1);
        }
    CHECK_THROWS(poisson2d(1));
}

TEST_CASE("perturb keeps the pattern and shifts values by standard normals") {
    const CsrMatrix A = poisson2d(5);
    std::mt19937_64 rng(91);
    const CsrMatrix B = perturb(A, rng);
    CHECK(B.row_ptr == A.row_ptr);
    CHECK(B.col_idx == A.col_idx);

    // statistical oracle over many draws: shift mean ~ 0, variance ~ 1
    double sum = 0.0, sum2 = 0.0;
    long count = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const CsrMatrix C = perturb(A, rng);
        for (int kk = 0; kk < A.nnz(); ++kk) {
            const double d = C.values[kk] - A.values[kk];
            sum += d;
            sum2 += d * d;
            ++count;
        }
    }
    const double mean = sum / count;
    const double var = sum2 / count - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(var == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("rhs_source matches the analytic values") {
    const int k = 3;
    const Vec b = rhs_source(k);
    REQUIRE(static_cast<int>(b.size()) == k * k);
    const double pi = std::acos(-1.0);
    for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c) {
            const double x = double(c + 1) / (k + 1);
            const double y = double(r + 1) / (k + 1);
            CHECK(b[r * k + c] == doctest::Approx(std::sin(pi * x) * std::sin(pi * y)));
        }
}

TEST_CASE("supervised samples solve their own system to high accuracy") {
    std::mt19937_64 rng(92);
    const CsrMatrix A = perturb(poisson2d(5), rng);
    const TrainSample s = supervised_sample(A, 123);
    REQUIRE(s.has_solution);
    Vec r = spmv(s.A, s.x);
    for (size_t i = 0; i < r.size(); ++i) r[i] -= s.b[i];
    CHECK(norm2(r) / norm2(s.b) < 1e-10);
}

TEST_CASE("make_dataset is deterministic and splits use disjoint seeds") {
    const DatasetBundle a = make_dataset(4, 3, 2, 2, 55);
    const DatasetBundle b = make_dataset(4, 3, 2, 2, 55);
    REQUIRE(a.train.samples.size() == 3);
    REQUIRE(a.val.samples.size() == 2);
    REQUIRE(a.test.samples.size() == 2);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(a.train.samples[i].A.values == b.train.samples[i].A.values);
        CHECK(a.train.samples[i].b == b.train.samples[i].b);
    }
    // different splits perturb differently
    CHECK(a.train.samples[0].A.values != a.val.samples[0].A.values);
    CHECK(a.train.samples[0].seed != a.val.samples[0].seed);
    // test rhs is the deterministic source term
    CHECK(a.test.samples[0].b == rhs_source(4));
    CHECK_FALSE(a.test.samples[0].has_solution);
    CHECK(a.train.samples[0].has_solution);
}

TEST_CASE("dataset save/load round trip") {
    namespace fs = std::filesystem;
    const DatasetBundle a = make_dataset(3, 2, 1, 1, 7);
    const std::string dir = "dataset_roundtrip_test";
    save_dataset(a, dir);
    const DatasetBundle b = load_dataset(dir);
    REQUIRE(b.train.samples.size() == a.train.samples.size());
    for (size_t i = 0; i < a.train.samples.size(); ++i) {
        CHECK(b.train.samples[i].A.col_idx == a.train.samples[i].A.col_idx);
        for (int k = 0; k < a.train.samples[i].A.nnz(); ++k)
            CHECK(b.train.samples[i].A.values[k] ==
                  doctest::Approx(a.train.samples[i].A.values[k]).epsilon(1e-14));
        CHECK(b.train.samples[i].has_solution);
    }
    CHECK(b.test.samples[0].b.size() == a.test.samples[0].b.size());
    CHECK(b.train.grid_k == 3);
    fs::remove_all(dir);
}

TEST_CASE("load_dataset rejects a missing directory") {
    CHECK_THROWS(load_dataset("no_such_dataset_dir"));
}
