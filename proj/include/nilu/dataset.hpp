/// @file dataset.hpp
/// @brief Synthetic problem generator: 2-D Poisson stiffness matrices,
///        Gaussian perturbation of nonzeros, deterministic test right-hand
///        sides, supervised tuples, and on-disk persistence.

#ifndef NILU_DATASET_HPP
#define NILU_DATASET_HPP

#include <random>
#include <string>

#include "nilu/training.hpp"

namespace nilu {

class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// n = k^2 matrix of the unscaled 5-point Laplacian stencil on a k x k grid:
/// diagonal 4, -1 per grid neighbor. Symmetric positive definite.
CsrMatrix poisson2d(int k);

/// Shift every stored nonzero by an independent standard normal draw; the
/// pattern is untouched, stored zeros stay zero. Resamples (up to max_attempts)
/// until the result is nonsingular; throws GenerationError when the budget
/// runs out.
CsrMatrix perturb(const CsrMatrix& A, std::mt19937_64& rng, int max_attempts = 100);

/// b_i = sin(pi x_i) sin(pi y_i) on the interior grid points of the unit
/// square, x, y in {1/(k+1), ..., k/(k+1)}, row-major node order.
Vec rhs_source(int k);

/// Supervised tuple: b ~ N(0, I), x solved offline by ILU(0)-preconditioned
/// GMRES at tol 1e-10; the residual ||Ax - b||/||b|| < 1e-10 is verified.
TrainSample supervised_sample(const CsrMatrix& A, std::uint64_t seed);

struct ProblemSet {
    std::string split;  // train | val | test
    std::vector<TrainSample> samples;
    int grid_k = 0;
    std::uint64_t seed_base = 0;
};

struct DatasetBundle {
    ProblemSet train, val, test;
};

/// Deterministic per-sample seeds: seed_base + split_offset + index with
/// disjoint split offsets. Train/val samples are supervised; test samples
/// carry the deterministic source right-hand side.
DatasetBundle make_dataset(int grid_k, int n_train, int n_val, int n_test,
                           std::uint64_t seed_base);

/// Directory layout: manifest.json + one .mtx per matrix and .vec files per
/// vector.
void save_dataset(const DatasetBundle& ds, const std::string& dir);
DatasetBundle load_dataset(const std::string& dir);

}  // namespace nilu

#endif  // NILU_DATASET_HPP
