/// @file spectral.hpp
/// @brief Spectral metrics and bound checks for the preconditioned operator:
///        one-sided Jacobi SVD, matrix-free power iteration for sigma_max,
///        the two singular-value bound checks, and the evaluation report with
///        singular-value histograms.

#ifndef NILU_SPECTRAL_HPP
#define NILU_SPECTRAL_HPP

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "nilu/dense.hpp"
#include "nilu/krylov.hpp"
#include "nilu/training.hpp"

namespace nilu {

/// Materialize A P^{-1} column by column: column j = A (P^{-1} e_j).
DenseMatrix precond_dense(const CsrMatrix& A, const Preconditioner& P, int dense_cap = 2000);

/// Singular values of a square matrix by one-sided Jacobi rotations,
/// descending. Throws on non-convergence after max_sweeps.
Vec svd_values(DenseMatrix B, int max_sweeps = 30);

struct PowerResult {
    double sigma = 0.0;
    bool converged = false;
};

/// Power iteration on v -> M^T (M v) with M = A P^{-1} applied matrix-free;
/// returns the square root of the dominant Rayleigh quotient.
PowerResult sigma_max_power(const CsrMatrix& A, const Preconditioner& P, int iters = 200,
                            double tol = 1e-6);

struct Lemma1Result {
    double lhs = 0.0;  // sigma_max(A P^{-1})
    double rhs = 0.0;  // eps^{-1} ||A - L U||_F + 1
    bool holds = false;
};

/// Upper bound on the largest singular value of the preconditioned system.
/// The exact product L U (including fill) supplies the Frobenius distance.
Lemma1Result lemma1_check(const CsrMatrix& A, const FactorPair& F, double eps);

struct Lemma2Result {
    double lhs = 0.0;  // sigma_min(A P^{-1})
    double mid = 0.0;  // ||P A^{-1}||_F^{-1}
    double rhs = 0.0;  // (||P A^{-1} - I||_F + 1)^{-1}
    bool holds = false;
};

/// Two dense lower bounds on the smallest singular value: holds asserts
/// lhs >= mid and lhs >= rhs (mid and rhs are not ordered relative to each
/// other in general).
Lemma2Result lemma2_check(const CsrMatrix& A, const FactorPair& F);

/// Factory building a preconditioner for a given system matrix.
using PrecondFactory = std::function<std::unique_ptr<Preconditioner>(const CsrMatrix&)>;

struct NamedFactory {
    std::string name;
    PrecondFactory make;
};

struct EvalCell {
    std::string preconditioner;
    int problem = 0;
    bool failed = false;
    std::string failure;
    double sigma_min = 0.0, sigma_max = 0.0, kappa = 0.0;
    double frob_PA = 0.0;      // ||P - A||_F
    double frob_PAinvI = 0.0;  // ||P A^{-1} - I||_F
    int iterations = 0;
    double setup_time = 0.0, solve_time = 0.0;
    Vec singular_values;  // empty beyond the dense cap
};

struct EvalAggregate {
    std::string preconditioner;
    int evaluated = 0;  // cells that did not fail
    double sigma_min = 0.0, sigma_max = 0.0, kappa = 0.0;
    double frob_PA = 0.0, frob_PAinvI = 0.0;
    double iterations = 0.0, setup_time = 0.0, solve_time = 0.0;
};

struct EvalReport {
    std::vector<EvalCell> cells;
    std::vector<EvalAggregate> aggregates;
};

struct EvalConfig {
    double tol = 1e-8;
    int dense_cap = 2000;
    bool spectral = true;  // compute SVD-based columns when n fits the cap
    int jobs = 1;          // worker cap; cells are independent of each other
};

/// Run GMRES with each preconditioner over each problem (deterministic b) and
/// collect the report. Per-cell failures are recorded, not fatal.
EvalReport evaluate(const std::vector<TrainSample>& problems,
                    const std::vector<NamedFactory>& preconditioners, const EvalConfig& cfg);

/// Materialize P as a sparse matrix for norm purposes: exact L U product for
/// factored preconditioners, diagonal for Jacobi, identity otherwise.
CsrMatrix materialize_preconditioner(const Preconditioner& P, int n);

struct Histogram {
    Vec bin_left, bin_right;
    std::vector<long> count;
};

/// 60 log-spaced bins spanning [min/2, 2 max] of the pooled values.
Histogram log_histogram(const Vec& values, int bins = 60);

void write_report_csv(const EvalReport& report, const std::string& path);
void write_histogram_csv(const Histogram& h, const std::string& path);
void write_histogram_svg(const Histogram& h, const std::string& title, const std::string& path);

}  // namespace nilu

#endif  // NILU_SPECTRAL_HPP
