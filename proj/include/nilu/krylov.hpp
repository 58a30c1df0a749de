/// @file krylov.hpp
/// @brief Right-preconditioned full GMRES with modified Gram-Schmidt Arnoldi
///        and incremental Givens-rotation least squares on the Hessenberg
///        coefficients.

#ifndef NILU_KRYLOV_HPP
#define NILU_KRYLOV_HPP

#include <vector>

#include "nilu/precond.hpp"
#include "nilu/sparse.hpp"

namespace nilu {

class NumericalBreakdownError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Arnoldi process state. V holds the orthonormal basis; H is stored by
/// columns, column i of length i + 2 holding h_{0..i+1, i}. After k steps
/// (while not lucky) the relation A P^{-1} V_k = V_{k+1} H_{k+1,k} holds.
struct ArnoldiState {
    std::vector<Vec> V;
    std::vector<Vec> H_cols;
    double beta = 0.0;
    int k = 0;  // completed orthogonalization steps
    bool lucky = false;
};

/// Start the process from the initial residual: beta = ||r0||, v_1 = r0 / beta.
ArnoldiState arnoldi_init(const Vec& r0);

/// One step: w = A P^{-1} v_k orthogonalized against v_1..v_k by sequential
/// (modified Gram-Schmidt) subtraction; h_{k+1,k} = ||w||. A zero norm marks
/// lucky breakdown, otherwise v_{k+1} = w / h_{k+1,k} is appended.
/// An optional second MGS sweep is available for ill-conditioned bases.
void arnoldi_step(const CsrMatrix& A, const Preconditioner& P, ArnoldiState& state,
                  bool reorthogonalize = false);

/// Solve min_y ||beta e_1 - H y||_2 for a (k+1) x k upper-Hessenberg H given
/// by columns, via a Givens-rotation QR sweep. Returns (y, attained minimum).
/// Throws NumericalBreakdownError when R turns exactly singular.
std::pair<Vec, double> hessenberg_lstsq(const std::vector<Vec>& H_cols, double beta);

struct SolveResult {
    Vec x;
    int iterations = 0;
    Vec residual_history;  // rho_0 .. rho_k, length iterations + 1
    bool converged = false;
    bool breakdown = false;  // lucky termination
};

struct GmresOptions {
    double tol = 1e-8;  // relative residual target rho_k <= tol * rho_0
    int kmax = -1;      // maximum subspace dimension; -1 means n
    bool reorthogonalize = false;
};

/// Full (non-restarted) right-preconditioned GMRES. Loops while
/// rho_k > tol * rho_0 and k < kmax; on exit x = x0 + P^{-1} V_k y_k.
SolveResult gmres(const CsrMatrix& A, const Preconditioner& P, const Vec& b, const Vec& x0,
                  const GmresOptions& opts = {});

}  // namespace nilu

#endif  // NILU_KRYLOV_HPP
