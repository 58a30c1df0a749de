/// @file precond.hpp
/// @brief Preconditioner interface and the classical baselines: identity,
///        Jacobi, ILU(0), plus the factored-pair applicator shared with the
///        learned method.

#ifndef NILU_PRECOND_HPP
#define NILU_PRECOND_HPP

#include <memory>
#include <string>

#include "nilu/sparse.hpp"

namespace nilu {

/// Abstract right preconditioner: a fixed nonsingular linear map applied as
/// P^{-1} v. Implementations are immutable and apply_inverse is pure, so a
/// single instance may serve concurrent solves.
class Preconditioner {
public:
    virtual ~Preconditioner() = default;
    virtual Vec apply_inverse(const Vec& v) const = 0;
    /// (P^{-1})^T v, needed by the matrix-free power iteration on A P^{-1}.
    virtual Vec apply_inverse_transpose(const Vec& v) const = 0;
    virtual std::string name() const = 0;
};

class IdentityPreconditioner final : public Preconditioner {
public:
    Vec apply_inverse(const Vec& v) const override { return v; }
    Vec apply_inverse_transpose(const Vec& v) const override { return v; }
    std::string name() const override { return "none"; }
};

/// P = diag(A); zero or absent diagonal entries fall back to 1 so P stays
/// nonsingular.
class JacobiPreconditioner final : public Preconditioner {
public:
    explicit JacobiPreconditioner(const CsrMatrix& A);
    Vec apply_inverse(const Vec& v) const override;
    Vec apply_inverse_transpose(const Vec& v) const override { return apply_inverse(v); }
    std::string name() const override { return "jacobi"; }
    const Vec& diagonal() const { return diag_; }

private:
    Vec diag_;
};

/// Triangular factor pair defining P = L U implicitly.
///
/// Both factors carry a stored nonzero diagonal. The learned method produces
/// L with |L_ii| >= epsilon and U with unit diagonal; ILU(0) produces the
/// textbook convention (L unit diagonal, U carrying pivots). Either way
/// pattern(L) union pattern(U) stays inside pattern(add_missing_diagonal(A)).
struct FactorPair {
    CsrMatrix L;
    CsrMatrix U;
    double epsilon = 1e-4;
};

struct IluDiagnostics {
    int guarded_pivots = 0;  // zero pivots replaced by the guard value
};

/// IKJ-variant ILU(0) on pattern(add_missing_diagonal(A)): L holds the
/// multipliers with an explicit unit diagonal, U holds the pivots. Zero pivots
/// are replaced by sign * pivot_guard and counted; with strict = true they
/// throw SingularFactorError instead.
FactorPair ilu0(const CsrMatrix& A, double pivot_guard = 1e-8, bool strict = false,
                IluDiagnostics* diag = nullptr);

/// v = U^{-1} (L^{-1} r) via two sparse triangular solves.
Vec factored_apply_inverse(const FactorPair& F, const Vec& r);

/// v = (L U)^{-T} r = L^{-T} (U^{-T} r) via two transpose triangular solves.
Vec factored_apply_inverse_transpose(const FactorPair& F, const Vec& r);

/// Preconditioner wrapper around a FactorPair.
class FactoredPreconditioner final : public Preconditioner {
public:
    FactoredPreconditioner(FactorPair F, std::string name)
        : F_(std::move(F)), name_(std::move(name)) {}
    Vec apply_inverse(const Vec& v) const override { return factored_apply_inverse(F_, v); }
    Vec apply_inverse_transpose(const Vec& v) const override {
        return factored_apply_inverse_transpose(F_, v);
    }
    std::string name() const override { return name_; }
    const FactorPair& factors() const { return F_; }

private:
    FactorPair F_;
    std::string name_;
};

/// Write/read a factor pair as <prefix>.L.mtx and <prefix>.U.mtx.
void write_factor_pair(const FactorPair& F, const std::string& prefix);
FactorPair read_factor_pair(const std::string& prefix, double epsilon = 1e-4);

}  // namespace nilu

#endif  // NILU_PRECOND_HPP
