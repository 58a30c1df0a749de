#include "nilu/krylov.hpp"

#include <cmath>

namespace nilu {

namespace {

// Plane rotation zeroing b in (a, b); returns (c, s) with c*a + s*b = r.
std::pair<double, double> make_givens(double a, double b) {
    if (b == 0.0) return {1.0, 0.0};
    const double r = std::hypot(a, b);
    return {a / r, b / r};
}

}  // namespace

ArnoldiState arnoldi_init(const Vec& r0) {
    ArnoldiState s;
    s.beta = norm2(r0);
    if (s.beta > 0.0) {
        Vec v = r0;
        for (double& x : v) x /= s.beta;
        s.V.push_back(std::move(v));
    }
    return s;
}

void arnoldi_step(const CsrMatrix& A, const Preconditioner& P, ArnoldiState& state,
                  bool reorthogonalize) {
    if (state.lucky || state.V.empty())
        throw std::logic_error("arnoldi_step: no basis vector to extend");

    Vec w = spmv(A, P.apply_inverse(state.V.back()));
    Vec h(state.V.size() + 1, 0.0);
    for (size_t j = 0; j < state.V.size(); ++j) {
        const double hj = dot(w, state.V[j]);
        axpy(-hj, state.V[j], w);
        h[j] = hj;
    }
    if (reorthogonalize) {
        for (size_t j = 0; j < state.V.size(); ++j) {
            const double c = dot(w, state.V[j]);
            axpy(-c, state.V[j], w);
            h[j] += c;
        }
    }
    const double hn = norm2(w);
    h.back() = hn;
    state.H_cols.push_back(std::move(h));
    state.k++;
    if (hn == 0.0) {
        state.lucky = true;  // exact solution found (lucky breakdown)
    } else {
        for (double& x : w) x /= hn;
        state.V.push_back(std::move(w));
    }
}

std::pair<Vec, double> hessenberg_lstsq(const std::vector<Vec>& H_cols, double beta) {
    const int k = static_cast<int>(H_cols.size());
    // R columns after rotation, g = rotated beta * e1
    std::vector<Vec> R(k);
    Vec cs(k), sn(k);
    Vec g(k + 1, 0.0);
    g[0] = beta;
    for (int i = 0; i < k; ++i) {
        Vec h = H_cols[i];  // length i + 2
        if (static_cast<int>(h.size()) != i + 2)
            throw std::invalid_argument("hessenberg_lstsq: malformed column");
        for (int j = 0; j < i; ++j) {
            const double t = cs[j] * h[j] + sn[j] * h[j + 1];
            h[j + 1] = -sn[j] * h[j] + cs[j] * h[j + 1];
            h[j] = t;
        }
        auto [c, s] = make_givens(h[i], h[i + 1]);
        cs[i] = c;
        sn[i] = s;
        h[i] = c * h[i] + s * h[i + 1];
        h[i + 1] = 0.0;
        if (h[i] == 0.0)
            throw NumericalBreakdownError("hessenberg_lstsq: singular R at column " +
                                          std::to_string(i));
        g[i + 1] = -s * g[i];
        g[i] = c * g[i];
        h.resize(i + 1);
        R[i] = std::move(h);
    }
    Vec y(k, 0.0);
    for (int i = k - 1; i >= 0; --i) {
        double acc = g[i];
        for (int j = i + 1; j < k; ++j) acc -= R[j][i] * y[j];
        y[i] = acc / R[i][i];
    }
    return {y, std::abs(g[k])};
}

SolveResult gmres(const CsrMatrix& A, const Preconditioner& P, const Vec& b, const Vec& x0,
                  const GmresOptions& opts) {
    const int n = A.n;
    if (static_cast<int>(b.size()) != n || static_cast<int>(x0.size()) != n)
        throw std::invalid_argument("gmres: dimension mismatch");
    if (opts.tol <= 0.0) throw std::invalid_argument("gmres: tol must be positive");
    const int kmax = opts.kmax < 0 ? n : opts.kmax;

    Vec r0 = b;
    axpy(-1.0, spmv(A, x0), r0);
    const double rho0 = norm2(r0);

    SolveResult res;
    res.residual_history.push_back(rho0);
    if (rho0 == 0.0) {
        res.x = x0;
        res.converged = true;
        return res;
    }

    ArnoldiState st = arnoldi_init(r0);

    // Incremental Givens QR of H: R columns, rotation coefficients, g = rotated beta*e1.
    std::vector<Vec> R;
    Vec cs, sn;
    Vec g{st.beta};
    double rho = rho0;

    while (rho > opts.tol * rho0 && st.k < kmax && !st.lucky) {
        arnoldi_step(A, P, st, opts.reorthogonalize);
        const int i = st.k - 1;
        Vec h = st.H_cols[i];
        for (int j = 0; j < i; ++j) {
            const double t = cs[j] * h[j] + sn[j] * h[j + 1];
            h[j + 1] = -sn[j] * h[j] + cs[j] * h[j + 1];
            h[j] = t;
        }
        auto [c, s] = make_givens(h[i], h[i + 1]);
        cs.push_back(c);
        sn.push_back(s);
        h[i] = c * h[i] + s * h[i + 1];
        if (h[i] == 0.0)
            throw NumericalBreakdownError("gmres: singular R at iteration " + std::to_string(i));
        g.push_back(-s * g[i]);
        g[i] = c * g[i];
        h.resize(i + 1);
        R.push_back(std::move(h));
        rho = std::abs(g.back());
        res.residual_history.push_back(rho);
    }

    const int k = st.k;
    res.iterations = k;
    res.breakdown = st.lucky;
    res.converged = rho <= opts.tol * rho0;

    Vec y(k, 0.0);
    for (int i = k - 1; i >= 0; --i) {
        double acc = g[i];
        for (int j = i + 1; j < k; ++j) acc -= R[j][i] * y[j];
        y[i] = acc / R[i][i];
    }
    Vec z(n, 0.0);
    for (int j = 0; j < k; ++j) axpy(y[j], st.V[j], z);
    res.x = x0;
    axpy(1.0, P.apply_inverse(z), res.x);
    return res;
}

}  // namespace nilu
