#include "nilu/spectral.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <thread>

namespace nilu {

DenseMatrix precond_dense(const CsrMatrix& A, const Preconditioner& P, int dense_cap) {
    if (A.n > dense_cap) throw std::invalid_argument("precond_dense: dense cap exceeded");
    DenseMatrix M(A.n, A.n);
    Vec e(A.n, 0.0);
    for (int j = 0; j < A.n; ++j) {
        e[j] = 1.0;
        const Vec col = spmv(A, P.apply_inverse(e));
        for (int i = 0; i < A.n; ++i) M(i, j) = col[i];
        e[j] = 0.0;
    }
    return M;
}

Vec svd_values(DenseMatrix B, int max_sweeps) {
    if (B.n_rows != B.n_cols) throw std::invalid_argument("svd_values: matrix not square");
    const int n = B.n_rows;
    // One-sided Jacobi on columns: rotate pairs until all are orthogonal.
    constexpr double orth_tol = 1e-14;
    auto col = [&B, n](int j, int i) -> double& { return B.data[static_cast<size_t>(i) * n + j]; };
    bool converged = n < 2;
    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        converged = true;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (int i = 0; i < n; ++i) {
                    const double xp = col(p, i), xq = col(q, i);
                    app += xp * xp;
                    aqq += xq * xq;
                    apq += xp * xq;
                }
                if (std::abs(apq) <= orth_tol * std::sqrt(app * aqq)) continue;
                converged = false;
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (int i = 0; i < n; ++i) {
                    const double xp = col(p, i), xq = col(q, i);
                    col(p, i) = c * xp - s * xq;
                    col(q, i) = s * xp + c * xq;
                }
            }
        }
    }
    if (!converged) throw std::runtime_error("svd_values: Jacobi sweeps did not converge");
    Vec sigma(n, 0.0);
    for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += col(j, i) * col(j, i);
        sigma[j] = std::sqrt(s);
    }
    std::sort(sigma.begin(), sigma.end(), std::greater<double>());
    return sigma;
}

PowerResult sigma_max_power(const CsrMatrix& A, const Preconditioner& P, int iters, double tol) {
    if (iters < 1) throw std::invalid_argument("sigma_max_power: iters must be >= 1");
    const int n = A.n;
    // Power iteration on v -> M^T (M v) with M = A P^{-1}; every apply is a
    // sparse kernel or a (transpose) preconditioner solve.
    Vec v(n);
    std::mt19937_64 rng(12345);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (double& x : v) x = dist(rng);
    const double nv = norm2(v);
    for (double& x : v) x /= nv;

    PowerResult out;
    double prev = 0.0;
    for (int it = 0; it < iters; ++it) {
        const Vec mv = spmv(A, P.apply_inverse(v));  // v is unit here
        const double sigma = norm2(mv);
        Vec w = P.apply_inverse_transpose(spmv_transpose(A, mv));
        const double nw = norm2(w);
        if (nw == 0.0) {
            out.sigma = 0.0;
            out.converged = true;
            return out;
        }
        for (double& x : w) x /= nw;
        v = std::move(w);
        out.sigma = sigma;
        if (it > 0 && std::abs(sigma - prev) <= tol * std::max(sigma, 1e-300)) {
            out.converged = true;
            return out;
        }
        prev = sigma;
    }
    return out;
}

CsrMatrix materialize_preconditioner(const Preconditioner& P, int n) {
    if (const auto* fp = dynamic_cast<const FactoredPreconditioner*>(&P))
        return sparse_product(fp->factors().L, fp->factors().U);
    std::vector<CooTriple> triples;
    triples.reserve(n);
    if (const auto* jp = dynamic_cast<const JacobiPreconditioner*>(&P)) {
        for (int i = 0; i < n; ++i) triples.emplace_back(i, i, jp->diagonal()[i]);
    } else {
        for (int i = 0; i < n; ++i) triples.emplace_back(i, i, 1.0);
    }
    return csr_from_coo(std::move(triples), n);
}

namespace {

// ||S - A||_F over the pattern union of two sparse matrices.
double sparse_diff_frobenius(const CsrMatrix& S, const CsrMatrix& A) {
    double acc = 0.0;
    for (int i = 0; i < S.n; ++i) {
        int ks = S.row_ptr[i], ka = A.row_ptr[i];
        const int es = S.row_ptr[i + 1], ea = A.row_ptr[i + 1];
        while (ks < es || ka < ea) {
            const int js = ks < es ? S.col_idx[ks] : S.n;
            const int ja = ka < ea ? A.col_idx[ka] : A.n;
            double d = 0.0;
            if (js < ja) {
                d = S.values[ks++];
            } else if (ja < js) {
                d = -A.values[ka++];
            } else {
                d = S.values[ks++] - A.values[ka++];
            }
            acc += d * d;
        }
    }
    return std::sqrt(acc);
}

double frob_pain_minus_identity(const CsrMatrix& P_sparse, const CsrMatrix& A) {
    const DenseMatrix Ainv = dense_inverse(to_dense(A));
    const DenseMatrix Pd = to_dense(P_sparse, std::max(P_sparse.n, 2000));
    DenseMatrix M = matmul(Pd, Ainv);
    for (int i = 0; i < M.n_rows; ++i) M(i, i) -= 1.0;
    return dense_frobenius(M);
}

}  // namespace

Lemma1Result lemma1_check(const CsrMatrix& A, const FactorPair& F, double eps) {
    Lemma1Result r;
    FactoredPreconditioner P(F, "factored");
    const Vec sigma = svd_values(precond_dense(A, P));
    r.lhs = sigma.empty() ? 0.0 : sigma.front();
    const CsrMatrix LU = sparse_product(F.L, F.U);
    r.rhs = sparse_diff_frobenius(LU, A) / eps + 1.0;
    r.holds = r.lhs <= r.rhs + 1e-9;
    return r;
}

Lemma2Result lemma2_check(const CsrMatrix& A, const FactorPair& F) {
    Lemma2Result r;
    FactoredPreconditioner P(F, "factored");
    const Vec sigma = svd_values(precond_dense(A, P));
    r.lhs = sigma.empty() ? 0.0 : sigma.back();
    const CsrMatrix LU = sparse_product(F.L, F.U);
    const DenseMatrix Ainv = dense_inverse(to_dense(A));
    const DenseMatrix PAinv = matmul(to_dense(LU, std::max(LU.n, 2000)), Ainv);
    r.mid = 1.0 / dense_frobenius(PAinv);
    DenseMatrix M = PAinv;
    for (int i = 0; i < M.n_rows; ++i) M(i, i) -= 1.0;
    r.rhs = 1.0 / (dense_frobenius(M) + 1.0);
    // both are lower bounds on sigma_min; the Frobenius middle term is not in
    // general above the right-hand side (||M||_F <= ||M - I||_F + sqrt(n))
    r.holds = (r.lhs >= r.mid - 1e-9) && (r.lhs >= r.rhs - 1e-9);
    return r;
}

namespace {

EvalCell evaluate_cell(const TrainSample& prob, const NamedFactory& nf, int problem_index,
                       const EvalConfig& cfg) {
    using clock = std::chrono::steady_clock;
    EvalCell cell;
    cell.preconditioner = nf.name;
    cell.problem = problem_index;
    try {
        const auto t0 = clock::now();
        std::unique_ptr<Preconditioner> P = nf.make(prob.A);
        const auto t1 = clock::now();
        cell.setup_time = std::chrono::duration<double>(t1 - t0).count();

        GmresOptions opts;
        opts.tol = cfg.tol;
        const auto t2 = clock::now();
        const SolveResult sr = gmres(prob.A, *P, prob.b, Vec(prob.A.n, 0.0), opts);
        const auto t3 = clock::now();
        cell.solve_time = std::chrono::duration<double>(t3 - t2).count();
        cell.iterations = sr.iterations;

        const CsrMatrix Ps = materialize_preconditioner(*P, prob.A.n);
        cell.frob_PA = sparse_diff_frobenius(Ps, prob.A);
        if (cfg.spectral && prob.A.n <= cfg.dense_cap) {
            cell.singular_values = svd_values(precond_dense(prob.A, *P, cfg.dense_cap));
            cell.sigma_max = cell.singular_values.front();
            cell.sigma_min = cell.singular_values.back();
            cell.kappa = cell.sigma_max / cell.sigma_min;
            cell.frob_PAinvI = frob_pain_minus_identity(Ps, prob.A);
        }
    } catch (const std::exception& e) {
        cell.failed = true;
        cell.failure = e.what();
    }
    return cell;
}

}  // namespace

EvalReport evaluate(const std::vector<TrainSample>& problems,
                    const std::vector<NamedFactory>& preconditioners, const EvalConfig& cfg) {
    EvalReport report;
    const size_t n_cells = preconditioners.size() * problems.size();
    report.cells.resize(n_cells);
    auto run_cell = [&](size_t idx) {
        const size_t fi = idx / problems.size();
        const size_t pi = idx % problems.size();
        report.cells[idx] =
            evaluate_cell(problems[pi], preconditioners[fi], static_cast<int>(pi), cfg);
    };
    const int workers = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(n_cells)));
    if (workers == 1) {
        for (size_t idx = 0; idx < n_cells; ++idx) run_cell(idx);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int t = 0; t < workers; ++t)
            pool.emplace_back([&] {
                for (size_t idx = next.fetch_add(1); idx < n_cells; idx = next.fetch_add(1))
                    run_cell(idx);
            });
        for (std::thread& th : pool) th.join();
    }
    for (size_t fi = 0; fi < preconditioners.size(); ++fi) {
        EvalAggregate agg;
        agg.preconditioner = preconditioners[fi].name;
        for (size_t pi = 0; pi < problems.size(); ++pi) {
            const EvalCell& cell = report.cells[fi * problems.size() + pi];
            if (!cell.failed) {
                agg.evaluated++;
                agg.sigma_min += cell.sigma_min;
                agg.sigma_max += cell.sigma_max;
                agg.kappa += cell.kappa;
                agg.frob_PA += cell.frob_PA;
                agg.frob_PAinvI += cell.frob_PAinvI;
                agg.iterations += cell.iterations;
                agg.setup_time += cell.setup_time;
                agg.solve_time += cell.solve_time;
            }
        }
        if (agg.evaluated > 0) {
            const double inv = 1.0 / agg.evaluated;
            agg.sigma_min *= inv;
            agg.sigma_max *= inv;
            agg.kappa *= inv;
            agg.frob_PA *= inv;
            agg.frob_PAinvI *= inv;
            agg.iterations *= inv;
            agg.setup_time *= inv;
            agg.solve_time *= inv;
        }
        report.aggregates.push_back(std::move(agg));
    }
    return report;
}

Histogram log_histogram(const Vec& values, int bins) {
    Histogram h;
    if (values.empty() || bins < 1) return h;
    double lo = *std::min_element(values.begin(), values.end());
    double hi = *std::max_element(values.begin(), values.end());
    lo = std::max(lo / 2.0, 1e-300);
    hi = std::max(hi * 2.0, lo * (1.0 + 1e-12));
    const double log_lo = std::log(lo), log_hi = std::log(hi);
    h.bin_left.resize(bins);
    h.bin_right.resize(bins);
    h.count.assign(bins, 0);
    for (int b = 0; b < bins; ++b) {
        h.bin_left[b] = std::exp(log_lo + (log_hi - log_lo) * b / bins);
        h.bin_right[b] = std::exp(log_lo + (log_hi - log_lo) * (b + 1) / bins);
    }
    for (double v : values) {
        if (v <= 0.0) continue;
        int b = static_cast<int>((std::log(v) - log_lo) / (log_hi - log_lo) * bins);
        b = std::clamp(b, 0, bins - 1);
        h.count[b]++;
    }
    return h;
}

void write_report_csv(const EvalReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_report_csv: cannot open " + path);
    out << "problem,preconditioner,sigma_min,sigma_max,kappa,frob_PA,frob_PAinvI,"
           "setup_time,solve_time,iterations\n";
    out << std::setprecision(10);
    auto field = [&out](bool failed, double v) {
        if (failed)
            out << ",";  // empty field, mirrors the "-" convention
        else
            out << v << ",";
    };
    for (const EvalCell& c : report.cells) {
        out << c.problem << "," << c.preconditioner << ",";
        field(c.failed, c.sigma_min);
        field(c.failed, c.sigma_max);
        field(c.failed, c.kappa);
        field(c.failed, c.frob_PA);
        field(c.failed, c.frob_PAinvI);
        field(c.failed, c.setup_time);
        field(c.failed, c.solve_time);
        if (c.failed)
            out << "\n";
        else
            out << c.iterations << "\n";
    }
    for (const EvalAggregate& a : report.aggregates) {
        out << "mean," << a.preconditioner << ",";
        const bool failed = a.evaluated == 0;
        field(failed, a.sigma_min);
        field(failed, a.sigma_max);
        field(failed, a.kappa);
        field(failed, a.frob_PA);
        field(failed, a.frob_PAinvI);
        field(failed, a.setup_time);
        field(failed, a.solve_time);
        if (failed)
            out << "\n";
        else
            out << a.iterations << "\n";
    }
}

void write_histogram_csv(const Histogram& h, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_histogram_csv: cannot open " + path);
    out << "bin_left,bin_right,count\n" << std::setprecision(10);
    for (size_t b = 0; b < h.count.size(); ++b)
        out << h.bin_left[b] << "," << h.bin_right[b] << "," << h.count[b] << "\n";
}

void write_histogram_svg(const Histogram& h, const std::string& title, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_histogram_svg: cannot open " + path);
    const int width = 640, height = 360, margin = 40;
    long max_count = 1;
    for (long c : h.count) max_count = std::max(max_count, c);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\">\n";
    out << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title
        << "</text>\n";
    const int bins = static_cast<int>(h.count.size());
    const double bar_w = bins > 0 ? double(width - 2 * margin) / bins : 0.0;
    for (int b = 0; b < bins; ++b) {
        const double frac = double(h.count[b]) / double(max_count);
        const double bh = frac * (height - 2 * margin);
        out << "<rect x=\"" << margin + b * bar_w << "\" y=\"" << height - margin - bh
            << "\" width=\"" << bar_w * 0.9 << "\" height=\"" << bh
            << "\" fill=\"steelblue\"/>\n";
    }
    out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\""
        << width - margin << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
    out << "</svg>\n";
}

}  // namespace nilu
