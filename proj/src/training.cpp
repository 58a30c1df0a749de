#include "nilu/training.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace nilu {

namespace {

// P v = L (U v) with factor values living on the tape.
TapeVec apply_p_on_tape(Tape& t, const TapeForward& F, TapeVec v) {
    TapeVec uv = t.spmv_op(F.U_vals, F.U_pattern.row_ptr, F.U_pattern.col_idx, v);
    return t.spmv_op(F.L_vals, F.L_pattern.row_ptr, F.L_pattern.col_idx, uv);
}

Vec gaussian_vector(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Vec w(n);
    for (double& x : w) x = dist(rng);
    return w;
}

}  // namespace

TapeVec loss_max_on_tape(Tape& t, const TapeForward& F, const CsrMatrix& A, const Vec& w) {
    TapeVec aw = t.constant(spmv(A, w));
    TapeVec pw = apply_p_on_tape(t, F, t.constant(w));
    return t.sq_norm(t.sub(aw, pw));
}

TapeVec loss_min_on_tape(Tape& t, const TapeForward& F, const Vec& z, const Vec& w) {
    TapeVec pz = apply_p_on_tape(t, F, t.constant(z));
    return t.sq_norm(t.sub(pz, t.constant(w)));
}

TapeVec loss_min_hat_on_tape(Tape& t, const TapeForward& F, const TrainSample& sample) {
    if (!sample.has_solution)
        throw std::invalid_argument("loss_min_hat: sample carries no solution vector");
    return loss_min_on_tape(t, F, sample.x, sample.b);
}

TapeVec loss_combined_on_tape(Tape& t, const TapeForward& F, const CsrMatrix& A, const Vec& w,
                              const Vec& x, double alpha) {
    TapeVec term_max = loss_max_on_tape(t, F, A, w);
    TapeVec px = apply_p_on_tape(t, F, t.constant(x));
    return t.add_scaled(term_max, t.sq_norm(px), alpha);
}

double hutchinson_estimate(const std::function<Vec(const Vec&)>& apply, int n, int samples,
                           std::mt19937_64& rng) {
    if (samples < 1) throw std::invalid_argument("hutchinson_estimate: samples must be >= 1");
    double mean = 0.0;
    for (int s = 0; s < samples; ++s) {
        const Vec w = gaussian_vector(n, rng);
        const Vec mw = apply(w);
        mean += dot(mw, mw);
    }
    return mean / samples;
}

void adam_step(Vec& params, const Vec& grads, AdamState& state, double lr) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps_adam = 1e-8;
    if (state.m.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw std::invalid_argument("adam_step: size mismatch");
    state.step++;
    const double bc1 = 1.0 - std::pow(beta1, state.step);
    const double bc2 = 1.0 - std::pow(beta2, state.step);
    for (size_t k = 0; k < params.size(); ++k) {
        state.m[k] = beta1 * state.m[k] + (1.0 - beta1) * grads[k];
        state.v[k] = beta2 * state.v[k] + (1.0 - beta2) * grads[k] * grads[k];
        const double mhat = state.m[k] / bc1;
        const double vhat = state.v[k] / bc2;
        params[k] -= lr * mhat / (std::sqrt(vhat) + eps_adam);
    }
}

void clip_gradients(Vec& grads, double max_norm) {
    if (max_norm <= 0.0) throw std::invalid_argument("clip_gradients: max_norm must be positive");
    const double g = norm2(grads);
    if (g > max_norm) {
        const double scale = max_norm / g;
        for (double& x : grads) x *= scale;
    }
}

namespace {

// z = A^{-1} w for loss_min, solved with the ILU(0)-preconditioned solver.
Vec inner_solve(const CsrMatrix& A, const Vec& w, double tol) {
    FactoredPreconditioner P(ilu0(A), "ilu0");
    GmresOptions opts;
    opts.tol = tol;
    SolveResult r = gmres(A, P, w, Vec(A.n, 0.0), opts);
    if (!r.converged)
        throw TrainingDivergenceError("inner A^{-1}w solve did not converge");
    return r.x;
}

double validation_iterations(const ModelParams& model, const std::vector<TrainSample>& val_set,
                             const std::vector<CoatesGraph>& val_graphs, double tol) {
    if (val_set.empty()) return 0.0;
    double total = 0.0;
    for (size_t i = 0; i < val_set.size(); ++i) {
        FactorPair F = forward(model, val_graphs[i], ForwardMode::inference);
        FactoredPreconditioner P(std::move(F), "learned");
        GmresOptions opts;
        opts.tol = tol;
        const SolveResult r =
            gmres(val_set[i].A, P, val_set[i].b, Vec(val_set[i].A.n, 0.0), opts);
        total += r.iterations;
    }
    return total / static_cast<double>(val_set.size());
}

}  // namespace

TrainResult train(const ModelParams& initial, const std::vector<TrainSample>& train_set,
                  const std::vector<TrainSample>& val_set, const TrainConfig& cfg) {
    if (train_set.empty()) throw std::invalid_argument("train: empty training set");

    TrainResult result;
    result.best = initial;
    if (cfg.epochs == 0) return result;

    // Per-sample caches: graph encodings and seeded Gaussian streams.
    std::vector<CoatesGraph> graphs;
    graphs.reserve(train_set.size());
    std::vector<std::mt19937_64> streams;
    for (const TrainSample& s : train_set) {
        graphs.push_back(coates_graph(s.A));
        streams.emplace_back(s.seed ^ 0x9e3779b97f4a7c15ULL);
    }
    std::vector<CoatesGraph> val_graphs;
    for (const TrainSample& s : val_set) val_graphs.push_back(coates_graph(s.A));

    ModelParams model = initial;
    model.eps = cfg.eps;
    Vec theta = flatten_params(model);
    AdamState adam;
    double best_metric = std::numeric_limits<double>::infinity();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double loss_sum = 0.0;
        for (size_t i = 0; i < train_set.size(); ++i) {
            const TrainSample& sample = train_set[i];
            unflatten_params(model, theta);

            Tape tape;
            const ParamBinding binding = bind_params(tape, model);
            const TapeForward F = forward_on_tape(tape, binding, model, graphs[i],
                                                  ForwardMode::train);
            TapeVec loss;
            switch (cfg.loss) {
                case LossKind::max: {
                    const Vec w = gaussian_vector(sample.A.n, streams[i]);
                    loss = loss_max_on_tape(tape, F, sample.A, w);
                    break;
                }
                case LossKind::min: {
                    const Vec w = gaussian_vector(sample.A.n, streams[i]);
                    Vec z;
                    try {
                        z = inner_solve(sample.A, w, cfg.inner_tol);
                    } catch (const TrainingDivergenceError&) {
                        throw TrainingDivergenceError(
                            "loss_min inner solve failed on training sample " +
                            std::to_string(i));
                    }
                    loss = loss_min_on_tape(tape, F, z, w);
                    break;
                }
                case LossKind::min_hat:
                    loss = loss_min_hat_on_tape(tape, F, sample);
                    break;
                case LossKind::combined: {
                    if (!sample.has_solution)
                        throw std::invalid_argument(
                            "combined loss: sample carries no solution vector");
                    const Vec w = gaussian_vector(sample.A.n, streams[i]);
                    loss = loss_combined_on_tape(tape, F, sample.A, w, sample.x, cfg.alpha);
                    break;
                }
            }
            const double loss_value = tape.value(loss)[0];
            if (!std::isfinite(loss_value))
                throw TrainingDivergenceError("non-finite loss at epoch " +
                                              std::to_string(epoch) + ", sample " +
                                              std::to_string(i));
            loss_sum += loss_value;

            tape.backward(loss);
            Vec grads;
            grads.reserve(theta.size());
            for (const TapeVec slot : binding.slots) {
                const Vec& g = tape.grad(slot);
                grads.insert(grads.end(), g.begin(), g.end());
            }
            clip_gradients(grads, cfg.clip);
            adam_step(theta, grads, adam, cfg.lr);
        }

        unflatten_params(model, theta);
        const double val_metric =
            validation_iterations(model, val_set, val_graphs, cfg.val_tol);
        result.history.push_back(
            {epoch, loss_sum / static_cast<double>(train_set.size()), val_metric});
        if (val_metric < best_metric) {
            best_metric = val_metric;
            result.best = model;
            result.best_epoch = epoch;
        }
    }
    return result;
}

void write_history_csv(const std::vector<EpochRecord>& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_history_csv: cannot open " + path);
    out << "epoch,mean_train_loss,val_iterations\n" << std::setprecision(17);
    for (const EpochRecord& r : history)
        out << r.epoch << "," << r.mean_train_loss << "," << r.val_iterations << "\n";
}

}  // namespace nilu
