/// @file training.hpp
/// @brief Loss functions with Hutchinson estimation, the empirical-risk
///        training loop (Adam + global-norm gradient clipping), and
///        validation-based model selection.

#ifndef NILU_TRAINING_HPP
#define NILU_TRAINING_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>

#include "nilu/krylov.hpp"
#include "nilu/model.hpp"

namespace nilu {

/// One problem instance. x/b form a supervised tuple with A x = b when
/// has_solution is set; test instances carry only the deterministic b.
struct TrainSample {
    CsrMatrix A;
    Vec x;
    Vec b;
    std::uint64_t seed = 0;
    bool has_solution = false;
};

enum class LossKind { max, min, min_hat, combined };

struct TrainConfig {
    LossKind loss = LossKind::max;
    double alpha = 0.2;  // combined-loss weight
    double lr = 0.001;
    int epochs = 100;
    int batch = 1;
    double clip = 1.0;
    double eps = 1e-4;
    std::uint64_t seed = 0;
    int hutchinson_samples = 1;
    double val_tol = 1e-8;        // GMRES tolerance of the validation metric
    double inner_tol = 1e-10;     // tolerance of the A^{-1} w solves for loss_min
};

// --- losses, evaluated on the tape so gradients flow into the factors ---

/// ||A w - P w||^2 with P w = L (U w) as two sparse matvecs.
TapeVec loss_max_on_tape(Tape& t, const TapeForward& F, const CsrMatrix& A, const Vec& w);

/// ||P z - w||^2 where z = A^{-1} w is a tape constant (no gradient through
/// the solve).
TapeVec loss_min_on_tape(Tape& t, const TapeForward& F, const Vec& z, const Vec& w);

/// ||P x - b||^2 on a supervised tuple; throws std::invalid_argument when the
/// sample has no solution vector.
TapeVec loss_min_hat_on_tape(Tape& t, const TapeForward& F, const TrainSample& sample);

/// ||A w - P w||^2 + alpha ||P x||^2 (supervised second term).
TapeVec loss_combined_on_tape(Tape& t, const TapeForward& F, const CsrMatrix& A, const Vec& w,
                              const Vec& x, double alpha);

/// Mean over `samples` draws of ||M w||^2 with w standard normal; unbiased
/// for ||M||_F^2.
double hutchinson_estimate(const std::function<Vec(const Vec&)>& apply, int n, int samples,
                           std::mt19937_64& rng);

// --- optimizer ---

struct AdamState {
    Vec m, v;
    long step = 0;
};

/// Standard bias-corrected Adam, beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
void adam_step(Vec& params, const Vec& grads, AdamState& state, double lr);

/// Scale gradients to global 2-norm max_norm when they exceed it.
void clip_gradients(Vec& grads, double max_norm);

// --- training loop ---

struct EpochRecord {
    int epoch = 0;
    double mean_train_loss = 0.0;
    double val_iterations = 0.0;
};

struct TrainResult {
    ModelParams best;
    int best_epoch = -1;  // -1 when no epoch ran
    std::vector<EpochRecord> history;
};

/// One Adam step per training sample per epoch (batch 1), w redrawn per step
/// from the sample's seeded stream; validation metric is mean GMRES iterations
/// with the current learned preconditioner. Best validation metric wins,
/// earliest epoch on ties. Non-finite losses abort with sample diagnostics.
TrainResult train(const ModelParams& initial, const std::vector<TrainSample>& train_set,
                  const std::vector<TrainSample>& val_set, const TrainConfig& cfg);

void write_history_csv(const std::vector<EpochRecord>& history, const std::string& path);

}  // namespace nilu

#endif  // NILU_TRAINING_HPP
