/// @file model.hpp
/// @brief The message-passing factorization network: per-layer edge/node
///        update MLPs, mean aggregation over in-edges, skip connections that
///        re-append the matrix value, and assembly of the output embeddings
///        into a triangular factor pair through the invertibility activation.

#ifndef NILU_MODEL_HPP
#define NILU_MODEL_HPP

#include <string>
#include <vector>

#include "nilu/graph.hpp"
#include "nilu/precond.hpp"
#include "nilu/tape.hpp"

namespace nilu {

class TrainingDivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two-hidden-layer MLP: affine -> relu -> affine -> relu -> affine.
struct MlpParams {
    int in_dim = 0;
    int hidden = 0;
    int out_dim = 0;
    Vec W1, b1, W2, b2, W3, b3;
};

struct LayerParams {
    MlpParams edge;  // psi: (e_ij, n_i, n_j) -> e'_ij
    MlpParams node;  // phi: (n_i, m_i) -> n'_i
};

enum class Aggregation { mean, sum };
enum class ForwardMode { train, inference };

struct ModelParams {
    int layers = 3;
    double eps = 1e-4;
    Aggregation agg = Aggregation::mean;
    int edge_hidden = 32;   // edge embedding / edge MLP hidden width
    int node_hidden = 16;   // node embedding / node MLP hidden width
    std::vector<LayerParams> layer;
};

struct ModelDims {
    int layers = 3;
    int edge_hidden = 32;
    int node_hidden = 16;
};

/// Fan-in-scaled uniform initialization with a fixed seed.
ModelParams init_model(const ModelDims& dims, double eps, Aggregation agg, std::uint64_t seed);

std::size_t param_count(const ModelParams& m);

/// Parameter arrays in a fixed traversal order (layer-major, edge MLP before
/// node MLP, W1 b1 W2 b2 W3 b3). Shared by flattening, tape binding and Adam.
std::vector<const Vec*> param_arrays(const ModelParams& m);
std::vector<Vec*> param_arrays(ModelParams& m);

Vec flatten_params(const ModelParams& m);
void unflatten_params(ModelParams& m, const Vec& flat);

// --- JSON serialization (named arrays, explicit shapes, format version) ---

void save_model_json(const ModelParams& m, const std::string& path);
ModelParams load_model_json(const std::string& path);

/// Tape leaves for every parameter array, aligned with param_arrays order.
struct ParamBinding {
    std::vector<TapeVec> slots;
};
ParamBinding bind_params(Tape& tape, const ModelParams& m);

/// On-tape forward output: the fixed triangular patterns plus tape handles to
/// their value arrays (U diagonal entries are hard constants of value 1).
struct TapeForward {
    CsrMatrix L_pattern;  // values filled with the current tape values
    CsrMatrix U_pattern;
    TapeVec L_vals;
    TapeVec U_vals;
};

/// Run the L-layer network on the graph. Train mode routes the L diagonal
/// through the smooth relaxation, inference through the exact activation.
/// Throws TrainingDivergenceError (with the layer index) on non-finite
/// activations.
TapeForward forward_on_tape(Tape& tape, const ParamBinding& binding, const ModelParams& m,
                            const CoatesGraph& g, ForwardMode mode);

/// Convenience forward that materializes the factor pair.
FactorPair forward(const ModelParams& m, const CoatesGraph& g,
                   ForwardMode mode = ForwardMode::inference);

}  // namespace nilu

#endif  // NILU_MODEL_HPP
