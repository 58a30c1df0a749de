/// @file tape.hpp
/// @brief Reverse-mode differentiation tape over the fixed primitive set the
///        factorization network needs: affine maps, rectifier, concatenation,
///        gathers/scatters, segment mean, the diagonal activations, sparse
///        matvec with differentiable values, and vector arithmetic.
///
/// Values are flat double vectors; matrices are row-major with dimensions
/// passed at the call site. A tape records one forward evaluation and replays
/// it exactly once in reverse.

#ifndef NILU_TAPE_HPP
#define NILU_TAPE_HPP

#include <functional>
#include <vector>

#include "nilu/sparse.hpp"

namespace nilu {

struct TapeVec {
    int id = -1;
};

class Tape {
public:
    // --- leaves ---
    TapeVec constant(Vec v);               // no gradient tracked into callers
    TapeVec param(const Vec& v);           // leaf with a gradient slot

    // --- primitives ---
    /// Y = X W^T + b row-wise; X is (batch x in), W is (out x in), b length out.
    TapeVec affine(TapeVec X, int batch, int in_dim, TapeVec W, TapeVec b, int out_dim);
    TapeVec relu(TapeVec X);
    /// Row-wise concatenation of equally-batched blocks with the given widths.
    TapeVec concat_cols(const std::vector<std::pair<TapeVec, int>>& parts, int batch);
    /// Rows X[idx[0]], X[idx[1]], ... of a (rows x width) matrix.
    TapeVec gather_rows(TapeVec X, int width, std::vector<int> idx);
    /// Per-segment mean of contiguous row ranges [seg_ptr[i], seg_ptr[i+1]).
    /// Empty segments produce zero rows. mean = false switches to sum.
    TapeVec segment_mean(TapeVec E, int width, std::vector<int> seg_ptr, bool mean = true);
    TapeVec gather(TapeVec v, std::vector<int> idx);
    /// out[dst[k]] = v[k], zeros elsewhere; dst indices must be distinct.
    TapeVec scatter(TapeVec v, std::vector<int> dst, int out_len);
    TapeVec add(TapeVec a, TapeVec b);
    TapeVec sub(TapeVec a, TapeVec b);
    /// Smooth invertibility activation x (1 + exp(-|4x/eps| + 2)).
    TapeVec zeta_relaxed_op(TapeVec x, double eps);
    /// Piecewise invertibility activation (training should use the relaxation;
    /// the backward here uses the a.e. derivative).
    TapeVec zeta_op(TapeVec x, double eps);
    /// y = A x with differentiable values on a fixed sparsity pattern.
    TapeVec spmv_op(TapeVec vals, std::vector<int> row_ptr, std::vector<int> col_idx, TapeVec x);
    /// Scalar ||v||_2^2 as a length-1 vector.
    TapeVec sq_norm(TapeVec v);
    /// Scalar a + alpha * b for length-1 inputs.
    TapeVec add_scaled(TapeVec a, TapeVec b, double alpha);

    /// Reverse sweep seeding d(out) = 1 for a length-1 output. A tape can be
    /// walked backward only once; a second call throws.
    void backward(TapeVec out);

    const Vec& value(TapeVec v) const { return nodes_[v.id].val; }
    const Vec& grad(TapeVec v) const { return nodes_[v.id].grad; }

private:
    struct Node {
        Vec val;
        Vec grad;
        std::function<void(Tape&)> back;  // empty for leaves
    };

    TapeVec push(Vec val, std::function<void(Tape&)> back);
    Vec& grad_mut(TapeVec v) { return nodes_[v.id].grad; }

    std::vector<Node> nodes_;
    bool consumed_ = false;
};

// scalar references for the activations (shared with inference-mode assembly)
double zeta(double x, double eps);
double zeta_relaxed(double x, double eps);

}  // namespace nilu

#endif  // NILU_TAPE_HPP
