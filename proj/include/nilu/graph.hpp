/// @file graph.hpp
/// @brief Deterministic encoding of a sparse matrix into the Coates graph fed
///        to the message-passing network: self-loop completion, 2-feature
///        edges with a triangular positional code, and 8 structural node
///        features standardized per graph.

#ifndef NILU_GRAPH_HPP
#define NILU_GRAPH_HPP

#include <vector>

#include "nilu/sparse.hpp"

namespace nilu {

inline constexpr int kNodeFeatureCount = 8;

/// Directed graph over the stored entries of add_missing_diagonal(A).
/// Edge k corresponds to matrix entry (src[k], dst[k]) in CSR order, so edges
/// of row i are contiguous; those are exactly the in-edges aggregated at node i.
struct CoatesGraph {
    int n = 0;
    std::vector<int> edge_src;        // row index per edge
    std::vector<int> edge_dst;        // column index per edge
    std::vector<int> row_ptr;         // in-edge ranges: edges of node i are [row_ptr[i], row_ptr[i+1])
    Vec edge_feats;                   // per edge: [a_ij, pos_ij], row-major width 2
    Vec node_feats;                   // per node: 8 standardized features, row-major
    std::vector<int> diag_edge;       // per node, index of its self-loop edge
    Vec matrix_values;                // a_ij per edge (diagonal completed), for skip connections

    int num_edges() const { return static_cast<int>(edge_src.size()); }
};

/// Raw (pre-standardization) structural node features, one pass over the
/// diagonal-completed matrix:
///   row nnz, col nnz, row 1-norm, col 1-norm, diagonal value,
///   diagonal dominance |a_ii| / row 1-norm (0 when the row is empty),
///   row max |a_ij|, col max |a_ij|.
DenseMatrix node_features_raw(const CsrMatrix& A);

/// Standardize each feature column to mean 0 / variance 1 over the graph;
/// zero-variance columns are set to 0.
void standardize_columns(DenseMatrix& F);

/// Build the graph of add_missing_diagonal(A): one edge per stored entry,
/// edge features [value, positional code in {-1, 0, +1}], standardized node
/// features. Pure function of A.
CoatesGraph coates_graph(const CsrMatrix& A);

}  // namespace nilu

#endif  // NILU_GRAPH_HPP
