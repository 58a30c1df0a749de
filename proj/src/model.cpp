#include "nilu/model.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

namespace nilu {

namespace {

int edge_in_dim(const ModelDims& d, int l) {
    const int node_w = l == 0 ? kNodeFeatureCount : d.node_hidden;
    const int edge_w = l == 0 ? 2 : d.edge_hidden + 1;  // +1: skip-connected a_ij
    return edge_w + 2 * node_w;
}

int edge_out_dim(const ModelDims& d, int l) { return l == d.layers - 1 ? 1 : d.edge_hidden; }

int node_in_dim(const ModelDims& d, int l) {
    return (l == 0 ? kNodeFeatureCount : d.node_hidden) + edge_out_dim(d, l);
}

MlpParams init_mlp(int in_dim, int hidden, int out_dim, std::mt19937_64& rng) {
    MlpParams p;
    p.in_dim = in_dim;
    p.hidden = hidden;
    p.out_dim = out_dim;
    auto fill = [&rng](Vec& w, int rows, int cols) {
        std::uniform_real_distribution<double> dist(-1.0 / std::sqrt(cols), 1.0 / std::sqrt(cols));
        w.resize(static_cast<size_t>(rows) * cols);
        for (double& v : w) v = dist(rng);
    };
    fill(p.W1, hidden, in_dim);
    p.b1.assign(hidden, 0.0);
    fill(p.W2, hidden, hidden);
    p.b2.assign(hidden, 0.0);
    fill(p.W3, out_dim, hidden);
    p.b3.assign(out_dim, 0.0);
    return p;
}

TapeVec mlp_on_tape(Tape& t, const MlpParams& dims, const TapeVec* slots, TapeVec X, int batch) {
    TapeVec h1 = t.relu(t.affine(X, batch, dims.in_dim, slots[0], slots[1], dims.hidden));
    TapeVec h2 = t.relu(t.affine(h1, batch, dims.hidden, slots[2], slots[3], dims.hidden));
    return t.affine(h2, batch, dims.hidden, slots[4], slots[5], dims.out_dim);
}

void check_finite(const Vec& v, int layer, const char* what) {
    for (double x : v)
        if (!std::isfinite(x))
            throw TrainingDivergenceError(std::string("non-finite ") + what +
                                          " activation at layer " + std::to_string(layer));
}

nlohmann::json mlp_to_json(const MlpParams& p) {
    return {{"in", p.in_dim},  {"hidden", p.hidden}, {"out", p.out_dim}, {"W1", p.W1},
            {"b1", p.b1},      {"W2", p.W2},         {"b2", p.b2},       {"W3", p.W3},
            {"b3", p.b3}};
}

MlpParams mlp_from_json(const nlohmann::json& j) {
    MlpParams p;
    p.in_dim = j.at("in");
    p.hidden = j.at("hidden");
    p.out_dim = j.at("out");
    p.W1 = j.at("W1").get<Vec>();
    p.b1 = j.at("b1").get<Vec>();
    p.W2 = j.at("W2").get<Vec>();
    p.b2 = j.at("b2").get<Vec>();
    p.W3 = j.at("W3").get<Vec>();
    p.b3 = j.at("b3").get<Vec>();
    if (p.W1.size() != static_cast<size_t>(p.hidden) * p.in_dim ||
        p.W2.size() != static_cast<size_t>(p.hidden) * p.hidden ||
        p.W3.size() != static_cast<size_t>(p.out_dim) * p.hidden ||
        p.b1.size() != static_cast<size_t>(p.hidden) ||
        p.b2.size() != static_cast<size_t>(p.hidden) ||
        p.b3.size() != static_cast<size_t>(p.out_dim))
        throw std::runtime_error("model json: inconsistent MLP shapes");
    return p;
}

}  // namespace

ModelParams init_model(const ModelDims& dims, double eps, Aggregation agg, std::uint64_t seed) {
    if (dims.layers < 1) throw std::invalid_argument("init_model: need at least one layer");
    std::mt19937_64 rng(seed);
    ModelParams m;
    m.layers = dims.layers;
    m.eps = eps;
    m.agg = agg;
    m.edge_hidden = dims.edge_hidden;
    m.node_hidden = dims.node_hidden;
    for (int l = 0; l < dims.layers; ++l) {
        LayerParams lp;
        lp.edge = init_mlp(edge_in_dim(dims, l), dims.edge_hidden, edge_out_dim(dims, l), rng);
        lp.node = init_mlp(node_in_dim(dims, l), dims.node_hidden, dims.node_hidden, rng);
        m.layer.push_back(std::move(lp));
    }
    return m;
}

std::vector<const Vec*> param_arrays(const ModelParams& m) {
    std::vector<const Vec*> out;
    for (const LayerParams& lp : m.layer)
        for (const MlpParams* p : {&lp.edge, &lp.node})
            for (const Vec* v : {&p->W1, &p->b1, &p->W2, &p->b2, &p->W3, &p->b3})
                out.push_back(v);
    return out;
}

std::vector<Vec*> param_arrays(ModelParams& m) {
    std::vector<Vec*> out;
    for (LayerParams& lp : m.layer)
        for (MlpParams* p : {&lp.edge, &lp.node})
            for (Vec* v : {&p->W1, &p->b1, &p->W2, &p->b2, &p->W3, &p->b3})
                out.push_back(v);
    return out;
}

std::size_t param_count(const ModelParams& m) {
    std::size_t total = 0;
    for (const Vec* v : param_arrays(m)) total += v->size();
    return total;
}

Vec flatten_params(const ModelParams& m) {
    Vec flat;
    flat.reserve(param_count(m));
    for (const Vec* v : param_arrays(m)) flat.insert(flat.end(), v->begin(), v->end());
    return flat;
}

void unflatten_params(ModelParams& m, const Vec& flat) {
    size_t off = 0;
    for (Vec* v : param_arrays(m)) {
        if (off + v->size() > flat.size())
            throw std::invalid_argument("unflatten_params: length mismatch");
        std::copy(flat.begin() + off, flat.begin() + off + v->size(), v->begin());
        off += v->size();
    }
    if (off != flat.size()) throw std::invalid_argument("unflatten_params: length mismatch");
}

void save_model_json(const ModelParams& m, const std::string& path) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["layers"] = m.layers;
    j["eps"] = m.eps;
    j["aggregation"] = m.agg == Aggregation::mean ? "mean" : "sum";
    j["edge_hidden"] = m.edge_hidden;
    j["node_hidden"] = m.node_hidden;
    j["param_count"] = param_count(m);
    nlohmann::json layers = nlohmann::json::array();
    for (const LayerParams& lp : m.layer)
        layers.push_back({{"edge", mlp_to_json(lp.edge)}, {"node", mlp_to_json(lp.node)}});
    j["layer"] = std::move(layers);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_model_json: cannot open " + path);
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("save_model_json: write failed for " + path);
}

ModelParams load_model_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_model_json: cannot open " + path);
    nlohmann::json j;
    in >> j;
    if (j.at("format_version").get<int>() != 1)
        throw std::runtime_error("load_model_json: unsupported format version");
    ModelParams m;
    m.layers = j.at("layers");
    m.eps = j.at("eps");
    m.agg = j.at("aggregation") == "mean" ? Aggregation::mean : Aggregation::sum;
    m.edge_hidden = j.at("edge_hidden");
    m.node_hidden = j.at("node_hidden");
    for (const auto& lj : j.at("layer")) {
        LayerParams lp;
        lp.edge = mlp_from_json(lj.at("edge"));
        lp.node = mlp_from_json(lj.at("node"));
        m.layer.push_back(std::move(lp));
    }
    if (static_cast<int>(m.layer.size()) != m.layers)
        throw std::runtime_error("load_model_json: layer count mismatch");
    if (j.contains("param_count") && j.at("param_count").get<std::size_t>() != param_count(m))
        throw std::runtime_error("load_model_json: parameter count mismatch");
    return m;
}

ParamBinding bind_params(Tape& tape, const ModelParams& m) {
    ParamBinding b;
    for (const Vec* v : param_arrays(m)) b.slots.push_back(tape.param(*v));
    return b;
}

TapeForward forward_on_tape(Tape& tape, const ParamBinding& binding, const ModelParams& m,
                            const CoatesGraph& g, ForwardMode mode) {
    const int n = g.n;
    const int ne = g.num_edges();
    const bool mean = m.agg == Aggregation::mean;

    TapeVec E = tape.constant(g.edge_feats);
    TapeVec N = tape.constant(g.node_feats);
    TapeVec a_col = tape.constant(g.matrix_values);  // (ne x 1) skip-connection column
    int edge_w = 2;
    int node_w = kNodeFeatureCount;

    for (int l = 0; l < m.layers; ++l) {
        const MlpParams& psi = m.layer[l].edge;
        const MlpParams& phi = m.layer[l].node;
        const TapeVec* slots = binding.slots.data() + static_cast<size_t>(l) * 12;

        TapeVec src = tape.gather_rows(N, node_w, g.edge_src);
        TapeVec dst = tape.gather_rows(N, node_w, g.edge_dst);
        TapeVec X = tape.concat_cols({{E, edge_w}, {src, node_w}, {dst, node_w}}, ne);
        if (psi.in_dim != edge_w + 2 * node_w)
            throw std::invalid_argument("forward: edge MLP width mismatch at layer " +
                                        std::to_string(l));
        TapeVec E_new = mlp_on_tape(tape, psi, slots, X, ne);
        check_finite(tape.value(E_new), l, "edge");

        TapeVec M = tape.segment_mean(E_new, psi.out_dim, g.row_ptr, mean);
        TapeVec Xn = tape.concat_cols({{N, node_w}, {M, psi.out_dim}}, n);
        if (phi.in_dim != node_w + psi.out_dim)
            throw std::invalid_argument("forward: node MLP width mismatch at layer " +
                                        std::to_string(l));
        TapeVec N_new = mlp_on_tape(tape, phi, slots + 6, Xn, n);
        check_finite(tape.value(N_new), l, "node");

        N = N_new;
        node_w = phi.out_dim;
        if (l + 1 < m.layers) {
            E = tape.concat_cols({{E_new, psi.out_dim}, {a_col, 1}}, ne);
            edge_w = psi.out_dim + 1;
        } else {
            E = E_new;
            edge_w = psi.out_dim;
        }
    }
    if (edge_w != 1) throw std::logic_error("forward: final edge embedding must be scalar");

    // Triangular split of the diagonal-completed pattern. Edges arrive in CSR
    // order, so both factors come out row-sorted.
    TapeForward out;
    out.L_pattern.n = n;
    out.U_pattern.n = n;
    out.L_pattern.row_ptr.assign(n + 1, 0);
    out.U_pattern.row_ptr.assign(n + 1, 0);
    std::vector<int> lower_edges, lower_pos, upper_edges, upper_pos, ldiag_pos, udiag_pos;
    for (int k = 0; k < ne; ++k) {
        const int i = g.edge_src[k];
        const int j = g.edge_dst[k];
        if (j < i) {
            lower_edges.push_back(k);
            lower_pos.push_back(static_cast<int>(out.L_pattern.col_idx.size()));
            out.L_pattern.col_idx.push_back(j);
        } else if (j == i) {
            ldiag_pos.push_back(static_cast<int>(out.L_pattern.col_idx.size()));
            out.L_pattern.col_idx.push_back(i);
            udiag_pos.push_back(static_cast<int>(out.U_pattern.col_idx.size()));
            out.U_pattern.col_idx.push_back(i);
        } else {
            upper_edges.push_back(k);
            upper_pos.push_back(static_cast<int>(out.U_pattern.col_idx.size()));
            out.U_pattern.col_idx.push_back(j);
        }
        out.L_pattern.row_ptr[i + 1] = static_cast<int>(out.L_pattern.col_idx.size());
        out.U_pattern.row_ptr[i + 1] = static_cast<int>(out.U_pattern.col_idx.size());
    }
    for (int i = 0; i < n; ++i) {
        out.L_pattern.row_ptr[i + 1] =
            std::max(out.L_pattern.row_ptr[i + 1], out.L_pattern.row_ptr[i]);
        out.U_pattern.row_ptr[i + 1] =
            std::max(out.U_pattern.row_ptr[i + 1], out.U_pattern.row_ptr[i]);
    }
    const int nnz_l = static_cast<int>(out.L_pattern.col_idx.size());
    const int nnz_u = static_cast<int>(out.U_pattern.col_idx.size());

    TapeVec d = tape.gather(E, g.diag_edge);
    TapeVec z = mode == ForwardMode::train ? tape.zeta_relaxed_op(d, m.eps)
                                           : tape.zeta_op(d, m.eps);
    TapeVec l_off = tape.scatter(tape.gather(E, lower_edges), lower_pos, nnz_l);
    TapeVec l_diag = tape.scatter(z, ldiag_pos, nnz_l);
    out.L_vals = tape.add(l_off, l_diag);

    Vec u_unit(nnz_u, 0.0);
    for (int pos : udiag_pos) u_unit[pos] = 1.0;
    TapeVec u_off = tape.scatter(tape.gather(E, upper_edges), upper_pos, nnz_u);
    out.U_vals = tape.add(u_off, tape.constant(std::move(u_unit)));

    out.L_pattern.values = tape.value(out.L_vals);
    out.U_pattern.values = tape.value(out.U_vals);
    return out;
}

FactorPair forward(const ModelParams& m, const CoatesGraph& g, ForwardMode mode) {
    Tape tape;
    const ParamBinding binding = bind_params(tape, m);
    TapeForward tf = forward_on_tape(tape, binding, m, g, mode);
    FactorPair F;
    F.L = std::move(tf.L_pattern);
    F.U = std::move(tf.U_pattern);
    F.epsilon = m.eps;
    return F;
}

}  // namespace nilu
