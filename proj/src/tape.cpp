#include "nilu/tape.hpp"

#include <cmath>

namespace nilu {

double zeta(double x, double eps) {
    if (std::abs(x) > eps) return x;
    return x >= 0.0 ? eps : -eps;
}

double zeta_relaxed(double x, double eps) {
    return x * (1.0 + std::exp(-std::abs(4.0 * x / eps) + 2.0));
}

TapeVec Tape::push(Vec val, std::function<void(Tape&)> back) {
    Node node;
    node.grad.assign(val.size(), 0.0);
    node.val = std::move(val);
    node.back = std::move(back);
    nodes_.push_back(std::move(node));
    return TapeVec{static_cast<int>(nodes_.size()) - 1};
}

TapeVec Tape::constant(Vec v) { return push(std::move(v), {}); }

TapeVec Tape::param(const Vec& v) { return push(v, {}); }

TapeVec Tape::affine(TapeVec X, int batch, int in_dim, TapeVec W, TapeVec b, int out_dim) {
    const Vec& x = value(X);
    const Vec& w = value(W);
    const Vec& bias = value(b);
    if (static_cast<int>(x.size()) != batch * in_dim ||
        static_cast<int>(w.size()) != out_dim * in_dim ||
        static_cast<int>(bias.size()) != out_dim)
        throw std::invalid_argument("tape affine: shape mismatch");
    Vec y(static_cast<size_t>(batch) * out_dim);
    for (int r = 0; r < batch; ++r) {
        const double* xr = x.data() + static_cast<size_t>(r) * in_dim;
        double* yr = y.data() + static_cast<size_t>(r) * out_dim;
        for (int o = 0; o < out_dim; ++o) {
            const double* wo = w.data() + static_cast<size_t>(o) * in_dim;
            double acc = bias[o];
            for (int c = 0; c < in_dim; ++c) acc += wo[c] * xr[c];
            yr[o] = acc;
        }
    }
    TapeVec out = push(std::move(y), {});
    nodes_[out.id].back = [X, W, b, out, batch, in_dim, out_dim](Tape& t) {
        const Vec& dy = t.grad(out);
        const Vec& x = t.value(X);
        const Vec& w = t.value(W);
        Vec& dx = t.grad_mut(X);
        Vec& dw = t.grad_mut(W);
        Vec& db = t.grad_mut(b);
        for (int r = 0; r < batch; ++r) {
            const double* xr = x.data() + static_cast<size_t>(r) * in_dim;
            const double* dyr = dy.data() + static_cast<size_t>(r) * out_dim;
            double* dxr = dx.data() + static_cast<size_t>(r) * in_dim;
            for (int o = 0; o < out_dim; ++o) {
                const double g = dyr[o];
                if (g == 0.0) continue;
                const double* wo = w.data() + static_cast<size_t>(o) * in_dim;
                double* dwo = dw.data() + static_cast<size_t>(o) * in_dim;
                for (int c = 0; c < in_dim; ++c) {
                    dxr[c] += g * wo[c];
                    dwo[c] += g * xr[c];
                }
                db[o] += g;
            }
        }
    };
    return out;
}

TapeVec Tape::relu(TapeVec X) {
    Vec y = value(X);
    for (double& v : y) v = v > 0.0 ? v : 0.0;
    TapeVec out = push(std::move(y), {});
    nodes_[out.id].back = [X, out](Tape& t) {
        const Vec& dy = t.grad(out);
        const Vec& x = t.value(X);
        Vec& dx = t.grad_mut(X);
        for (size_t k = 0; k < x.size(); ++k)
            if (x[k] > 0.0) dx[k] += dy[k];
    };
    return out;
}

TapeVec Tape::concat_cols(const std::vector<std::pair<TapeVec, int>>& parts, int batch) {
    int total = 0;
    for (const auto& [p, w] : parts) {
        if (static_cast<int>(value(p).size()) != batch * w)
            throw std::invalid_argument("tape concat_cols: shape mismatch");
        total += w;
    }
    Vec y(static_cast<size_t>(batch) * total);
    int off = 0;
    for (const auto& [p, w] : parts) {
        const Vec& x = value(p);
        for (int r = 0; r < batch; ++r)
            for (int c = 0; c < w; ++c)
                y[static_cast<size_t>(r) * total + off + c] = x[static_cast<size_t>(r) * w + c];
        off += w;
    }
    TapeVec out = push(std::move(y), {});
    auto parts_copy = parts;
    nodes_[out.id].back = [parts_copy, out, batch, total](Tape& t) {
        const Vec& dy = t.grad(out);
        int off = 0;
        for (const auto& [p, w] : parts_copy) {
            Vec& dx = t.grad_mut(p);
            for (int r = 0; r < batch; ++r)
                for (int c = 0; c < w; ++c)
                    dx[static_cast<size_t>(r) * w + c] += dy[static_cast<size_t>(r) * total + off + c];
            off += w;
        }
    };
    return out;
}

TapeVec Tape::gather_rows(TapeVec X, int width, std::vector<int> idx) {
    const Vec& x = value(X);
    Vec y(idx.size() * static_cast<size_t>(width));
    for (size_t r = 0; r < idx.size(); ++r)
        for (int c = 0; c < width; ++c)
            y[r * width + c] = x[static_cast<size_t>(idx[r]) * width + c];
    TapeVec out = push(std::move(y), {});
    nodes_[out.id].back = [X, out, width, idx = std::move(idx)](Tape& t) {
        const Vec& dy = t.grad(out);
        Vec& dx = t.grad_mut(X);
        for (size_t r = 0; r < idx.size(); ++r)
            for (int c = 0; c < width; ++c)
                dx[static_cast<size_t>(idx[r]) * width + c] += dy[r * width + c];
    };
    return out;
}

TapeVec Tape::segment_mean(TapeVec E, int width, std::vector<int> seg_ptr, bool mean) {
    const Vec& e = value(E);
    const int n = static_cast<int>(seg_ptr.size()) - 1;
    Vec y(static_cast<size_t>(n) * width, 0.0);
    for (int i = 0; i < n; ++i) {
        const int lo = seg_ptr[i], hi = seg_ptr[i + 1];
        if (hi == lo) continue;
        for (int r = lo; r < hi; ++r)
            for (int c = 0; c < width; ++c)
                y[static_cast<size_t>(i) * width + c] += e[static_cast<size_t>(r) * width + c];
        if (mean) {
            const double inv = 1.0 / (hi - lo);
            for (int c = 0; c < width; ++c) y[static_cast<size_t>(i) * width + c] *= inv;
        }
    }
    TapeVec out = push(std::move(y), {});
    nodes_[out.id].back = [E, out, width, mean, n, seg_ptr = std::move(seg_ptr)](Tape& t) {
        const Vec& dy = t.grad(out);
        Vec& de = t.grad_mut(E);
        for (int i = 0; i < n; ++i) {
            const int lo = seg_ptr[i], hi = seg_ptr[i + 1];
            if (hi == lo) continue;
            const double scale = mean ? 1.0 / (hi - lo) : 1.0;
            for (int r = lo; r < hi; ++r)
                for (int c = 0; c < width; ++c)
                    de[static_cast<size_t>(r) * width + c] +=
                        scale * dy[static_cast<size_t>(i) * width + c];
        }
    };
    return out;
}

TapeVec Tape::gather(TapeVec v, std::vector<int> idx) {
    const Vec& x = value(v);
    Vec y(idx.size());
    for (size_t k = 0; k < idx.size(); ++k) y[k] = x[idx[k]];
    TapeVec out = push(std::move(y), {});
    nodes_[out.id].back = [v, out, idx = std::move(idx)](Tape& t) {
        const Vec& dy = t.grad(out);
        Vec& dx = t.grad_mut(v);
        for (size_t k = 0; k < idx.size(); ++k) dx[idx[k]] += dy[k];
    };
    return out;
}

TapeVec Tape::scatter(TapeVec v, std::vector<int> dst, int out_len) {
    const Vec& x = value(v);
    if (x.size() != dst.size()) throw std::invalid_argument("tape scatter: shape mismatch");
    Vec y(out_len, 0.0);
    for (size_t k = 0; k < dst.size(); ++k) y[dst[k]] = x[k];
    TapeVec out = push(std::move(y), {});
    nodes_[out.id].back = [v, out, dst = std::move(dst)](Tape& t) {
        const Vec& dy = t.grad(out);
        Vec& dx = t.grad_mut(v);
        for (size_t k = 0; k < dst.size(); ++k) dx[k] += dy[dst[k]];
    };
    return out;
}

TapeVec Tape::add(TapeVec a, TapeVec b) {
    const Vec& xa = value(a);
    const Vec& xb = value(b);
    if (xa.size() != xb.size()) throw std::invalid_argument("tape add: shape mismatch");
    Vec y(xa.size());
    for (size_t k = 0; k < y.size(); ++k) y[k] = xa[k] + xb[k];
    TapeVec out = push(std::move(y), {});
    nodes_[out.id].back = [a, b, out](Tape& t) {
        const Vec& dy = t.grad(out);
        Vec& da = t.grad_mut(a);
        Vec& db = t.grad_mut(b);
        for (size_t k = 0; k < dy.size(); ++k) {
            da[k] += dy[k];
            db[k] += dy[k];
        }
    };
    return out;
}

TapeVec Tape::sub(TapeVec a, TapeVec b) {
    const Vec& xa = value(a);
    const Vec& xb = value(b);
    if (xa.size() != xb.size()) throw std::invalid_argument("tape sub: shape mismatch");
    Vec y(xa.size());
    for (size_t k = 0; k < y.size(); ++k) y[k] = xa[k] - xb[k];
    TapeVec out = push(std::move(y), {});
    nodes_[out.id].back = [a, b, out](Tape& t) {
        const Vec& dy = t.grad(out);
        Vec& da = t.grad_mut(a);
        Vec& db = t.grad_mut(b);
        for (size_t k = 0; k < dy.size(); ++k) {
            da[k] += dy[k];
            db[k] -= dy[k];
        }
    };
    return out;
}

TapeVec Tape::zeta_relaxed_op(TapeVec x, double eps) {
    const Vec& v = value(x);
    Vec y(v.size());
    for (size_t k = 0; k < v.size(); ++k) y[k] = zeta_relaxed(v[k], eps);
    TapeVec out = push(std::move(y), {});
    nodes_[out.id].back = [x, out, eps](Tape& t) {
        const Vec& dy = t.grad(out);
        const Vec& v = t.value(x);
        Vec& dx = t.grad_mut(x);
        for (size_t k = 0; k < v.size(); ++k) {
            const double e = std::exp(-std::abs(4.0 * v[k] / eps) + 2.0);
            // d/dx [x (1 + e)] = 1 + e - x e * 4 sign(x) / eps
            const double sign = v[k] > 0.0 ? 1.0 : (v[k] < 0.0 ? -1.0 : 0.0);
            dx[k] += dy[k] * (1.0 + e - v[k] * e * 4.0 * sign / eps);
        }
    };
    return out;
}

TapeVec Tape::zeta_op(TapeVec x, double eps) {
    const Vec& v = value(x);
    Vec y(v.size());
    for (size_t k = 0; k < v.size(); ++k) y[k] = zeta(v[k], eps);
    TapeVec out = push(std::move(y), {});
    nodes_[out.id].back = [x, out, eps](Tape& t) {
        const Vec& dy = t.grad(out);
        const Vec& v = t.value(x);
        Vec& dx = t.grad_mut(x);
        for (size_t k = 0; k < v.size(); ++k)
            if (std::abs(v[k]) > eps) dx[k] += dy[k];
    };
    return out;
}

TapeVec Tape::spmv_op(TapeVec vals, std::vector<int> row_ptr, std::vector<int> col_idx,
                      TapeVec x) {
    const Vec& a = value(vals);
    const Vec& v = value(x);
    const int n = static_cast<int>(row_ptr.size()) - 1;
    if (a.size() != col_idx.size()) throw std::invalid_argument("tape spmv: shape mismatch");
    Vec y(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) acc += a[k] * v[col_idx[k]];
        y[i] = acc;
    }
    TapeVec out = push(std::move(y), {});
    nodes_[out.id].back = [vals, x, out, n, row_ptr = std::move(row_ptr),
                           col_idx = std::move(col_idx)](Tape& t) {
        const Vec& dy = t.grad(out);
        const Vec& a = t.value(vals);
        const Vec& v = t.value(x);
        Vec& da = t.grad_mut(vals);
        Vec& dx = t.grad_mut(x);
        for (int i = 0; i < n; ++i) {
            const double g = dy[i];
            if (g == 0.0) continue;
            for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
                da[k] += g * v[col_idx[k]];
                dx[col_idx[k]] += g * a[k];
            }
        }
    };
    return out;
}

TapeVec Tape::sq_norm(TapeVec v) {
    const Vec& x = value(v);
    double s = 0.0;
    for (double xv : x) s += xv * xv;
    TapeVec out = push(Vec{s}, {});
    nodes_[out.id].back = [v, out](Tape& t) {
        const double g = t.grad(out)[0];
        const Vec& x = t.value(v);
        Vec& dx = t.grad_mut(v);
        for (size_t k = 0; k < x.size(); ++k) dx[k] += 2.0 * g * x[k];
    };
    return out;
}

TapeVec Tape::add_scaled(TapeVec a, TapeVec b, double alpha) {
    if (value(a).size() != 1 || value(b).size() != 1)
        throw std::invalid_argument("tape add_scaled: scalar inputs expected");
    TapeVec out = push(Vec{value(a)[0] + alpha * value(b)[0]}, {});
    nodes_[out.id].back = [a, b, out, alpha](Tape& t) {
        const double g = t.grad(out)[0];
        t.grad_mut(a)[0] += g;
        t.grad_mut(b)[0] += alpha * g;
    };
    return out;
}

void Tape::backward(TapeVec out) {
    if (consumed_) throw std::logic_error("tape backward: tape already consumed");
    if (value(out).size() != 1)
        throw std::invalid_argument("tape backward: output must be scalar");
    consumed_ = true;
    grad_mut(out)[0] = 1.0;
    for (int id = out.id; id >= 0; --id)
        if (nodes_[id].back) nodes_[id].back(*this);
}

}  // namespace nilu
