// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "lit/diffcore/tape.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace lit {

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ']';
    return os.str();
}

const char* op_name(Op op) noexcept {
    switch (op) {
        case Op::Constant: return "constant";
        case Op::Variable: return "variable";
        case Op::Param: return "param";
        case Op::MatMul: return "matmul";
        case Op::Transpose: return "transpose";
        case Op::Reshape: return "reshape";
        case Op::Add: return "add";
        case Op::Mul: return "mul";
        case Op::AddBias: return "add_bias";
        case Op::AddTiled: return "add_tiled";
        case Op::Scale: return "scale";
        case Op::Gelu: return "gelu";
        case Op::Tanh: return "tanh";
        case Op::LayerNorm: return "layer_norm";
        case Op::Embedding: return "embedding";
        case Op::MaskedMeanPool: return "masked_mean_pool";
        case Op::Attention: return "attention";
        case Op::Softmax: return "softmax";
        case Op::LogSoftmax: return "log_softmax";
        case Op::Log: return "log";
        case Op::ScaleByExp: return "scale_by_exp";
        case Op::L2Normalize: return "l2_normalize";
        case Op::ConcatRows: return "concat_rows";
        case Op::SliceRows: return "slice_rows";
        case Op::SelectRows: return "select_rows";
        case Op::Sum: return "sum";
        case Op::Mean: return "mean";
        case Op::Nll: return "nll";
    }
    return "?";
}

namespace {

template <Scalar T>
void require_matrix(const Tensor<T>& t, const char* what) {
    if (t.rank() != 2) fail(Errc::ShapeMismatch, std::string(what) + " expects a matrix, got " + shape_string(t.shape()));
}

// rows[0..R) += x[r] * brow, for R rows at once so brow is read once.
template <Scalar T, std::size_t R>
inline void axpy_rows(T* const* rows, const T* x, const T* brow, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
        const T bv = brow[j];
        for (std::size_t r = 0; r < R; ++r) rows[r][j] += x[r] * bv;
    }
}

// C (m x n) += A (m x k) @ B (k x n). Every element accumulates over p in
// order, whatever the row blocking.
template <Scalar T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
        T* rows[4] = {c + i * n, c + (i + 1) * n, c + (i + 2) * n, c + (i + 3) * n};
        for (std::size_t p = 0; p < k; ++p) {
            const T x[4] = {a[i * k + p], a[(i + 1) * k + p], a[(i + 2) * k + p], a[(i + 3) * k + p]};
            axpy_rows<T, 4>(rows, x, b + p * n, n);
        }
    }
    for (; i < m; ++i) {
        T* rows[1] = {c + i * n};
        for (std::size_t p = 0; p < k; ++p) {
            const T x[1] = {a[i * k + p]};
            axpy_rows<T, 1>(rows, x, b + p * n, n);
        }
    }
}

// C (m x n) += A (m x k) @ B^T, B is (n x k)
template <Scalar T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
    std::vector<T> bt(k * n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
    // Dot products start from zero before landing in C.
    std::vector<T> acc(m * n, T{0});
    gemm_nn(a, bt.data(), acc.data(), m, k, n);
    for (std::size_t e = 0; e < m * n; ++e) c[e] += acc[e];
}

// C (m x n) += A^T @ B, A is (k x m), B is (k x n)
template <Scalar T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t k, std::size_t m, std::size_t n) {
    std::vector<T> at(m * k);
    for (std::size_t p = 0; p < k; ++p)
        for (std::size_t i = 0; i < m; ++i) at[i * k + p] = a[p * m + i];
    gemm_nn(at.data(), b, c, m, k, n);
}

template <Scalar T>
constexpr T kGeluC = static_cast<T>(0.7978845608028654);  // sqrt(2/pi)
template <Scalar T>
constexpr T kGeluA = static_cast<T>(0.044715);

// tanh through a single exp; saturates cleanly for large |x|.
template <Scalar T>
T gelu_tanh(T x) {
    return T{1} - T{2} / (std::exp(T{2} * x) + T{1});
}

template <Scalar T>
void add_into(Tensor<T>& dst, const Tensor<T>& src) {
    T* d = dst.data();
    const T* s = src.data();
    for (std::size_t i = 0; i < dst.numel(); ++i) d[i] += s[i];
}

template <Scalar T>
void row_softmax(const T* x, T* y, std::size_t n) {
    T mx = -std::numeric_limits<T>::infinity();
    for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, x[j]);
    T z = T{0};
    for (std::size_t j = 0; j < n; ++j) {
        y[j] = std::exp(x[j] - mx);
        z += y[j];
    }
    for (std::size_t j = 0; j < n; ++j) y[j] /= z;
}

}  // namespace

template <Scalar T>
Tensor<T> l2_normalize(const Tensor<T>& rows) {
    require_matrix(rows, "l2_normalize");
    Tensor<T> out(rows.shape());
    for (std::size_t r = 0; r < rows.rows(); ++r) {
        auto in = rows.row(r);
        T ss = T{0};
        for (T v : in) ss += v * v;
        const T norm = std::sqrt(ss);
        if (!(norm > static_cast<T>(kEpsilonNorm))) {
            fail(Errc::ZeroNormRow, "row " + std::to_string(r) + " has norm " + std::to_string(norm));
        }
        auto o = out.row(r);
        for (std::size_t c = 0; c < in.size(); ++c) o[c] = in[c] / norm;
    }
    return out;
}

template <Scalar T>
NodeId Tape<T>::push(Node node) {
    nodes_.push_back(std::move(node));
    return nodes_.size() - 1;
}

template <Scalar T>
bool Tape<T>::any_requires_grad(std::initializer_list<NodeId> ids) const {
    for (NodeId id : ids) {
        if (nodes_.at(id).requires_grad) return true;
    }
    return false;
}

template <Scalar T>
const Tensor<T>& Tape<T>::value(NodeId id) const {
    const Node& n = nodes_.at(id);
    return n.param ? n.param->value : n.value;
}

template <Scalar T>
NodeId Tape<T>::constant(Tensor<T> value) {
    Node n;
    n.op = Op::Constant;
    n.value = std::move(value);
    return push(std::move(n));
}

template <Scalar T>
NodeId Tape<T>::variable(Tensor<T> value) {
    Node n;
    n.op = Op::Variable;
    n.value = std::move(value);
    n.requires_grad = true;
    return push(std::move(n));
}

template <Scalar T>
NodeId Tape<T>::param(const Parameter<T>& p, bool track) {
    Node n;
    n.op = Op::Param;
    n.param = &p;
    n.requires_grad = track && p.trainable;
    return push(std::move(n));
}

template <Scalar T>
NodeId Tape<T>::matmul(NodeId a, NodeId b) {
    const auto& A = value(a);
    const auto& B = value(b);
    require_matrix(A, "matmul");
    require_matrix(B, "matmul");
    if (A.cols() != B.rows()) {
        fail(Errc::ShapeMismatch, "matmul " + shape_string(A.shape()) + " @ " + shape_string(B.shape()));
    }
    Node n;
    n.op = Op::MatMul;
    n.inputs = {a, b};
    n.value = Tensor<T>::matrix(A.rows(), B.cols());
    gemm_nn(A.data(), B.data(), n.value.data(), A.rows(), A.cols(), B.cols());
    n.requires_grad = any_requires_grad({a, b});
    return push(std::move(n));
}

template <Scalar T>
NodeId Tape<T>::transpose(NodeId a) {
    const auto& A = value(a);
    require_matrix(A, "transpose");
    Node n;
    n.op = Op::Transpose;
    n.inputs = {a};
    n.value = Tensor<T>::matrix(A.cols(), A.rows());
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = 0; j < A.cols(); ++j) n.value.at(j, i) = A.at(i, j);
    n.requires_grad = any_requires_grad({a});
    return push(std::move(n));
}

template <Scalar T>
NodeId Tape<T>::reshape(NodeId a, Shape shape) {
    Node n;
    n.op = Op::Reshape;
    n.inputs = {a};
    n.value = value(a);
    n.value.reshape(std::move(shape));
    n.requires_grad = any_requires_grad({a});
    return push(std::move(n));
}

template <Scalar T>
NodeId Tape<T>::add(NodeId a, NodeId b) {
    const auto& A = value(a);
    const auto& B = value(b);
    if (A.shape() != B.shape()) {
        fail(Errc::ShapeMismatch, "add " + shape_string(A.shape()) + " + " + shape_string(B.shape()));
    }
    Node n;
    n.op = Op::Add;
    n.inputs = {a, b};
    n.value = A;
    add_into(n.value, B);
    n.requires_grad = any_requires_grad({a, b});
    return push(std::move(n));
}

template <Scalar T>
NodeId Tape<T>::mul(NodeId a, NodeId b) {
    const auto& A = value(a);
    const auto& B = value(b);
    if (A.shape() != B.shape()) {
        fail(Errc::ShapeMismatch, "mul " + shape_string(A.shape()) + " * " + shape_string(B.shape()));
    }
    Node n;
    n.op = Op::Mul;
    n.inputs = {a, b};
    n.value = A;
    for (std::size_t i = 0; i < A.numel(); ++i) n.value[i] *= B[i];
    n.requires_grad = any_requires_grad({a, b});
    return push(std::move(n));
}

template <Scalar T>
NodeId Tape<T>::add_bias(NodeId x, NodeId bias) {
    const auto& X = value(x);
    const auto& b = value(bias);
    require_matrix(X, "add_bias");
    if (b.numel() != X.cols()) {
        fail(Errc::ShapeMismatch, "bias " + shape_string(b.shape()) + " for " + shape_string(X.shape()));
    }
    Node n;
    n.op = Op::AddBias;
    n.inputs = {x, bias};
    n.value = X;
    for (std::size_t r = 0; r < X.rows(); ++r) {
        auto row = n.value.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] += b[c];
    }
    n.requires_grad = any_requires_grad({x, bias});
    return push(std::move(n));
}

template <Scalar T>
NodeId Tape<T>::add_tiled(NodeId x, NodeId pattern) {
    const auto& X = value(x);
    const auto& P = value(pattern);
    require_matrix(X, "add_tiled");
    require_matrix(P, "add_tiled");
    if (P.cols() != X.cols() || P.rows() == 0 || X.rows() % P.rows() != 0) {
        fail(Errc::ShapeMismatch, "add_tiled " + shape_string(X.shape()) + " with " + shape_string(P.shape()));
    }
    Node n;
    n.op = Op::AddTiled;
    n.inputs = {x, pattern};
    n.value = X;
    for (std::size_t r = 0; r < X.rows(); ++r) {
        auto row = n.value.row(r);
        auto prow = P.row(r % P.rows());
        for (std::size_t c = 0; c < row.size(); ++c) row[c] += prow[c];
    }
    n.requires_grad = any_requires_grad({x, pattern});
    return push(std::move(n));
}

template <Scalar T>
NodeId Tape<T>::scale(NodeId x, T factor) {
    Node n;
    n.op = Op::Scale;
    n.inputs = {x};
    n.value = value(x);
    for (auto& v : n.value.values()) v *= factor;
    n.scalar = factor;
    n.requires_grad = any_requires_grad({x});
    return push(std::move(n));
}

template <Scalar T>
NodeId Tape<T>::gelu(NodeId x) {
    const auto& X = value(x);
    Node n;
    n.op = Op::Gelu;
    n.inputs = {x};
    n.value = Tensor<T>(X.shape());
    for (std::size_t i = 0; i < X.numel(); ++i) {
        const T v = X[i];
        const T t = gelu_tanh(kGeluC<T> * (v + kGeluA<T> * v * v * v));
        n.value[i] = T{0.5} * v * (T{1} + t);
    }
    n.requires_grad = any_requires_grad({x});
    return push(std::move(n));
}

template <Scalar T>
NodeId Tape<T>::tanh(NodeId x) {
    const auto& X = value(x);
    Node n;
    n.op = Op::Tanh;
    n.inputs = {x};
    n.value = Tensor<T>(X.shape());
    for (std::size_t i = 0; i < X.numel(); ++i) n.value[i] = std::tanh(X[i]);
    n.requires_grad = any_requires_grad({x});
    return push(std::move(n));
}

template <Scalar T>
NodeId Tape<T>::layer_norm(NodeId x, NodeId gamma, NodeId beta) {
    const auto& X = value(x);
    const auto& g = value(gamma);
    const auto& b = value(beta);
    require_matrix(X, "layer_norm");
    const std::size_t d = X.cols();
    if (g.numel() != d || b.numel() != d) fail(Errc::ShapeMismatch, "layer_norm affine size");
    Node n;
    n.op = Op::LayerNorm;
    n.inputs = {x, gamma, beta};
    n.value = Tensor<T>(X.shape());
    Tensor<T> xhat(X.shape());
    Tensor<T> rstd(Shape{X.rows()});
    for (std::size_t r = 0; r < X.rows(); ++r) {
        auto in = X.row(r);
        T mu = T{0};
        for (T v : in) mu += v;
        mu /= static_cast<T>(d);
        T var = T{0};
        for (T v : in) var += (v - mu) * (v - mu);
        var /= static_cast<T>(d);
        const T rs = T{1} / std::sqrt(var + static_cast<T>(kLayerNormEps));
        rstd[r] = rs;
        auto xh = xhat.row(r);
        auto out = n.value.row(r);
        for (std::size_t c = 0; c < d; ++c) {
            xh[c] = (in[c] - mu) * rs;
            out[c] = g[c] * xh[c] + b[c];
        }
    }
    n.saved = {std::move(xhat), std::move(rstd)};
    n.requires_grad = any_requires_grad({x, gamma, beta});
    return push(std::move(n));
}

template <Scalar T>
NodeId Tape<T>::embedding(NodeId table, std::span<const std::int32_t> ids) {
    const auto& W = value(table);
    require_matrix(W, "embedding");
    Node n;
    n.op = Op::Embedding;
    n.inputs = {table};
    n.value = Tensor<T>::matrix(ids.size(), W.cols());
    n.index.reserve(ids.size());
    for (std::size_t r = 0; r < ids.size(); ++r) {
        if (ids[r] < 0 || static_cast<std::size_t>(ids[r]) >= W.rows()) {
            fail(Errc::TokenOutOfRange, "token id " + std::to_string(ids[r]) + " outside vocabulary of " +
                                            std::to_string(W.rows()));
        }
        const auto src = W.row(static_cast<std::size_t>(ids[r]));
        std::copy(src.begin(), src.end(), n.value.row(r).begin());
        n.index.push_back(static_cast<std::size_t>(ids[r]));
    }
    n.requires_grad = any_requires_grad({table});
    return push(std::move(n));
}

template <Scalar T>
NodeId Tape<T>::masked_mean_pool(NodeId x, std::span<const std::uint8_t> mask, std::size_t seq_len) {
    const auto& X = value(x);
    require_matrix(X, "masked_mean_pool");
    if (seq_len == 0 || X.rows() % seq_len != 0 || mask.size() != X.rows()) {
        fail(Errc::ShapeMismatch, "masked_mean_pool over " + shape_string(X.shape()));
    }
    const std::size_t batch = X.rows() / seq_len;
    const std::size_t d = X.cols();
    Node n;
    n.op = Op::MaskedMeanPool;
    n.inputs = {x};
    n.mask.assign(mask.begin(), mask.end());
    n.attr0 = seq_len;
    n.value = Tensor<T>::matrix(batch, d);
    for (std::size_t b = 0; b < batch; ++b) {
        std::size_t count = 0;
        auto out = n.value.row(b);
        for (std::size_t t = 0; t < seq_len; ++t) {
            if (!mask[b * seq_len + t]) continue;
            ++count;
            auto in = X.row(b * seq_len + t);
            for (std::size_t c = 0; c < d; ++c) out[c] += in[c];
        }
        if (count == 0) fail(Errc::PoolEmpty, "sequence " + std::to_string(b) + " has no unmasked positions");
        const T inv = T{1} / static_cast<T>(count);
        for (auto& v : out) v *= inv;
    }
    n.requires_grad = any_requires_grad({x});
    return push(std::move(n));
}

template <Scalar T>
NodeId Tape<T>::attention(NodeId q, NodeId k, NodeId v, std::span<const std::uint8_t> mask, std::size_t seq_len,
                          std::size_t heads) {
    const auto& Q = value(q);
    const auto& K = value(k);
    const auto& V = value(v);
    require_matrix(Q, "attention");
    if (K.shape() != Q.shape() || V.shape() != Q.shape() || seq_len == 0 || Q.rows() % seq_len != 0 ||
        mask.size() != Q.rows() || heads == 0 || Q.cols() % heads != 0) {
        fail(Errc::ShapeMismatch, "attention over " + shape_string(Q.shape()));
    }
    const std::size_t batch = Q.rows() / seq_len;
    const std::size_t width = Q.cols();
    const std::size_t dh = width / heads;
    const T inv_sqrt = T{1} / std::sqrt(static_cast<T>(dh));

    Node n;
    n.op = Op::Attention;
    n.inputs = {q, k, v};
    n.mask.assign(mask.begin(), mask.end());
    n.attr0 = seq_len;
    n.attr1 = heads;
    n.value = Tensor<T>(Q.shape());
    Tensor<T> probs(Shape{batch * heads * seq_len, seq_len});
    std::vector<T> logits(seq_len);
    for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t base = b * seq_len;
        bool any_key = false;
        for (std::size_t j = 0; j < seq_len; ++j) any_key = any_key || mask[base + j];
        if (!any_key) continue;  // output stays zero; pooling reports the empty sequence
        for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t off = h * dh;
            for (std::size_t i = 0; i < seq_len; ++i) {
                const T* qi = Q.data() + (base + i) * width + off;
                T mx = -std::numeric_limits<T>::infinity();
                for (std::size_t j = 0; j < seq_len; ++j) {
                    if (!mask[base + j]) continue;
                    const T* kj = K.data() + (base + j) * width + off;
                    T acc = T{0};
                    for (std::size_t c = 0; c < dh; ++c) acc += qi[c] * kj[c];
                    logits[j] = acc * inv_sqrt;
                    mx = std::max(mx, logits[j]);
                }
                T* p = probs.data() + ((b * heads + h) * seq_len + i) * seq_len;
                T z = T{0};
                for (std::size_t j = 0; j < seq_len; ++j) {
                    p[j] = mask[base + j] ? std::exp(logits[j] - mx) : T{0};
                    z += p[j];
                }
                T* oi = n.value.data() + (base + i) * width + off;
                for (std::size_t j = 0; j < seq_len; ++j) {
                    p[j] /= z;
                    if (p[j] == T{0}) continue;
                    const T* vj = V.data() + (base + j) * width + off;
                    for (std::size_t c = 0; c < dh; ++c) oi[c] += p[j] * vj[c];
                }
            }
        }
    }
    n.saved = {std::move(probs)};
    n.requires_grad = any_requires_grad({q, k, v});
    return push(std::move(n));
}

template <Scalar T>
NodeId Tape<T>::softmax(NodeId x) {
    const auto& X = value(x);
    require_matrix(X, "softmax");
    Node n;
    n.op = Op::Softmax;
    n.inputs = {x};
    n.value = Tensor<T>(X.shape());
    for (std::size_t r = 0; r < X.rows(); ++r) row_softmax(X.row(r).data(), n.value.row(r).data(), X.cols());
    n.requires_grad = any_requires_grad({x});
    return push(std::move(n));
}

template <Scalar T>
NodeId Tape<T>::log_softmax(NodeId x) {
    const auto& X = value(x);
    require_matrix(X, "log_softmax");
    Node n;
    n.op = Op::LogSoftmax;
    n.inputs = {x};
    n.value = Tensor<T>(X.shape());
    for (std::size_t r = 0; r < X.rows(); ++r) {
        auto in = X.row(r);
        auto out = n.value.row(r);
        T mx = -std::numeric_limits<T>::infinity();
        for (T v : in) mx = std::max(mx, v);
        double z = 0.0;
        for (T v : in) z += std::exp(v - mx);
        const T lse = static_cast<T>(mx + std::log(z));
        for (std::size_t c = 0; c < in.size(); ++c) out[c] = in[c] - lse;
    }
    n.requires_grad = any_requires_grad({x});
    return push(std::move(n));
}

template <Scalar T>
NodeId Tape<T>::log(NodeId x) {
    const auto& X = value(x);
    Node n;
    n.op = Op::Log;
    n.inputs = {x};
    n.value = Tensor<T>(X.shape());
    for (std::size_t i = 0; i < X.numel(); ++i) {
        if (!(X[i] > T{0})) fail(Errc::NonFinite, "log of non-positive value");
        n.value[i] = std::log(X[i]);
    }
    n.requires_grad = any_requires_grad({x});
    return push(std::move(n));
}

template <Scalar T>
NodeId Tape<T>::scale_by_exp(NodeId x, NodeId s) {
    const auto& X = value(x);
    const auto& S = value(s);
    if (S.numel() != 1) fail(Errc::NotScalar, "scale_by_exp expects a scalar exponent");
    const T factor = std::exp(S[0]);
    if (!std::isfinite(factor)) fail(Errc::NonFinite, "exp overflow in scale_by_exp");
    Node n;
    n.op = Op::ScaleByExp;
    n.inputs = {x, s};
    n.value = X;
    for (auto& v : n.value.values()) v *= factor;
    n.scalar = factor;
    n.requires_grad = any_requires_grad({x, s});
    return push(std::move(n));
}

template <Scalar T>
NodeId Tape<T>::l2_normalize(NodeId x) {
    const auto& X = value(x);
    Node n;
    n.op = Op::L2Normalize;
    n.inputs = {x};
    n.value = lit::l2_normalize(X);
    Tensor<T> norms(Shape{X.rows()});
    for (std::size_t r = 0; r < X.rows(); ++r) {
        T ss = T{0};
        for (T v : X.row(r)) ss += v * v;
        norms[r] = std::sqrt(ss);
    }
    n.saved = {std::move(norms)};
    n.requires_grad = any_requires_grad({x});
    return push(std::move(n));
}

template <Scalar T>
NodeId Tape<T>::concat_rows(std::span<const NodeId> parts) {
    if (parts.empty()) fail(Errc::ShapeMismatch, "concat_rows of nothing");
    std::size_t rows = 0;
    const std::size_t d = value(parts[0]).cols();
    for (NodeId p : parts) {
        const auto& P = value(p);
        require_matrix(P, "concat_rows");
        if (P.cols() != d) fail(Errc::DimMismatch, "concat_rows width mismatch");
        rows += P.rows();
    }
    Node n;
    n.op = Op::ConcatRows;
    n.inputs.assign(parts.begin(), parts.end());
    n.value = Tensor<T>::matrix(rows, d);
    std::size_t at = 0;
    for (NodeId p : parts) {
        const auto& P = value(p);
        std::copy(P.values().begin(), P.values().end(), n.value.data() + at);
        at += P.numel();
        n.requires_grad = n.requires_grad || nodes_[p].requires_grad;
    }
    return push(std::move(n));
}

template <Scalar T>
NodeId Tape<T>::slice_rows(NodeId x, std::size_t begin, std::size_t end) {
    const auto& X = value(x);
    require_matrix(X, "slice_rows");
    if (begin > end || end > X.rows()) fail(Errc::ShapeMismatch, "slice_rows out of range");
    Node n;
    n.op = Op::SliceRows;
    n.inputs = {x};
    n.attr0 = begin;
    n.value = Tensor<T>::matrix(end - begin, X.cols());
    std::copy(X.data() + begin * X.cols(), X.data() + end * X.cols(), n.value.data());
    n.requires_grad = any_requires_grad({x});
    return push(std::move(n));
}

template <Scalar T>
NodeId Tape<T>::select_rows(NodeId x, std::span<const std::size_t> rows) {
    const auto& X = value(x);
    require_matrix(X, "select_rows");
    Node n;
    n.op = Op::SelectRows;
    n.inputs = {x};
    n.index.assign(rows.begin(), rows.end());
    n.value = Tensor<T>::matrix(rows.size(), X.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] >= X.rows()) fail(Errc::ShapeMismatch, "select_rows index out of range");
        const auto src = X.row(rows[r]);
        std::copy(src.begin(), src.end(), n.value.row(r).begin());
    }
    n.requires_grad = any_requires_grad({x});
    return push(std::move(n));
}

template <Scalar T>
NodeId Tape<T>::sum(NodeId x) {
    const auto& X = value(x);
    T acc = T{0};
    for (T v : X.values()) acc += v;
    Node n;
    n.op = Op::Sum;
    n.inputs = {x};
    n.value = Tensor<T>::scalar(acc);
    n.requires_grad = any_requires_grad({x});
    return push(std::move(n));
}

template <Scalar T>
NodeId Tape<T>::mean(NodeId x) {
    const auto& X = value(x);
    if (X.numel() == 0) fail(Errc::ShapeMismatch, "mean of empty tensor");
    T acc = T{0};
    for (T v : X.values()) acc += v;
    Node n;
    n.op = Op::Mean;
    n.inputs = {x};
    n.value = Tensor<T>::scalar(acc / static_cast<T>(X.numel()));
    n.requires_grad = any_requires_grad({x});
    return push(std::move(n));
}

template <Scalar T>
NodeId Tape<T>::nll(NodeId logp, std::span<const std::size_t> targets) {
    const auto& L = value(logp);
    require_matrix(L, "nll");
    if (targets.size() != L.rows() || L.rows() == 0) fail(Errc::BatchMismatch, "nll target count");
    double acc = 0.0;
    for (std::size_t r = 0; r < L.rows(); ++r) {
        if (targets[r] >= L.cols()) fail(Errc::ShapeMismatch, "nll target out of range");
        acc += L.at(r, targets[r]);
    }
    Node n;
    n.op = Op::Nll;
    n.inputs = {logp};
    n.index.assign(targets.begin(), targets.end());
    n.value = Tensor<T>::scalar(static_cast<T>(-acc / static_cast<double>(L.rows())));
    n.requires_grad = any_requires_grad({logp});
    return push(std::move(n));
}

template <Scalar T>
Gradients<T> Tape<T>::backward(NodeId loss) const {
    if (loss >= nodes_.size()) fail(Errc::ShapeMismatch, "loss node out of range");
    const auto& L = value(loss);
    if (L.rank() != 0) fail(Errc::NotScalar, "backward from non-scalar node of shape " + shape_string(L.shape()));

    Gradients<T> out;
    out.nodes_.resize(nodes_.size());
    if (!nodes_[loss].requires_grad) return out;
    out.nodes_[loss] = Tensor<T>::scalar(T{1});

    for (NodeId id = loss + 1; id-- > 0;) {
        const Node& node = nodes_[id];
        if (!node.requires_grad || out.nodes_[id].empty()) continue;
        if (node.op == Op::Param) {
            auto [it, inserted] = out.params_.try_emplace(node.param, out.nodes_[id]);
            if (!inserted) add_into(it->second, out.nodes_[id]);
            continue;
        }
        backward_node(node, out.nodes_[id], out.nodes_);
    }
    return out;
}

template <Scalar T>
void Tape<T>::backward_node(const Node& node, const Tensor<T>& g, std::vector<Tensor<T>>& grads) const {
    // Returns the gradient slot for input i, zero-initialised on first use, or
    // nullptr when that input does not need a gradient.
    auto slot = [&](std::size_t i) -> Tensor<T>* {
        const NodeId in = node.inputs[i];
        if (!nodes_[in].requires_grad) return nullptr;
        if (grads[in].empty() && value(in).numel() != 0) grads[in] = Tensor<T>(value(in).shape());
        if (grads[in].empty()) return nullptr;
        return &grads[in];
    };

    switch (node.op) {
        case Op::Constant:
        case Op::Variable:
        case Op::Param:
            return;
        case Op::MatMul: {
            const auto& A = value(node.inputs[0]);
            const auto& B = value(node.inputs[1]);
            if (auto* ga = slot(0)) gemm_nt(g.data(), B.data(), ga->data(), A.rows(), B.cols(), A.cols());
            if (auto* gb = slot(1)) gemm_tn(A.data(), g.data(), gb->data(), A.rows(), A.cols(), B.cols());
            return;
        }
        case Op::Transpose: {
            if (auto* ga = slot(0)) {
                for (std::size_t i = 0; i < g.rows(); ++i)
                    for (std::size_t j = 0; j < g.cols(); ++j) ga->at(j, i) += g.at(i, j);
            }
            return;
        }
        case Op::Reshape:
        case Op::Add: {
            for (std::size_t i = 0; i < node.inputs.size(); ++i) {
                if (auto* gi = slot(i)) {
                    for (std::size_t e = 0; e < g.numel(); ++e) (*gi)[e] += g[e];
                }
            }
            return;
        }
        case Op::Mul: {
            const auto& A = value(node.inputs[0]);
            const auto& B = value(node.inputs[1]);
            if (auto* ga = slot(0))
                for (std::size_t e = 0; e < g.numel(); ++e) (*ga)[e] += g[e] * B[e];
            if (auto* gb = slot(1))
                for (std::size_t e = 0; e < g.numel(); ++e) (*gb)[e] += g[e] * A[e];
            return;
        }
        case Op::AddBias: {
            if (auto* gx = slot(0)) add_into(*gx, g);
            if (auto* gb = slot(1)) {
                for (std::size_t r = 0; r < g.rows(); ++r) {
                    auto row = g.row(r);
                    for (std::size_t c = 0; c < row.size(); ++c) (*gb)[c] += row[c];
                }
            }
            return;
        }
        case Op::AddTiled: {
            if (auto* gx = slot(0)) add_into(*gx, g);
            if (auto* gp = slot(1)) {
                const std::size_t p = gp->rows();
                for (std::size_t r = 0; r < g.rows(); ++r) {
                    auto row = g.row(r);
                    auto dst = gp->row(r % p);
                    for (std::size_t c = 0; c < row.size(); ++c) dst[c] += row[c];
                }
            }
            return;
        }
        case Op::Scale: {
            if (auto* gx = slot(0))
                for (std::size_t e = 0; e < g.numel(); ++e) (*gx)[e] += g[e] * node.scalar;
            return;
        }
        case Op::Gelu: {
            const auto& X = value(node.inputs[0]);
            if (auto* gx = slot(0)) {
                for (std::size_t e = 0; e < g.numel(); ++e) {
                    const T v = X[e];
                    const T t = gelu_tanh(kGeluC<T> * (v + kGeluA<T> * v * v * v));
                    const T dt = (T{1} - t * t) * kGeluC<T> * (T{1} + T{3} * kGeluA<T> * v * v);
                    (*gx)[e] += g[e] * (T{0.5} * (T{1} + t) + T{0.5} * v * dt);
                }
            }
            return;
        }
        case Op::Tanh: {
            if (auto* gx = slot(0)) {
                for (std::size_t e = 0; e < g.numel(); ++e) {
                    const T y = node.value[e];
                    (*gx)[e] += g[e] * (T{1} - y * y);
                }
            }
            return;
        }
        case Op::LayerNorm: {
            const auto& gamma = value(node.inputs[1]);
            const auto& xhat = node.saved[0];
            const auto& rstd = node.saved[1];
            const std::size_t d = g.cols();
            if (auto* gg = slot(1)) {
                for (std::size_t r = 0; r < g.rows(); ++r)
                    for (std::size_t c = 0; c < d; ++c) (*gg)[c] += g.at(r, c) * xhat.at(r, c);
            }
            if (auto* gb = slot(2)) {
                for (std::size_t r = 0; r < g.rows(); ++r)
                    for (std::size_t c = 0; c < d; ++c) (*gb)[c] += g.at(r, c);
            }
            if (auto* gx = slot(0)) {
                std::vector<T> dxhat(d);
                for (std::size_t r = 0; r < g.rows(); ++r) {
                    T mean_d = T{0};
                    T mean_dx = T{0};
                    for (std::size_t c = 0; c < d; ++c) {
                        dxhat[c] = g.at(r, c) * gamma[c];
                        mean_d += dxhat[c];
                        mean_dx += dxhat[c] * xhat.at(r, c);
                    }
                    mean_d /= static_cast<T>(d);
                    mean_dx /= static_cast<T>(d);
                    for (std::size_t c = 0; c < d; ++c) {
                        gx->at(r, c) += rstd[r] * (dxhat[c] - mean_d - xhat.at(r, c) * mean_dx);
                    }
                }
            }
            return;
        }
        case Op::Embedding: {
            if (auto* gw = slot(0)) {
                for (std::size_t r = 0; r < node.index.size(); ++r) {
                    auto src = g.row(r);
                    auto dst = gw->row(node.index[r]);
                    for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
                }
            }
            return;
        }
        case Op::MaskedMeanPool: {
            if (auto* gx = slot(0)) {
                const std::size_t L = node.attr0;
                for (std::size_t b = 0; b < g.rows(); ++b) {
                    std::size_t count = 0;
                    for (std::size_t t = 0; t < L; ++t) count += node.mask[b * L + t] ? 1 : 0;
                    const T inv = T{1} / static_cast<T>(count);
                    auto src = g.row(b);
                    for (std::size_t t = 0; t < L; ++t) {
                        if (!node.mask[b * L + t]) continue;
                        auto dst = gx->row(b * L + t);
                        for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c] * inv;
                    }
                }
            }
            return;
        }
        case Op::Attention: {
            const auto& Q = value(node.inputs[0]);
            const auto& K = value(node.inputs[1]);
            const auto& V = value(node.inputs[2]);
            const auto& probs = node.saved[0];
            Tensor<T>* gq = slot(0);
            Tensor<T>* gk = slot(1);
            Tensor<T>* gv = slot(2);
            const std::size_t L = node.attr0;
            const std::size_t heads = node.attr1;
            const std::size_t width = Q.cols();
            const std::size_t dh = width / heads;
            const std::size_t batch = Q.rows() / L;
            const T inv_sqrt = T{1} / std::sqrt(static_cast<T>(dh));
            std::vector<T> dp(L);
            for (std::size_t b = 0; b < batch; ++b) {
                const std::size_t base = b * L;
                for (std::size_t h = 0; h < heads; ++h) {
                    const std::size_t off = h * dh;
                    for (std::size_t i = 0; i < L; ++i) {
                        const T* p = probs.data() + ((b * heads + h) * L + i) * L;
                        const T* gi = g.data() + (base + i) * width + off;
                        T dot = T{0};
                        for (std::size_t j = 0; j < L; ++j) {
                            dp[j] = T{0};
                            if (p[j] == T{0}) continue;
                            const T* vj = V.data() + (base + j) * width + off;
                            for (std::size_t c = 0; c < dh; ++c) dp[j] += gi[c] * vj[c];
                            dot += p[j] * dp[j];
                            if (gv) {
                                T* gvj = gv->data() + (base + j) * width + off;
                                for (std::size_t c = 0; c < dh; ++c) gvj[c] += p[j] * gi[c];
                            }
                        }
                        const T* qi = Q.data() + (base + i) * width + off;
                        for (std::size_t j = 0; j < L; ++j) {
                            if (p[j] == T{0}) continue;
                            const T ds = p[j] * (dp[j] - dot) * inv_sqrt;
                            const T* kj = K.data() + (base + j) * width + off;
                            if (gq) {
                                T* gqi = gq->data() + (base + i) * width + off;
                                for (std::size_t c = 0; c < dh; ++c) gqi[c] += ds * kj[c];
                            }
                            if (gk) {
                                T* gkj = gk->data() + (base + j) * width + off;
                                for (std::size_t c = 0; c < dh; ++c) gkj[c] += ds * qi[c];
                            }
                        }
                    }
                }
            }
            return;
        }
        case Op::Softmax: {
            if (auto* gx = slot(0)) {
                for (std::size_t r = 0; r < g.rows(); ++r) {
                    auto y = node.value.row(r);
                    auto gr = g.row(r);
                    T dot = T{0};
                    for (std::size_t c = 0; c < y.size(); ++c) dot += gr[c] * y[c];
                    auto dst = gx->row(r);
                    for (std::size_t c = 0; c < y.size(); ++c) dst[c] += y[c] * (gr[c] - dot);
                }
            }
            return;
        }
        case Op::LogSoftmax: {
            if (auto* gx = slot(0)) {
                for (std::size_t r = 0; r < g.rows(); ++r) {
                    auto y = node.value.row(r);
                    auto gr = g.row(r);
                    T total = T{0};
                    for (T v : gr) total += v;
                    auto dst = gx->row(r);
                    for (std::size_t c = 0; c < y.size(); ++c) dst[c] += gr[c] - std::exp(y[c]) * total;
                }
            }
            return;
        }
        case Op::Log: {
            const auto& X = value(node.inputs[0]);
            if (auto* gx = slot(0))
                for (std::size_t e = 0; e < g.numel(); ++e) (*gx)[e] += g[e] / X[e];
            return;
        }
        case Op::ScaleByExp: {
            if (auto* gx = slot(0))
                for (std::size_t e = 0; e < g.numel(); ++e) (*gx)[e] += g[e] * node.scalar;
            if (auto* gs = slot(1)) {
                T acc = T{0};
                for (std::size_t e = 0; e < g.numel(); ++e) acc += g[e] * node.value[e];
                (*gs)[0] += acc;
            }
            return;
        }
        case Op::L2Normalize: {
            if (auto* gx = slot(0)) {
                const auto& norms = node.saved[0];
                for (std::size_t r = 0; r < g.rows(); ++r) {
                    auto y = node.value.row(r);
                    auto gr = g.row(r);
                    T dot = T{0};
                    for (std::size_t c = 0; c < y.size(); ++c) dot += gr[c] * y[c];
                    auto dst = gx->row(r);
                    for (std::size_t c = 0; c < y.size(); ++c) dst[c] += (gr[c] - y[c] * dot) / norms[r];
                }
            }
            return;
        }
        case Op::ConcatRows: {
            std::size_t at = 0;
            for (std::size_t i = 0; i < node.inputs.size(); ++i) {
                const std::size_t n = value(node.inputs[i]).numel();
                if (auto* gi = slot(i))
                    for (std::size_t e = 0; e < n; ++e) (*gi)[e] += g[at + e];
                at += n;
            }
            return;
        }
        case Op::SliceRows: {
            if (auto* gx = slot(0)) {
                const std::size_t off = node.attr0 * gx->cols();
                for (std::size_t e = 0; e < g.numel(); ++e) (*gx)[off + e] += g[e];
            }
            return;
        }
        case Op::SelectRows: {
            if (auto* gx = slot(0)) {
                for (std::size_t r = 0; r < node.index.size(); ++r) {
                    auto src = g.row(r);
                    auto dst = gx->row(node.index[r]);
                    for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
                }
            }
            return;
        }
        case Op::Sum: {
            if (auto* gx = slot(0))
                for (auto& v : gx->values()) v += g[0];
            return;
        }
        case Op::Mean: {
            if (auto* gx = slot(0)) {
                const T share = g[0] / static_cast<T>(gx->numel());
                for (auto& v : gx->values()) v += share;
            }
            return;
        }
        case Op::Nll: {
            if (auto* gx = slot(0)) {
                const T share = -g[0] / static_cast<T>(node.index.size());
                for (std::size_t r = 0; r < node.index.size(); ++r) gx->at(r, node.index[r]) += share;
            }
            return;
        }
    }
}

template class Tape<float>;
template class Tape<double>;
template Tensor<float> l2_normalize(const Tensor<float>&);
template Tensor<double> l2_normalize(const Tensor<double>&);

}  // namespace lit
