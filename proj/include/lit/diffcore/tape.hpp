// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "lit/diffcore/parameter.hpp"
#include "lit/diffcore/tensor.hpp"

namespace lit {

using NodeId = std::size_t;

enum class Op : std::uint8_t {
    Constant,
    Variable,
    Param,
    MatMul,
    Transpose,
    Reshape,
    Add,
    Mul,
    AddBias,
    AddTiled,
    Scale,
    Gelu,
    Tanh,
    LayerNorm,
    Embedding,
    MaskedMeanPool,
    Attention,
    Softmax,
    LogSoftmax,
    Log,
    ScaleByExp,
    L2Normalize,
    ConcatRows,
    SliceRows,
    SelectRows,
    Sum,
    Mean,
    Nll,
};

const char* op_name(Op op) noexcept;

/// Row norms at or below this value are rejected by l2_normalize.
inline constexpr double kEpsilonNorm = 1e-12;
inline constexpr double kLayerNormEps = 1e-5;

template <Scalar T>
class Tape;

/// Result of a backward pass: adjoints for every node that requires a
/// gradient, plus the per-parameter sums over all leaves that reference the
/// same Parameter.
template <Scalar T>
class Gradients {
   public:
    /// nullptr when the node was not reached or does not require a gradient.
    const Tensor<T>* node(NodeId id) const noexcept {
        return id < nodes_.size() && !nodes_[id].empty() ? &nodes_[id] : nullptr;
    }
    const Tensor<T>* param(const Parameter<T>& p) const noexcept {
        auto it = params_.find(&p);
        return it == params_.end() ? nullptr : &it->second;
    }
    const std::unordered_map<const Parameter<T>*, Tensor<T>>& params() const noexcept { return params_; }

   private:
    friend class Tape<T>;
    std::vector<Tensor<T>> nodes_;
    std::unordered_map<const Parameter<T>*, Tensor<T>> params_;
};

/// Reverse-mode differentiation record. Nodes are appended in evaluation
/// order, so the node vector is always a valid topological order. Parameter
/// leaves reference the caller's Parameter, which must outlive the tape.
template <Scalar T>
class Tape {
   public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;
    Tape(Tape&&) noexcept = default;
    Tape& operator=(Tape&&) noexcept = default;

    NodeId constant(Tensor<T> value);
    NodeId variable(Tensor<T> value);
    // Leaf for a parameter; it requires a gradient only when the parameter is
    // trainable and `track` is set. Inference passes track = false.
    NodeId param(const Parameter<T>& p, bool track = true);

    const Tensor<T>& value(NodeId id) const;
    bool requires_grad(NodeId id) const { return nodes_.at(id).requires_grad; }
    Op op(NodeId id) const { return nodes_.at(id).op; }
    std::span<const NodeId> inputs(NodeId id) const { return nodes_.at(id).inputs; }
    std::size_t size() const noexcept { return nodes_.size(); }

    // a (m x k) @ b (k x n)
    NodeId matmul(NodeId a, NodeId b);
    NodeId transpose(NodeId a);
    NodeId reshape(NodeId a, Shape shape);
    NodeId add(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    // x (m x n) + bias (n)
    NodeId add_bias(NodeId x, NodeId bias);
    // Row r of x gets row (r mod p) of pattern added; used for positional tables.
    NodeId add_tiled(NodeId x, NodeId pattern);
    NodeId scale(NodeId x, T factor);
    NodeId gelu(NodeId x);
    NodeId tanh(NodeId x);
    NodeId layer_norm(NodeId x, NodeId gamma, NodeId beta);
    NodeId embedding(NodeId table, std::span<const std::int32_t> ids);
    // x is (batch*seq_len) x d; mask has batch*seq_len entries, nonzero = keep.
    NodeId masked_mean_pool(NodeId x, std::span<const std::uint8_t> mask, std::size_t seq_len);
    // Multi-head self-attention over fixed-length sequences with key padding.
    NodeId attention(NodeId q, NodeId k, NodeId v, std::span<const std::uint8_t> mask, std::size_t seq_len,
                     std::size_t heads);
    NodeId softmax(NodeId x);
    NodeId log_softmax(NodeId x);
    NodeId log(NodeId x);
    // x * exp(s) for a scalar node s.
    NodeId scale_by_exp(NodeId x, NodeId s);
    NodeId l2_normalize(NodeId x);
    NodeId concat_rows(std::span<const NodeId> parts);
    NodeId slice_rows(NodeId x, std::size_t begin, std::size_t end);
    NodeId select_rows(NodeId x, std::span<const std::size_t> rows);
    NodeId sum(NodeId x);
    NodeId mean(NodeId x);
    // -mean_i logp[i, targets[i]]
    NodeId nll(NodeId logp, std::span<const std::size_t> targets);

    Gradients<T> backward(NodeId loss) const;

   private:
    struct Node {
        Op op = Op::Constant;
        std::vector<NodeId> inputs;
        Tensor<T> value;
        std::vector<Tensor<T>> saved;
        std::vector<std::size_t> index;
        std::vector<std::uint8_t> mask;
        std::size_t attr0 = 0;
        std::size_t attr1 = 0;
        T scalar = T{0};
        const Parameter<T>* param = nullptr;
        bool requires_grad = false;
    };

    NodeId push(Node node);
    bool any_requires_grad(std::initializer_list<NodeId> ids) const;
    void backward_node(const Node& node, const Tensor<T>& grad, std::vector<Tensor<T>>& grads) const;

    std::vector<Node> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

/// Forward-only row normalization with the same numerics as Tape::l2_normalize.
template <Scalar T>
Tensor<T> l2_normalize(const Tensor<T>& rows);

}  // namespace lit
