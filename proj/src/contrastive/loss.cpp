// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "lit/contrastive/loss.hpp"

#include <numeric>

namespace lit::contrastive {

namespace {

template <Scalar T>
void check_pair(const EmbeddingBatch<T>& u, const EmbeddingBatch<T>& v) {
    if (u.rows.rank() != 2 || v.rows.rank() != 2) fail(Errc::ShapeMismatch, "embedding batches must be matrices");
    if (u.dim() != v.dim()) {
        fail(Errc::DimMismatch, "embedding widths differ: " + std::to_string(u.dim()) + " vs " + std::to_string(v.dim()));
    }
}

}  // namespace

template <Scalar T>
Tensor<T> similarity_matrix(const EmbeddingBatch<T>& u, const EmbeddingBatch<T>& v) {
    check_pair(u, v);
    Tape<T> tape;
    const NodeId s = tape.matmul(tape.constant(u.rows), tape.transpose(tape.constant(v.rows)));
    return tape.value(s);
}

template <Scalar T>
LossNodes build_contrastive(Tape<T>& tape, NodeId u, NodeId v, NodeId log_temperature) {
    const auto& U = tape.value(u);
    const auto& V = tape.value(v);
    if (U.rank() != 2 || V.rank() != 2) fail(Errc::ShapeMismatch, "embedding batches must be matrices");
    if (U.cols() != V.cols()) fail(Errc::DimMismatch, "embedding widths differ");
    if (U.rows() != V.rows()) {
        fail(Errc::BatchMismatch, "paired batches differ in size: " + std::to_string(U.rows()) + " vs " +
                                      std::to_string(V.rows()));
    }
    if (U.rows() == 0) fail(Errc::BatchMismatch, "contrastive loss needs at least one pair");
    std::vector<std::size_t> targets(U.rows());
    std::iota(targets.begin(), targets.end(), std::size_t{0});
    const NodeId logits = tape.scale_by_exp(tape.matmul(u, tape.transpose(v)), log_temperature);
    const NodeId i2t = tape.nll(tape.log_softmax(logits), targets);
    const NodeId t2i = tape.nll(tape.log_softmax(tape.transpose(logits)), targets);
    return {tape.scale(tape.add(i2t, t2i), T{0.5}), i2t, t2i};
}

template <Scalar T>
LossOutput<T> contrastive_loss(const EmbeddingBatch<T>& u, const EmbeddingBatch<T>& v, const LossConfig<T>& cfg) {
    check_pair(u, v);
    Tape<T> tape;
    const NodeId un = tape.variable(u.rows);
    const NodeId vn = tape.variable(v.rows);
    const NodeId lt = temperature_node(tape, cfg);
    const LossNodes nodes = build_contrastive(tape, un, vn, lt);

    LossOutput<T> out;
    out.loss = tape.value(nodes.loss).item();
    out.i2t = tape.value(nodes.i2t).item();
    out.t2i = tape.value(nodes.t2i).item();
    out.sim = similarity_matrix(u, v);
    const auto grads = tape.backward(nodes.loss);
    out.grad_u = *grads.node(un);
    out.grad_v = *grads.node(vn);
    if (const auto* g = grads.param(cfg.log_temperature)) out.grad_log_temperature = g->item();
    return out;
}

template Tensor<float> similarity_matrix(const EmbeddingBatch<float>&, const EmbeddingBatch<float>&);
template Tensor<double> similarity_matrix(const EmbeddingBatch<double>&, const EmbeddingBatch<double>&);
template LossNodes build_contrastive(Tape<float>&, NodeId, NodeId, NodeId);
template LossNodes build_contrastive(Tape<double>&, NodeId, NodeId, NodeId);
template LossOutput<float> contrastive_loss(const EmbeddingBatch<float>&, const EmbeddingBatch<float>&,
                                            const LossConfig<float>&);
template LossOutput<double> contrastive_loss(const EmbeddingBatch<double>&, const EmbeddingBatch<double>&,
                                             const LossConfig<double>&);

}  // namespace lit::contrastive
