// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "lit/shardsim/shard.hpp"

#include <algorithm>
#include <numeric>

namespace lit::shard {

ShardLayout ShardLayout::split(std::size_t n, std::size_t d) {
    if (d == 0 || n == 0 || n % d != 0) {
        fail(Errc::IndivisibleBatch,
             "global batch " + std::to_string(n) + " does not split evenly over " + std::to_string(d) + " devices");
    }
    return {d, n / d};
}

namespace {

template <Scalar T>
EmbeddingBatch<T> slice(const EmbeddingBatch<T>& b, std::size_t begin, std::size_t end, int rank) {
    EmbeddingBatch<T> out;
    out.rows = Tensor<T>::matrix(end - begin, b.dim());
    std::copy(b.rows.data() + begin * b.dim(), b.rows.data() + end * b.dim(), out.rows.data());
    out.item_ids.assign(b.item_ids.begin() + static_cast<std::ptrdiff_t>(begin),
                        b.item_ids.begin() + static_cast<std::ptrdiff_t>(end));
    out.normalized = b.normalized;
    out.shard = rank;
    return out;
}

template <Scalar T>
std::vector<const DeviceView<T>*> by_rank(std::span<const DeviceView<T>> views) {
    const std::size_t d = views.size();
    if (d == 0) fail(Errc::MissingRank, "no device views");
    std::vector<const DeviceView<T>*> ordered(d, nullptr);
    for (const auto& v : views) {
        if (v.rank < 0 || static_cast<std::size_t>(v.rank) >= d) {
            fail(Errc::MissingRank, "rank " + std::to_string(v.rank) + " outside [0, " + std::to_string(d) + ")");
        }
        if (ordered[static_cast<std::size_t>(v.rank)] != nullptr) {
            fail(Errc::DuplicateRank, "rank " + std::to_string(v.rank) + " appears twice");
        }
        ordered[static_cast<std::size_t>(v.rank)] = &v;
    }
    return ordered;
}

template <Scalar T>
EmbeddingBatch<T> concat(const std::vector<const EmbeddingBatch<T>*>& parts) {
    std::size_t n = 0, d = 0;
    bool normalized = true;
    for (const auto* p : parts) {
        if (p->rows.rank() != 2) fail(Errc::ShapeMismatch, "device rows must be matrices");
        if (n == 0 && d == 0) d = p->dim();
        if (p->dim() != d) fail(Errc::DimMismatch, "device embedding widths differ");
        if (p->item_ids.size() != p->size()) fail(Errc::BatchMismatch, "id count differs from row count");
        n += p->size();
        normalized = normalized && p->normalized;
    }
    EmbeddingBatch<T> out;
    out.rows = Tensor<T>::matrix(n, d);
    out.normalized = normalized;
    std::size_t at = 0;
    for (const auto* p : parts) {
        std::copy(p->rows.data(), p->rows.data() + p->rows.numel(), out.rows.data() + at * d);
        out.item_ids.insert(out.item_ids.end(), p->item_ids.begin(), p->item_ids.end());
        at += p->size();
    }
    return out;
}

template <Scalar T>
ShardedLoss<T> run(std::span<const DeviceView<T>> views, const contrastive::LossConfig<T>& cfg, bool global) {
    const auto ordered = by_rank(views);
    Tape<T> tape;
    std::vector<NodeId> u, v;
    for (const auto* view : ordered) {
        if (view->local_u.size() != view->local_v.size()) {
            fail(Errc::BatchMismatch, "device " + std::to_string(view->rank) + " holds unpaired rows");
        }
        u.push_back(tape.variable(view->local_u.rows));
        v.push_back(tape.variable(view->local_v.rows));
    }
    const NodeId lt = contrastive::temperature_node(tape, cfg);
    const auto nodes = global ? build_global<T>(tape, u, v, lt) : build_local<T>(tape, u, v, lt);
    const auto grads = tape.backward(nodes.loss);

    ShardedLoss<T> out;
    out.total.loss = tape.value(nodes.loss).item();
    out.total.i2t = tape.value(nodes.i2t).item();
    out.total.t2i = tape.value(nodes.t2i).item();
    if (const auto* g = grads.param(cfg.log_temperature)) out.total.grad_log_temperature = g->item();

    std::vector<const EmbeddingBatch<T>*> us, vs;
    for (std::size_t r = 0; r < ordered.size(); ++r) {
        us.push_back(&ordered[r]->local_u);
        vs.push_back(&ordered[r]->local_v);
        const auto* gu = grads.node(u[r]);
        const auto* gv = grads.node(v[r]);
        out.grad_u.push_back(gu ? *gu : Tensor<T>::matrix(ordered[r]->local_u.size(), ordered[r]->local_u.dim()));
        out.grad_v.push_back(gv ? *gv : Tensor<T>::matrix(ordered[r]->local_v.size(), ordered[r]->local_v.dim()));
    }
    const auto u_all = concat(us), v_all = concat(vs);
    out.total.sim = contrastive::similarity_matrix(u_all, v_all);
    out.total.grad_u = Tensor<T>::matrix(u_all.size(), u_all.dim());
    out.total.grad_v = Tensor<T>::matrix(v_all.size(), v_all.dim());
    std::size_t at = 0;
    for (std::size_t r = 0; r < ordered.size(); ++r) {
        std::copy(out.grad_u[r].data(), out.grad_u[r].data() + out.grad_u[r].numel(), out.total.grad_u.data() + at);
        std::copy(out.grad_v[r].data(), out.grad_v[r].data() + out.grad_v[r].numel(), out.total.grad_v.data() + at);
        at += out.grad_u[r].numel();
    }
    return out;
}

void check_parts(std::size_t nu, std::size_t nv) {
    if (nu != nv) fail(Errc::BatchMismatch, "u and v have different device counts");
    if (nu == 0) fail(Errc::MissingRank, "no device views");
}

}  // namespace

template <Scalar T>
std::vector<DeviceView<T>> shard_batch(const EmbeddingBatch<T>& u, const EmbeddingBatch<T>& v,
                                       const ShardLayout& layout) {
    if (u.size() != v.size()) fail(Errc::BatchMismatch, "u and v differ in size");
    if (u.item_ids.size() != u.size() || v.item_ids.size() != v.size()) {
        fail(Errc::BatchMismatch, "id count differs from row count");
    }
    if (layout.devices == 0 || u.size() != layout.global()) {
        fail(Errc::IndivisibleBatch, "batch of " + std::to_string(u.size()) + " does not match " +
                                         std::to_string(layout.devices) + " x " + std::to_string(layout.per_device));
    }
    std::vector<DeviceView<T>> views;
    for (std::size_t r = 0; r < layout.devices; ++r) {
        const std::size_t b = layout.per_device;
        const int rank = static_cast<int>(r);
        views.push_back({rank, slice(u, r * b, (r + 1) * b, rank), slice(v, r * b, (r + 1) * b, rank)});
    }
    return views;
}

template <Scalar T>
EmbeddingBatch<T> all_gather(std::span<const DeviceView<T>> views, Field field) {
    const auto ordered = by_rank(views);
    std::vector<const EmbeddingBatch<T>*> parts;
    for (const auto* view : ordered) parts.push_back(field == Field::U ? &view->local_u : &view->local_v);
    return concat(parts);
}

template <Scalar T>
ShardedLoss<T> global_loss(std::span<const DeviceView<T>> views, const contrastive::LossConfig<T>& cfg) {
    return run(views, cfg, true);
}

template <Scalar T>
ShardedLoss<T> local_loss(std::span<const DeviceView<T>> views, const contrastive::LossConfig<T>& cfg) {
    return run(views, cfg, false);
}

template <Scalar T>
contrastive::LossNodes build_global(Tape<T>& tape, std::span<const NodeId> u_parts, std::span<const NodeId> v_parts,
                                    NodeId log_temperature) {
    check_parts(u_parts.size(), v_parts.size());
    std::vector<NodeId> us, vs;
    std::vector<std::size_t> sizes;
    for (std::size_t r = 0; r < u_parts.size(); ++r) {
        const std::size_t nu = tape.value(u_parts[r]).rows();
        if (nu != tape.value(v_parts[r]).rows()) fail(Errc::BatchMismatch, "device holds unpaired rows");
        if (nu == 0) continue;
        us.push_back(u_parts[r]);
        vs.push_back(v_parts[r]);
        sizes.push_back(nu);
    }
    if (us.empty()) fail(Errc::BatchMismatch, "contrastive loss needs at least one pair");
    const std::size_t n = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    const NodeId U = us.size() == 1 ? us[0] : tape.concat_rows(us);
    const NodeId V = vs.size() == 1 ? vs[0] : tape.concat_rows(vs);
    const NodeId Ut = tape.transpose(U);
    const NodeId Vt = tape.transpose(V);

    NodeId i2t = 0, t2i = 0;
    std::size_t offset = 0;
    for (std::size_t r = 0; r < us.size(); ++r) {
        std::vector<std::size_t> targets(sizes[r]);
        std::iota(targets.begin(), targets.end(), offset);
        const T weight = static_cast<T>(static_cast<double>(sizes[r]) / static_cast<double>(n));
        const NodeId rows_i = tape.scale_by_exp(tape.matmul(us[r], Vt), log_temperature);
        const NodeId rows_t = tape.scale_by_exp(tape.matmul(vs[r], Ut), log_temperature);
        const NodeId part_i = tape.scale(tape.nll(tape.log_softmax(rows_i), targets), weight);
        const NodeId part_t = tape.scale(tape.nll(tape.log_softmax(rows_t), targets), weight);
        i2t = r == 0 ? part_i : tape.add(i2t, part_i);
        t2i = r == 0 ? part_t : tape.add(t2i, part_t);
        offset += sizes[r];
    }
    return {tape.scale(tape.add(i2t, t2i), T{0.5}), i2t, t2i};
}

template <Scalar T>
contrastive::LossNodes build_local(Tape<T>& tape, std::span<const NodeId> u_parts, std::span<const NodeId> v_parts,
                                   NodeId log_temperature) {
    check_parts(u_parts.size(), v_parts.size());
    std::vector<contrastive::LossNodes> per_device;
    for (std::size_t r = 0; r < u_parts.size(); ++r) {
        if (tape.value(u_parts[r]).rows() != tape.value(v_parts[r]).rows()) {
            fail(Errc::BatchMismatch, "device holds unpaired rows");
        }
        if (tape.value(u_parts[r]).rows() == 0) continue;
        per_device.push_back(contrastive::build_contrastive(tape, u_parts[r], v_parts[r], log_temperature));
    }
    if (per_device.empty()) fail(Errc::BatchMismatch, "contrastive loss needs at least one pair");
    const T inv = static_cast<T>(1.0 / static_cast<double>(per_device.size()));
    contrastive::LossNodes sum = per_device[0];
    for (std::size_t r = 1; r < per_device.size(); ++r) {
        sum.loss = tape.add(sum.loss, per_device[r].loss);
        sum.i2t = tape.add(sum.i2t, per_device[r].i2t);
        sum.t2i = tape.add(sum.t2i, per_device[r].t2i);
    }
    return {tape.scale(sum.loss, inv), tape.scale(sum.i2t, inv), tape.scale(sum.t2i, inv)};
}

#define LIT_INSTANTIATE_SHARD(T)                                                                                \
    template std::vector<DeviceView<T>> shard_batch(const EmbeddingBatch<T>&, const EmbeddingBatch<T>&,        \
                                                    const ShardLayout&);                                        \
    template EmbeddingBatch<T> all_gather(std::span<const DeviceView<T>>, Field);                               \
    template ShardedLoss<T> global_loss(std::span<const DeviceView<T>>, const contrastive::LossConfig<T>&);     \
    template ShardedLoss<T> local_loss(std::span<const DeviceView<T>>, const contrastive::LossConfig<T>&);      \
    template contrastive::LossNodes build_global(Tape<T>&, std::span<const NodeId>, std::span<const NodeId>,     \
                                                 NodeId);                                                       \
    template contrastive::LossNodes build_local(Tape<T>&, std::span<const NodeId>, std::span<const NodeId>, NodeId);

LIT_INSTANTIATE_SHARD(float)
LIT_INSTANTIATE_SHARD(double)

#undef LIT_INSTANTIATE_SHARD

}  // namespace lit::shard
