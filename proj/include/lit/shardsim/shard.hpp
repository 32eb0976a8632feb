// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lit/contrastive/loss.hpp"

namespace lit::shard {

struct ShardLayout {
    std::size_t devices = 1;
    std::size_t per_device = 1;

    std::size_t global() const noexcept { return devices * per_device; }
    /// Layout for a global batch of n split over d devices; IndivisibleBatch
    /// unless d divides n.
    static ShardLayout split(std::size_t n, std::size_t d);
};

template <Scalar T>
struct DeviceView {
    int rank = 0;
    EmbeddingBatch<T> local_u;
    EmbeddingBatch<T> local_v;
};

enum class Field { U, V };

/// Contiguous rank-ordered partition: view r holds rows [r*b, (r+1)*b).
template <Scalar T>
std::vector<DeviceView<T>> shard_batch(const EmbeddingBatch<T>& u, const EmbeddingBatch<T>& v, const ShardLayout& layout);

/// Rank-ordered concatenation of one field. Views may arrive in any order
/// but must cover ranks 0..D-1 exactly once (D = views.size()).
template <Scalar T>
EmbeddingBatch<T> all_gather(std::span<const DeviceView<T>> views, Field field);

/// Loss plus gradients routed back to each device's local rows.
template <Scalar T>
struct ShardedLoss {
    contrastive::LossOutput<T> total;  // grad_u / grad_v over the gathered batch
    std::vector<Tensor<T>> grad_u;     // indexed by rank
    std::vector<Tensor<T>> grad_v;
};

/// Each device scores its local rows against all gathered columns, in both
/// directions; contributions are weighted by local rows over N and summed.
template <Scalar T>
ShardedLoss<T> global_loss(std::span<const DeviceView<T>> views, const contrastive::LossConfig<T>& cfg);

/// Mean over devices of each device's own b x b symmetric loss.
template <Scalar T>
ShardedLoss<T> local_loss(std::span<const DeviceView<T>> views, const contrastive::LossConfig<T>& cfg);

// Graph builders over per-rank embedding nodes (already in rank order).
// Ranks with zero rows are skipped. Views may differ in size.
template <Scalar T>
contrastive::LossNodes build_global(Tape<T>& tape, std::span<const NodeId> u_parts, std::span<const NodeId> v_parts,
                                    NodeId log_temperature);
template <Scalar T>
contrastive::LossNodes build_local(Tape<T>& tape, std::span<const NodeId> u_parts, std::span<const NodeId> v_parts,
                                   NodeId log_temperature);

}  // namespace lit::shard
