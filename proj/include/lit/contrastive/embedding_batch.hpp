// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "lit/diffcore/tensor.hpp"

namespace lit {

/// N x d tower output with the ids of the items that produced each row.
/// `shard` records the simulated device rank the rows came from (-1 when
/// the batch was not produced by a sharded step).
template <Scalar T>
struct EmbeddingBatch {
    Tensor<T> rows;
    std::vector<std::uint64_t> item_ids;
    bool normalized = false;
    int shard = -1;

    std::size_t size() const noexcept { return rows.rank() == 2 ? rows.rows() : 0; }
    std::size_t dim() const noexcept { return rows.rank() == 2 ? rows.cols() : 0; }
};

/// Sequential ids 0..n-1, convenient for positional pairings in tests.
inline std::vector<std::uint64_t> iota_ids(std::size_t n) {
    std::vector<std::uint64_t> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = i;
    return ids;
}

}  // namespace lit
