// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <unordered_map>
#include <vector>

#include "lit/synthdata/corpus.hpp"
#include "lit/towers/tower.hpp"

namespace lit::runner {

inline constexpr char kCacheMagic[4] = {'L', 'I', 'T', 'C'};
inline constexpr std::uint32_t kCacheVersion = 1;

/// Image embeddings of a locked tower keyed by example id. Rows live in
/// host storage, outside the tensor allocator.
class EmbeddingCache {
   public:
    EmbeddingCache() = default;
    EmbeddingCache(std::uint64_t digest, std::size_t dim) : digest_(digest), dim_(dim) {}

    std::uint64_t digest() const noexcept { return digest_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return rows_.size(); }

    void insert(std::uint64_t id, std::span<const float> row);
    bool contains(std::uint64_t id) const { return rows_.count(id) != 0; }
    /// FormatError for an unknown id.
    std::span<const float> row(std::uint64_t id) const;
    /// Rows for `ids`, in order.
    TensorF lookup(std::span<const std::uint64_t> ids) const;
    std::vector<std::uint64_t> ids() const;  // ascending

    /// DigestMismatch unless `tower` is the exact tower the cache was built with.
    void check(const towers::TowerState<float>& tower) const;

   private:
    std::uint64_t digest_ = 0;
    std::size_t dim_ = 0;
    std::unordered_map<std::uint64_t, std::vector<float>> rows_;
};

/// One embedding per train and eval example. NotLocked unless the tower is
/// mode L without a trainable head.
EmbeddingCache precompute_cache(const towers::TowerState<float>& tower, const synth::Corpus& corpus);
EmbeddingCache precompute_cache(const towers::TowerState<float>& tower, const std::vector<synth::Example>& examples);

void write_cache(std::ostream& out, const EmbeddingCache& cache);
EmbeddingCache read_cache(std::istream& in);
void save_cache(const std::filesystem::path& path, const EmbeddingCache& cache);
EmbeddingCache load_cache(const std::filesystem::path& path);

}  // namespace lit::runner
