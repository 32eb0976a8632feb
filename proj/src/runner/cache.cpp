// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "lit/runner/cache.hpp"

#include <algorithm>
#include <fstream>

#include "lit/binio.hpp"

namespace lit::runner {

namespace {

constexpr std::size_t kChunk = 512;
constexpr std::uint64_t kMaxDim = 1u << 16;
constexpr std::uint64_t kMaxEntries = 1u << 26;

void require_locked(const towers::TowerState<float>& tower) {
    if (tower.config.modality != towers::Modality::Image) fail(Errc::NotLocked, "cache needs an image tower");
    if (tower.mode != towers::LockMode::Locked) {
        fail(Errc::NotLocked, std::string("tower mode is ") + towers::lock_char(tower.mode) + ", cache needs L");
    }
    if (!tower.head.empty()) fail(Errc::NotLocked, "tower carries a trainable head");
}

}  // namespace

void EmbeddingCache::insert(std::uint64_t id, std::span<const float> row) {
    if (row.size() != dim_) fail(Errc::DimMismatch, "cache row width differs from cache dim");
    rows_[id].assign(row.begin(), row.end());
}

std::span<const float> EmbeddingCache::row(std::uint64_t id) const {
    auto it = rows_.find(id);
    if (it == rows_.end()) fail(Errc::FormatError, "cache has no entry for id " + std::to_string(id));
    return it->second;
}

TensorF EmbeddingCache::lookup(std::span<const std::uint64_t> ids) const {
    auto out = TensorF::matrix(ids.size(), dim_);
    for (std::size_t r = 0; r < ids.size(); ++r) {
        const auto src = row(ids[r]);
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

std::vector<std::uint64_t> EmbeddingCache::ids() const {
    std::vector<std::uint64_t> out;
    out.reserve(rows_.size());
    for (const auto& [id, row] : rows_) out.push_back(id);
    std::sort(out.begin(), out.end());
    return out;
}

void EmbeddingCache::check(const towers::TowerState<float>& tower) const {
    const auto d = tower.digest();
    if (d != digest_) {
        fail(Errc::DigestMismatch, "cache built for tower " + std::to_string(digest_) + ", got " + std::to_string(d));
    }
}

EmbeddingCache precompute_cache(const towers::TowerState<float>& tower, const std::vector<synth::Example>& examples) {
    require_locked(tower);
    EmbeddingCache cache(tower.digest(), tower.config.output_dim());
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < examples.size(); start += kChunk) {
        const std::size_t end = std::min(examples.size(), start + kChunk);
        idx.resize(end - start);
        for (std::size_t i = start; i < end; ++i) idx[i - start] = i;
        const auto emb = towers::encode_images(tower, synth::image_batch(examples, idx));
        for (std::size_t r = 0; r < idx.size(); ++r) cache.insert(examples[start + r].id, emb.rows.row(r));
    }
    return cache;
}

EmbeddingCache precompute_cache(const towers::TowerState<float>& tower, const synth::Corpus& corpus) {
    auto cache = precompute_cache(tower, corpus.train);
    for (const auto* split : {&corpus.eval.classification, &corpus.eval.retrieval, &corpus.eval.probe_train}) {
        const auto part = precompute_cache(tower, *split);
        for (auto id : part.ids()) cache.insert(id, part.row(id));
    }
    return cache;
}

void write_cache(std::ostream& out, const EmbeddingCache& cache) {
    out.write(kCacheMagic, 4);
    binio::put<std::uint32_t>(out, kCacheVersion);
    binio::put<std::uint64_t>(out, cache.digest());
    binio::put<std::uint64_t>(out, cache.dim());
    binio::put<std::uint64_t>(out, cache.size());
    for (auto id : cache.ids()) {
        binio::put<std::uint64_t>(out, id);
        binio::put_f32s(out, cache.row(id));
    }
    if (!out) fail(Errc::IoError, "cache write failed");
}

EmbeddingCache read_cache(std::istream& in) {
    binio::expect_magic(in, kCacheMagic, "embedding cache");
    const auto version = binio::get<std::uint32_t>(in);
    if (version != kCacheVersion) fail(Errc::FormatError, "unsupported cache version " + std::to_string(version));
    const auto digest = binio::get<std::uint64_t>(in);
    const auto dim = binio::get<std::uint64_t>(in);
    const auto count = binio::get<std::uint64_t>(in);
    if (dim == 0 || dim > kMaxDim) fail(Errc::FormatError, "implausible cache dim " + std::to_string(dim));
    if (count > kMaxEntries) fail(Errc::FormatError, "implausible cache size " + std::to_string(count));
    EmbeddingCache cache(digest, dim);
    std::vector<float> row(dim);
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto id = binio::get<std::uint64_t>(in);
        binio::get_f32s(in, row);
        if (cache.contains(id)) fail(Errc::FormatError, "duplicate cache id " + std::to_string(id));
        cache.insert(id, row);
    }
    return cache;
}

void save_cache(const std::filesystem::path& path, const EmbeddingCache& cache) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::IoError, "cannot open " + path.string() + " for writing");
    write_cache(out, cache);
}

EmbeddingCache load_cache(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::IoError, "cannot open " + path.string());
    return read_cache(in);
}

}  // namespace lit::runner
