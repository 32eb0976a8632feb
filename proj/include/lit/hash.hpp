// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string_view>

namespace lit {

// 64-bit FNV-1a. Used for content hashes, config digests and tower digests.
class Fnv1a {
   public:
    static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
    static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

    void update(const void* bytes, std::size_t n) noexcept {
        const auto* p = static_cast<const unsigned char*>(bytes);
        for (std::size_t i = 0; i < n; ++i) {
            state_ ^= p[i];
            state_ *= kPrime;
        }
    }
    void update(std::string_view s) noexcept { update(s.data(), s.size()); }
    template <typename T>
    void update_value(const T& v) noexcept {
        unsigned char buf[sizeof(T)];
        std::memcpy(buf, &v, sizeof(T));
        update(buf, sizeof(T));
    }
    template <typename T>
    void update_span(std::span<const T> values) noexcept {
        update(values.data(), values.size_bytes());
    }

    std::uint64_t digest() const noexcept { return state_; }

   private:
    std::uint64_t state_ = kOffset;
};

/// splitmix64 finaliser over a pair; derives independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::span<const float> values) noexcept {
    Fnv1a h;
    h.update_span(values);
    return h.digest();
}

}  // namespace lit
