// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

namespace lit {

inline constexpr std::size_t kMaxTokens = 16;
inline constexpr std::int32_t kPadId = 0;
inline constexpr std::int32_t kUnkId = 1;

/// A text padded (or truncated) to the fixed text-tower length.
using TokenSeq = std::array<std::int32_t, kMaxTokens>;

inline std::size_t token_count(const TokenSeq& seq) noexcept {
    std::size_t n = 0;
    for (auto id : seq) n += id != kPadId ? 1 : 0;
    return n;
}

}  // namespace lit
