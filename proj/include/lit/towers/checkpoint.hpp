// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>

#include "lit/towers/tower.hpp"

namespace lit::towers {

inline constexpr char kCheckpointMagic[4] = {'L', 'I', 'T', 'F'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout (little-endian): magic "LITF", u32 version, u64 config digest,
// u32 tensor count, then per tensor: u32 name length, name bytes, u32 rank,
// u32 extents[rank], f32 payload.
void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lit::towers
