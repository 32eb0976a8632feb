// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "lit/towers/checkpoint.hpp"

#include <fstream>

#include "lit/binio.hpp"

namespace lit::towers {

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
    out.write(kCheckpointMagic, 4);
    binio::put<std::uint32_t>(out, kCheckpointVersion);
    binio::put<std::uint64_t>(out, ckpt.config_digest);
    binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& t : ckpt.tensors) {
        binio::put_string(out, t.name);
        binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(t.value.rank()));
        for (auto e : t.value.shape()) binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(e));
        binio::put_f32s(out, t.value.values());
    }
    if (!out) fail(Errc::IoError, "failed to write checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
    binio::expect_magic(in, kCheckpointMagic, "checkpoint");
    const auto version = binio::get<std::uint32_t>(in);
    if (version != kCheckpointVersion) fail(Errc::FormatError, "unsupported checkpoint version " + std::to_string(version));
    Checkpoint ckpt;
    ckpt.config_digest = binio::get<std::uint64_t>(in);
    const auto count = binio::get<std::uint32_t>(in);
    for (std::uint32_t i = 0; i < count; ++i) {
        NamedTensor t;
        t.name = binio::get_string(in, 4096);
        const auto rank = binio::get<std::uint32_t>(in);
        if (rank > 4) fail(Errc::FormatError, "tensor rank " + std::to_string(rank) + " too large");
        Shape shape(rank);
        std::size_t numel = 1;
        for (auto& e : shape) {
            e = binio::get<std::uint32_t>(in);
            numel *= e;
        }
        if (numel > (std::size_t{1} << 30)) fail(Errc::FormatError, "tensor too large");
        t.value = TensorF(std::move(shape));
        binio::get_f32s(in, t.value.values());
        ckpt.tensors.push_back(std::move(t));
    }
    return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::IoError, "cannot open " + path.string() + " for writing");
    write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::IoError, "cannot open " + path.string());
    return read_checkpoint(in);
}

}  // namespace lit::towers
