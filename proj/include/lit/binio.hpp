// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0
//
// Little-endian primitives shared by the checkpoint, cache and corpus formats.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>

#include "lit/error.hpp"

namespace lit::binio {

template <typename U>
U to_little(U v) noexcept {
    if constexpr (std::endian::native == std::endian::big) {
        unsigned char b[sizeof(U)];
        std::memcpy(b, &v, sizeof(U));
        for (std::size_t i = 0; i < sizeof(U) / 2; ++i) std::swap(b[i], b[sizeof(U) - 1 - i]);
        std::memcpy(&v, b, sizeof(U));
    }
    return v;
}

template <typename U>
void put(std::ostream& out, U v) {
    v = to_little(v);
    out.write(reinterpret_cast<const char*>(&v), sizeof(U));
}

template <typename U>
U get(std::istream& in) {
    U v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(U));
    if (!in) fail(Errc::FormatError, "unexpected end of file");
    return to_little(v);
}

inline void put_f32s(std::ostream& out, std::span<const float> values) {
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
    } else {
        for (float v : values) put(out, v);
    }
}

inline void get_f32s(std::istream& in, std::span<float> values) {
    if constexpr (std::endian::native == std::endian::little) {
        in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
        if (!in) fail(Errc::FormatError, "truncated float payload");
    } else {
        for (float& v : values) v = get<float>(in);
    }
}

inline void put_string(std::ostream& out, const std::string& s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& in, std::size_t limit = 1u << 20) {
    const auto n = get<std::uint32_t>(in);
    if (n > limit) fail(Errc::FormatError, "string length " + std::to_string(n) + " exceeds limit");
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (!in) fail(Errc::FormatError, "truncated string");
    return s;
}

inline void expect_magic(std::istream& in, const char (&magic)[4], const char* what) {
    char got[4] = {};
    in.read(got, 4);
    if (!in || std::memcmp(got, magic, 4) != 0) fail(Errc::FormatError, std::string("not a ") + what + " file");
}

}  // namespace lit::binio
