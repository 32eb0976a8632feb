// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lit {

enum class Errc {
    ZeroNormRow,
    NotScalar,
    NonFinite,
    ShapeMismatch,
    DimMismatch,
    BatchMismatch,
    TokenOutOfRange,
    PoolEmpty,
    CheckpointMismatch,
    ModeMismatch,
    Diverged,
    IndivisibleBatch,
    MissingRank,
    DuplicateRank,
    StepOutOfRange,
    NonFiniteGradient,
    BadSpec,
    EmptyTags,
    NoUsableSignal,
    EmptyPrompts,
    InsufficientShots,
    NotLocked,
    DigestMismatch,
    InvalidConfig,
    EmptySweep,
    IoError,
    FormatError,
};

constexpr std::string_view errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::ZeroNormRow: return "ZeroNormRow";
        case Errc::NotScalar: return "NotScalar";
        case Errc::NonFinite: return "NonFinite";
        case Errc::ShapeMismatch: return "ShapeMismatch";
        case Errc::DimMismatch: return "DimMismatch";
        case Errc::BatchMismatch: return "BatchMismatch";
        case Errc::TokenOutOfRange: return "TokenOutOfRange";
        case Errc::PoolEmpty: return "PoolEmpty";
        case Errc::CheckpointMismatch: return "CheckpointMismatch";
        case Errc::ModeMismatch: return "ModeMismatch";
        case Errc::Diverged: return "Diverged";
        case Errc::IndivisibleBatch: return "IndivisibleBatch";
        case Errc::MissingRank: return "MissingRank";
        case Errc::DuplicateRank: return "DuplicateRank";
        case Errc::StepOutOfRange: return "StepOutOfRange";
        case Errc::NonFiniteGradient: return "NonFiniteGradient";
        case Errc::BadSpec: return "BadSpec";
        case Errc::EmptyTags: return "EmptyTags";
        case Errc::NoUsableSignal: return "NoUsableSignal";
        case Errc::EmptyPrompts: return "EmptyPrompts";
        case Errc::InsufficientShots: return "InsufficientShots";
        case Errc::NotLocked: return "NotLocked";
        case Errc::DigestMismatch: return "DigestMismatch";
        case Errc::InvalidConfig: return "InvalidConfig";
        case Errc::EmptySweep: return "EmptySweep";
        case Errc::IoError: return "IoError";
        case Errc::FormatError: return "FormatError";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so the
/// CLI can report it in machine-readable form.
class Error : public std::runtime_error {
   public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }
    std::string_view name() const noexcept { return errc_name(code_); }

   private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) { throw Error(code, message); }

}  // namespace lit
