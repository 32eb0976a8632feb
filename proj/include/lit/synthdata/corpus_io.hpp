// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>

#include <json.hpp>

#include "lit/synthdata/corpus.hpp"

namespace lit::synth {

inline constexpr char kCorpusMagic[4] = {'L', 'I', 'T', 'D'};
inline constexpr std::uint32_t kCorpusVersion = 1;

void to_json(nlohmann::json& j, const ConceptSpec& spec);
void from_json(const nlohmann::json& j, ConceptSpec& spec);
void to_json(nlohmann::json& j, const SplitSizes& sizes);
void from_json(const nlohmann::json& j, SplitSizes& sizes);
void to_json(nlohmann::json& j, const DedupReport& report);

// Layout (little-endian): magic "LITD", u32 version, u32 spec JSON length,
// spec JSON, u64 seed, then four splits (train, classification, retrieval,
// probe_train), each u64 count followed by examples: u64 id, i32 class,
// i32 mode, u8 signal flags, u32 dim, f32 image, title, description,
// u32 tag count, tags, u64 content hash. Strings are u32 length + bytes.
void write_corpus(std::ostream& out, const Corpus& corpus);
Corpus read_corpus(std::istream& in);

/// Writes `<dir>/corpus.litd` and `<dir>/manifest.json`.
void save_corpus(const std::filesystem::path& dir, const Corpus& corpus);
Corpus load_corpus(const std::filesystem::path& dir);

nlohmann::json manifest(const Corpus& corpus);

}  // namespace lit::synth
