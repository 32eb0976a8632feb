// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lit/tokens.hpp"

namespace lit::synth {

/// Word-level dictionary. Id 0 is padding, id 1 is the unknown word.
class Vocabulary {
   public:
    Vocabulary();

    std::int32_t add(const std::string& word);
    std::int32_t id(std::string_view word) const;  // kUnkId when absent
    bool contains(std::string_view word) const;
    const std::string& word(std::int32_t id) const;
    std::size_t size() const noexcept { return words_.size(); }

   private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, std::int32_t> index_;
};

/// Lowercases, splits on whitespace, isolates punctuation marks as their own
/// tokens, looks each piece up and pads or truncates to kMaxTokens.
TokenSeq tokenize(std::string_view text, const Vocabulary& vocab);
std::vector<std::string> split_words(std::string_view text);

/// false when the title should be discarded as a text signal.
bool filter_title(std::string_view title);

/// Shuffles the tags with `seed` and joins them with one separator drawn
/// from {space, newline, ',', ';', '.', '!'}.
std::string compose_tags_text(const std::vector<std::string>& tags, std::uint64_t seed);
TokenSeq compose_tags(const std::vector<std::string>& tags, std::uint64_t seed, const Vocabulary& vocab);

enum class SignalKind : std::uint8_t { Title = 0, Description = 1, Tags = 2 };
enum class SignalStrategy { Joint, PerImage, PerBatch };

std::string_view to_string(SignalKind kind) noexcept;
std::string_view to_string(SignalStrategy strategy) noexcept;
/// Accepts joint | image | batch (also per-image, per-batch).
SignalStrategy parse_strategy(std::string_view text);

/// The signal kind every example of a per-batch step uses.
SignalKind batch_signal(std::uint64_t batch_seed) noexcept;

/// Prompt templates for zero-shot class embeddings; "{}" is the class slot.
const std::vector<std::string>& prompt_templates();
std::string instantiate(std::string_view tmpl, std::string_view class_name);

}  // namespace lit::synth
