// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "lit/synthdata/text.hpp"

#include <algorithm>
#include <cctype>
#include <random>

#include "lit/error.hpp"

namespace lit::synth {

Vocabulary::Vocabulary() {
    add("<pad>");
    add("<unk>");
}

std::int32_t Vocabulary::add(const std::string& word) {
    auto it = index_.find(word);
    if (it != index_.end()) return it->second;
    const auto id = static_cast<std::int32_t>(words_.size());
    words_.push_back(word);
    index_.emplace(word, id);
    return id;
}

std::int32_t Vocabulary::id(std::string_view word) const {
    auto it = index_.find(std::string(word));
    return it == index_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(std::string_view word) const { return index_.count(std::string(word)) != 0; }

const std::string& Vocabulary::word(std::int32_t id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= words_.size()) {
        fail(Errc::TokenOutOfRange, "no word with id " + std::to_string(id));
    }
    return words_[static_cast<std::size_t>(id)];
}

namespace {

bool is_mark(char c) noexcept {
    switch (c) {
        case ',': case ';': case '.': case '!': case '?': case ':': return true;
        default: return false;
    }
}

bool is_space(char c) noexcept { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

}  // namespace

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) out.push_back(std::move(cur));
        cur.clear();
    };
    for (char c : text) {
        if (is_space(c)) {
            flush();
        } else if (is_mark(c)) {
            flush();
            out.emplace_back(1, c);
        } else {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    flush();
    return out;
}

TokenSeq tokenize(std::string_view text, const Vocabulary& vocab) {
    TokenSeq seq;
    seq.fill(kPadId);
    std::size_t n = 0;
    for (const auto& w : split_words(text)) {
        if (n == kMaxTokens) break;
        seq[n++] = vocab.id(w);
    }
    return seq;
}

bool filter_title(std::string_view title) {
    const auto t = trim(title);
    if (t.empty()) return false;
    for (std::string_view prefix : {"DSC", "IMG", "Picture"}) {
        if (t.starts_with(prefix)) return false;
    }
    if (t.size() == 5) {
        std::string lower(t);
        for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (lower == "image") return false;
    }
    std::size_t digits = 0;
    for (char c : t) digits += std::isdigit(static_cast<unsigned char>(c)) ? 1 : 0;
    return 2 * digits <= t.size();
}

std::string compose_tags_text(const std::vector<std::string>& tags, std::uint64_t seed) {
    if (tags.empty()) fail(Errc::EmptyTags, "compose_tags needs at least one tag");
    static constexpr const char* kSeparators[] = {" ", "\n", ", ", "; ", ". ", "! "};
    std::mt19937_64 rng(seed);
    std::vector<std::string> order = tags;
    std::shuffle(order.begin(), order.end(), rng);
    std::uniform_int_distribution<std::size_t> pick(0, std::size(kSeparators) - 1);
    const std::string sep = kSeparators[pick(rng)];
    std::string out = order[0];
    for (std::size_t i = 1; i < order.size(); ++i) out += sep + order[i];
    return out;
}

TokenSeq compose_tags(const std::vector<std::string>& tags, std::uint64_t seed, const Vocabulary& vocab) {
    return tokenize(compose_tags_text(tags, seed), vocab);
}

std::string_view to_string(SignalKind kind) noexcept {
    switch (kind) {
        case SignalKind::Title: return "title";
        case SignalKind::Description: return "description";
        case SignalKind::Tags: return "tags";
    }
    return "?";
}

std::string_view to_string(SignalStrategy strategy) noexcept {
    switch (strategy) {
        case SignalStrategy::Joint: return "joint";
        case SignalStrategy::PerImage: return "image";
        case SignalStrategy::PerBatch: return "batch";
    }
    return "?";
}

SignalStrategy parse_strategy(std::string_view text) {
    if (text == "joint") return SignalStrategy::Joint;
    if (text == "image" || text == "per-image") return SignalStrategy::PerImage;
    if (text == "batch" || text == "per-batch") return SignalStrategy::PerBatch;
    fail(Errc::InvalidConfig, "unknown signal strategy '" + std::string(text) + "'");
}

SignalKind batch_signal(std::uint64_t batch_seed) noexcept {
    std::mt19937_64 rng(batch_seed);
    return static_cast<SignalKind>(std::uniform_int_distribution<int>(0, 2)(rng));
}

const std::vector<std::string>& prompt_templates() {
    static const std::vector<std::string> templates = {
        "a photo of a {}.",        "a blurry photo of the {}.", "a close-up photo of a {}.",
        "a bright photo of the {}.", "a photo of my {}.",       "a good picture of a {}.",
        "itap of a {}.",           "a {} in the wild.",
    };
    return templates;
}

std::string instantiate(std::string_view tmpl, std::string_view class_name) {
    const auto pos = tmpl.find("{}");
    if (pos == std::string_view::npos) fail(Errc::BadSpec, "template lacks a class slot: " + std::string(tmpl));
    std::string out(tmpl.substr(0, pos));
    out += class_name;
    out += tmpl.substr(pos + 2);
    return out;
}

}  // namespace lit::synth
