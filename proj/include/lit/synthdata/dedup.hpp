// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>
#include <vector>

#include "lit/synthdata/corpus.hpp"

namespace lit::synth {

/// test-only checks the classification and retrieval splits; train+test also
/// checks the probe fitting split.
enum class DedupPolicy { None, TestOnly, TrainTest };

std::string_view to_string(DedupPolicy policy) noexcept;
/// Accepts none | test | test-only | train+test.
DedupPolicy parse_dedup(std::string_view text);

inline constexpr double kNearDuplicateCosine = 0.995;

struct DedupResult {
    std::vector<Example> kept;
    DedupReport report;
};

/// Drops every corpus example whose image hash equals, or whose raw image
/// cosine reaches `near_cosine` with, an image of a selected eval split.
DedupResult dedup(const std::vector<Example>& corpus, const EvalSplits& eval, DedupPolicy policy,
                  double near_cosine = kNearDuplicateCosine);

/// In-place variant; stores the report on the corpus.
void apply_dedup(Corpus& corpus, DedupPolicy policy);

/// Counts corpus/eval pairs that still match under the same criterion.
std::size_t remaining_matches(const std::vector<Example>& corpus, const EvalSplits& eval, DedupPolicy policy,
                              double near_cosine = kNearDuplicateCosine);

}  // namespace lit::synth
