// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include <json.hpp>

#include "lit/runner/train.hpp"

namespace lit::runner {

struct PrecomputeReport {
    std::size_t epochs = 0;
    std::size_t steps = 0;
    std::size_t images = 0;  // training images consumed per path
    double build_seconds = 0.0;
    double cached_seconds = 0.0;  // includes the cache build
    double uncached_seconds = 0.0;
    double cached_ips = 0.0;
    double uncached_ips = 0.0;
    double speedup = 0.0;
    std::size_t cached_peak_bytes = 0;
    std::size_t uncached_peak_bytes = 0;
    // Largest batch fitting the uncached path's peak, assuming bytes scale
    // with batch.
    std::size_t max_batch_uncached = 0;
    std::size_t max_batch_cached = 0;
    std::size_t image_parameters = 0;
    std::size_t text_parameters = 0;
};

void to_json(nlohmann::json& j, const PrecomputeReport& r);

/// Times `epochs` passes over the training split with and without the
/// embedding cache. NotLocked unless the image tower is L.
PrecomputeReport measure_precompute(const RunConfig& config, const synth::Corpus& corpus, const Pretrained& pretrained,
                                    std::size_t epochs);

}  // namespace lit::runner
