// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <vector>

#include "lit/contrastive/loss.hpp"
#include "lit/runner/cache.hpp"
#include "lit/runner/config.hpp"
#include "lit/runner/metrics.hpp"

namespace lit::runner {

/// Encoder bodies for the pretrained (L or U) towers of a run.
struct Pretrained {
    std::optional<towers::Checkpoint> image;
    std::optional<towers::Checkpoint> text;
};

/// Pretrains whichever towers `config.lock` needs, on labeled data drawn
/// from the same synthetic world as `spec`.
Pretrained pretrain_for(const RunConfig& config, const synth::ConceptSpec& spec);

struct TrainOptions {
    const EmbeddingCache* cache = nullptr;
    bool evaluate = true;
    MetricsLog* log = nullptr;
};

struct TrainResult {
    towers::TowerState<float> image;
    towers::TowerState<float> text;
    contrastive::LossConfig<float> loss;
    std::vector<MetricsRow> metrics;
    std::vector<double> step_losses;  // loss of each update, before it was applied
    std::size_t train_examples = 0;   // after dedup
    std::size_t images_seen = 0;
    std::size_t peak_step_bytes = 0;  // peak tensor bytes a step holds above its starting live bytes
    double train_seconds = 0.0;       // update steps only
};

TrainResult train(const RunConfig& config, const synth::Corpus& corpus, const Pretrained& pretrained,
                  const TrainOptions& options = {});

/// Metrics of a tower pair on the eval splits; step, train_loss, lr and
/// wall time are left to the caller.
MetricsRow evaluate(const RunConfig& config, const synth::Corpus& corpus, const towers::TowerState<float>& image,
                    const towers::TowerState<float>& text, const contrastive::LossConfig<float>& loss,
                    const EmbeddingCache* cache = nullptr);

}  // namespace lit::runner
