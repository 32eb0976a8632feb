// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "lit/towers/tower.hpp"

namespace lit::towers {

struct PretrainOptions {
    std::size_t steps = 2000;
    std::size_t batch = 128;
    double lr = 1e-3;
    double weight_decay = 1e-4;
    std::size_t warmup_steps = 100;
    std::uint64_t seed = 0;

    friend bool operator==(const PretrainOptions&, const PretrainOptions&) = default;
};

struct PretrainResult {
    Checkpoint checkpoint;       // encoder body only
    double train_accuracy = 0.0; // full pass over the labeled set
    double final_loss = 0.0;
};

/// Supervised pretraining of an image encoder body: a temporary linear
/// classifier on top of the representation is trained with softmax
/// cross-entropy and discarded afterwards.
PretrainResult pretrain_image_tower(const TowerConfig& config, const TensorF& images,
                                    const std::vector<std::int32_t>& labels, std::size_t classes,
                                    const PretrainOptions& options);

/// Same recipe for a text encoder body on labeled token sequences.
PretrainResult pretrain_text_tower(const TowerConfig& config, const std::vector<TokenSeq>& tokens,
                                   const std::vector<std::int32_t>& labels, std::size_t classes,
                                   const PretrainOptions& options);

}  // namespace lit::towers
