// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>

namespace lit::optim {

enum class TowerRole { Image, Text };

enum class ScheduleVariant { Cosine, ImageDelayed, ImageScaled, Sigmoid, TwoCycle };

struct VariantSpec {
    ScheduleVariant kind = ScheduleVariant::Cosine;
    double factor = 1.0;  // only read by ImageScaled

    friend bool operator==(const VariantSpec&, const VariantSpec&) = default;
};

// "cosine", "image-delayed", "image-scaled:<f>", "sigmoid", "two-cycle"
VariantSpec parse_variant(std::string_view text);
std::string to_string(const VariantSpec& v);

/// Linear warmup followed by cosine decay, plus per-tower modifiers.
///
/// The variant modifies the image tower; text keeps the plain curve except
/// under two-cycle, which alternately zeroes image and text over four equal
/// post-warmup phases (image frozen first). An entry in per_tower replaces the
/// variant for that tower and applies its modifier to it directly.
struct ScheduleSpec {
    double base_lr = 1e-3;
    std::size_t warmup_steps = 0;
    std::size_t total_steps = 0;
    VariantSpec variant;
    std::map<TowerRole, VariantSpec> per_tower;

    friend bool operator==(const ScheduleSpec&, const ScheduleSpec&) = default;
};

/// Plain warmup + cosine curve; lr(0) = 0 when warmup > 0, lr(total) = 0.
double warmup_cosine(std::size_t step, double base_lr, std::size_t warmup, std::size_t total);

double lr_at(std::size_t step, const ScheduleSpec& spec, TowerRole tower);

}  // namespace lit::optim
