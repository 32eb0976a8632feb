// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "lit/optsched/schedule.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "lit/error.hpp"

namespace lit::optim {

VariantSpec parse_variant(std::string_view text) {
    if (text == "cosine") return {ScheduleVariant::Cosine, 1.0};
    if (text == "image-delayed") return {ScheduleVariant::ImageDelayed, 1.0};
    if (text == "sigmoid") return {ScheduleVariant::Sigmoid, 1.0};
    if (text == "two-cycle") return {ScheduleVariant::TwoCycle, 1.0};
    constexpr std::string_view scaled = "image-scaled";
    if (text.starts_with(scaled)) {
        double factor = 0.1;
        if (text.size() > scaled.size()) {
            if (text[scaled.size()] != ':' && text[scaled.size()] != '(') {
                fail(Errc::InvalidConfig, "unknown schedule '" + std::string(text) + "'");
            }
            std::string num(text.substr(scaled.size() + 1));
            if (!num.empty() && num.back() == ')') num.pop_back();
            try {
                std::size_t used = 0;
                factor = std::stod(num, &used);
                if (used != num.size()) throw std::invalid_argument(num);
            } catch (const std::exception&) {
                fail(Errc::InvalidConfig, "bad image-scaled factor in '" + std::string(text) + "'");
            }
        }
        if (!(factor >= 0.0)) fail(Errc::InvalidConfig, "image-scaled factor must be non-negative");
        return {ScheduleVariant::ImageScaled, factor};
    }
    fail(Errc::InvalidConfig, "unknown schedule '" + std::string(text) + "'");
}

std::string to_string(const VariantSpec& v) {
    switch (v.kind) {
        case ScheduleVariant::Cosine: return "cosine";
        case ScheduleVariant::ImageDelayed: return "image-delayed";
        case ScheduleVariant::Sigmoid: return "sigmoid";
        case ScheduleVariant::TwoCycle: return "two-cycle";
        case ScheduleVariant::ImageScaled: {
            std::ostringstream os;
            os.precision(17);
            os << "image-scaled:" << v.factor;
            return os.str();
        }
    }
    return "cosine";
}

double warmup_cosine(std::size_t step, double base_lr, std::size_t warmup, std::size_t total) {
    if (step < warmup) return base_lr * static_cast<double>(step) / static_cast<double>(warmup);
    if (step >= total) return 0.0;
    const double progress = static_cast<double>(step - warmup) / static_cast<double>(total - warmup);
    return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

namespace {

double post_warmup_progress(std::size_t step, const ScheduleSpec& spec) {
    if (step < spec.warmup_steps) return 0.0;
    if (spec.total_steps <= spec.warmup_steps) return 1.0;
    return static_cast<double>(step - spec.warmup_steps) /
           static_cast<double>(spec.total_steps - spec.warmup_steps);
}

double midpoint(const ScheduleSpec& spec) {
    return static_cast<double>(spec.warmup_steps) +
           0.5 * static_cast<double>(spec.total_steps - std::min(spec.warmup_steps, spec.total_steps));
}

}  // namespace

double lr_at(std::size_t step, const ScheduleSpec& spec, TowerRole tower) {
    if (step > spec.total_steps) {
        fail(Errc::StepOutOfRange,
             "step " + std::to_string(step) + " beyond total " + std::to_string(spec.total_steps));
    }
    const auto override_it = spec.per_tower.find(tower);
    const bool overridden = override_it != spec.per_tower.end();
    const VariantSpec& v = overridden ? override_it->second : spec.variant;
    const double base = warmup_cosine(step, spec.base_lr, spec.warmup_steps, spec.total_steps);

    if (v.kind == ScheduleVariant::Cosine) return base;
    if (v.kind == ScheduleVariant::TwoCycle) {
        const std::size_t phase =
            step < spec.warmup_steps
                ? 0
                : std::min<std::size_t>(3, static_cast<std::size_t>(4.0 * post_warmup_progress(step, spec)));
        const bool image_frozen = phase % 2 == 0;
        if (tower == TowerRole::Image) return image_frozen ? 0.0 : base;
        return image_frozen ? base : 0.0;
    }
    if (tower != TowerRole::Image && !overridden) return base;

    switch (v.kind) {
        case ScheduleVariant::ImageDelayed: {
            // Frozen for the first half of post-warmup training, then its own
            // warmup + cosine over the second half.
            const double mid = midpoint(spec);
            if (static_cast<double>(step) < mid) return 0.0;
            const auto start = static_cast<std::size_t>(std::ceil(mid));
            const std::size_t span = spec.total_steps - start;
            const std::size_t warm = std::min(spec.warmup_steps, span / 2);
            return warmup_cosine(step - start, spec.base_lr, warm, span);
        }
        case ScheduleVariant::ImageScaled:
            return base * v.factor;
        case ScheduleVariant::Sigmoid: {
            const double post = static_cast<double>(spec.total_steps - std::min(spec.warmup_steps, spec.total_steps));
            const double steepness = 10.0 / std::max(post, 1.0);
            const double gate = 1.0 / (1.0 + std::exp(-steepness * (static_cast<double>(step) - midpoint(spec))));
            return base * gate;
        }
        default:
            return base;
    }
}

}  // namespace lit::optim
