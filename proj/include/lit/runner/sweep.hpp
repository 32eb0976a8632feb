// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "lit/runner/train.hpp"

namespace lit::runner {

enum class SweepAxis { LockCode, Batch, Width, Schedule };

std::string_view to_string(SweepAxis axis) noexcept;
SweepAxis parse_axis(std::string_view text);

/// `base` with one axis set to `value`. Width sets both towers' width and
/// the shared embedding width.
RunConfig apply_axis(const RunConfig& base, SweepAxis axis, const std::string& value);

struct GridPoint {
    double lr = 1e-3;
    double weight_decay = 1e-4;
};

/// Three learning rates by two weight decays.
std::vector<GridPoint> default_grid();

using PretrainProvider = std::function<Pretrained(const RunConfig&)>;

struct SweepOptions {
    std::filesystem::path out_dir;  // empty: keep results in memory only
    bool grid = false;              // best final zero-shot over `grid_points` per value
    std::vector<GridPoint> grid_points = default_grid();
    PretrainProvider provider;      // default: pretrain_for, memoised per tower config
};

struct SweepPoint {
    std::string value;
    RunConfig config;  // of the reported run
    std::vector<MetricsRow> metrics;
    std::filesystem::path jsonl;
    std::filesystem::path csv;
};

/// File stem of a sweep point, e.g. "lock-code_Lu".
std::string point_stem(SweepAxis axis, const std::string& value);

/// One independent run per value (EmptySweep for no values).
std::vector<SweepPoint> sweep(SweepAxis axis, const std::vector<std::string>& values, const RunConfig& base,
                              const synth::Corpus& corpus, const SweepOptions& options = {});

}  // namespace lit::runner
