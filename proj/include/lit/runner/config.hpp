// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "lit/optsched/adam.hpp"
#include "lit/optsched/schedule.hpp"
#include "lit/synthdata/corpus.hpp"
#include "lit/synthdata/dedup.hpp"
#include "lit/towers/pretrain.hpp"
#include "lit/towers/tower.hpp"

namespace lit::runner {

/// Image letter then text letter, e.g. "Lu".
struct LockCode {
    towers::LockMode image = towers::LockMode::Locked;
    towers::LockMode text = towers::LockMode::Random;

    static LockCode parse(std::string_view code);
    std::string str() const;
    friend bool operator==(const LockCode&, const LockCode&) = default;
};

struct RunConfig {
    LockCode lock;
    towers::TowerConfig image = towers::default_image_config();
    towers::TowerConfig text = towers::default_text_config();

    double initial_temperature = 0.07;
    bool learnable_temperature = true;

    std::size_t devices = 4;
    bool global_loss = true;

    optim::OptimizerConfig optimizer;
    std::size_t warmup_steps = 200;
    optim::VariantSpec schedule;
    std::map<optim::TowerRole, optim::VariantSpec> per_tower_schedule;

    synth::SignalStrategy signal = synth::SignalStrategy::Joint;
    synth::DedupPolicy dedup = synth::DedupPolicy::None;

    std::size_t steps = 2000;
    std::size_t batch = 256;
    std::size_t eval_every = 100;
    std::uint64_t seed = 0;

    std::size_t probe_shots = 10;
    double probe_lambda = 0.1;

    // Data and image pretraining used by commands that build their inputs.
    synth::ConceptSpec data;
    synth::SplitSizes splits;
    std::uint64_t data_seed = 0;
    std::size_t pretrain_items = 2048;
    towers::PretrainOptions pretrain;

    void validate() const;
    optim::ScheduleSpec schedule_spec() const;
    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

RunConfig parse_config(const std::string& text);
std::string emit_config(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const RunConfig& config);

}  // namespace lit::runner
