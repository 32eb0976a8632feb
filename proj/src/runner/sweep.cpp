// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "lit/runner/sweep.hpp"

#include <charconv>
#include <fstream>
#include <map>

namespace lit::runner {

namespace {

std::size_t parse_size(const std::string& value, const char* what) {
    std::size_t out = 0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end || out == 0) {
        fail(Errc::InvalidConfig, std::string(what) + " must be a positive integer, got '" + value + "'");
    }
    return out;
}

std::string pretrain_key(const RunConfig& c) {
    std::string key;
    key += c.lock.image == towers::LockMode::Random ? "-" : std::to_string(c.image.body_digest());
    key += '/';
    key += c.lock.text == towers::LockMode::Random ? "-" : std::to_string(c.text.body_digest());
    return key + '/' + std::to_string(c.data_seed) + '/' + std::to_string(c.pretrain_items) + '/' +
           std::to_string(c.pretrain.seed) + '/' + std::to_string(c.pretrain.steps);
}

}  // namespace

std::string_view to_string(SweepAxis axis) noexcept {
    switch (axis) {
        case SweepAxis::LockCode: return "lock-code";
        case SweepAxis::Batch: return "batch";
        case SweepAxis::Width: return "width";
        case SweepAxis::Schedule: return "schedule";
    }
    return "unknown";
}

SweepAxis parse_axis(std::string_view text) {
    for (auto a : {SweepAxis::LockCode, SweepAxis::Batch, SweepAxis::Width, SweepAxis::Schedule}) {
        if (text == to_string(a)) return a;
    }
    fail(Errc::InvalidConfig, "unknown sweep axis '" + std::string(text) + "'");
}

RunConfig apply_axis(const RunConfig& base, SweepAxis axis, const std::string& value) {
    RunConfig c = base;
    switch (axis) {
        case SweepAxis::LockCode: c.lock = LockCode::parse(value); break;
        case SweepAxis::Batch: c.batch = parse_size(value, "batch"); break;
        case SweepAxis::Width: {
            const auto w = parse_size(value, "width");
            c.image.width = c.text.width = w;
            c.image.embed_dim = c.text.embed_dim = w;
            break;
        }
        case SweepAxis::Schedule: c.schedule = optim::parse_variant(value); break;
    }
    c.validate();
    return c;
}

std::vector<GridPoint> default_grid() {
    std::vector<GridPoint> grid;
    for (double lr : {1e-3, 8e-4, 3e-4}) {
        for (double wd : {1e-4, 1e-5}) grid.push_back({lr, wd});
    }
    return grid;
}

std::string point_stem(SweepAxis axis, const std::string& value) {
    std::string v;
    for (char ch : value) {
        const bool keep = std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '.';
        v += keep ? ch : '-';
    }
    return std::string(to_string(axis)) + "_" + v;
}

std::vector<SweepPoint> sweep(SweepAxis axis, const std::vector<std::string>& values, const RunConfig& base,
                              const synth::Corpus& corpus, const SweepOptions& options) {
    if (values.empty()) fail(Errc::EmptySweep, "sweep over " + std::string(to_string(axis)) + " has no values");
    if (options.grid && options.grid_points.empty()) fail(Errc::EmptySweep, "lr/wd grid is empty");

    // Validate every point before spending time on any run.
    std::vector<RunConfig> configs;
    for (const auto& v : values) configs.push_back(apply_axis(base, axis, v));

    std::map<std::string, Pretrained> memo;
    auto provide = [&](const RunConfig& c) -> const Pretrained& {
        const auto key = pretrain_key(c);
        auto it = memo.find(key);
        if (it == memo.end()) {
            it = memo.emplace(key, options.provider ? options.provider(c) : pretrain_for(c, corpus.spec)).first;
        }
        return it->second;
    };

    if (!options.out_dir.empty()) std::filesystem::create_directories(options.out_dir);
    nlohmann::json summary = {{"axis", to_string(axis)}, {"points", nlohmann::json::array()}};

    std::vector<SweepPoint> out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::vector<RunConfig> runs;
        if (options.grid) {
            for (const auto& g : options.grid_points) {
                RunConfig c = configs[i];
                c.optimizer.base_lr = g.lr;
                c.optimizer.weight_decay = g.weight_decay;
                runs.push_back(c);
            }
        } else {
            runs.push_back(configs[i]);
        }

        SweepPoint point;
        point.value = values[i];
        nlohmann::json grid_json = nlohmann::json::array();
        double best = -1.0;
        for (const auto& c : runs) {
            auto result = train(c, corpus, provide(c));
            const double zs = result.metrics.empty() ? 0.0 : result.metrics.back().zero_shot_acc;
            grid_json.push_back({{"lr", c.optimizer.base_lr}, {"weight_decay", c.optimizer.weight_decay},
                                 {"zero_shot_acc", zs}});
            if (zs > best) {
                best = zs;
                point.config = c;
                point.metrics = std::move(result.metrics);
            }
        }

        if (!options.out_dir.empty()) {
            const auto stem = point_stem(axis, values[i]);
            point.jsonl = options.out_dir / (stem + ".jsonl");
            point.csv = options.out_dir / (stem + ".csv");
            MetricsLog log(point.jsonl);
            for (const auto& r : point.metrics) log.append(r);
            log.write_csv(point.csv);
        }
        summary["points"].push_back({{"value", values[i]},
                                     {"lr", point.config.optimizer.base_lr},
                                     {"weight_decay", point.config.optimizer.weight_decay},
                                     {"zero_shot_acc", best},
                                     {"grid", grid_json}});
        out.push_back(std::move(point));
    }
    if (!options.out_dir.empty()) {
        std::ofstream f(options.out_dir / ("sweep_" + std::string(to_string(axis)) + ".json"));
        if (!f) fail(Errc::IoError, "cannot write sweep summary");
        f << summary.dump(2) << '\n';
    }
    return out;
}

}  // namespace lit::runner
