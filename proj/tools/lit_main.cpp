// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

// lit: command-line surface of the engine.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lit/hash.hpp"
#include "lit/runner/cache.hpp"
#include "lit/runner/config.hpp"
#include "lit/runner/metrics.hpp"
#include "lit/runner/precompute.hpp"
#include "lit/runner/sweep.hpp"
#include "lit/runner/train.hpp"
#include "lit/synthdata/corpus_io.hpp"
#include "lit/synthdata/dedup.hpp"
#include "lit/towers/checkpoint.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lit;

namespace {

constexpr const char* kImageCheckpoint = "image.ckpt";
constexpr const char* kTextCheckpoint = "text.ckpt";
constexpr const char* kModelFile = "model.json";
constexpr const char* kCacheFile = "image.litc";

struct Common {
    std::string config;
    std::string lock;
    std::optional<std::size_t> batch;
    std::optional<std::size_t> devices;
    std::optional<std::size_t> steps;
    std::string schedule;
    std::string signal;
    std::string dedup;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string data;         // corpus directory; generated from the config when empty
    std::string checkpoints;  // directory with image.ckpt / text.ckpt
};

void add_common(CLI::App* cmd, Common& c, bool with_out = true) {
    cmd->add_option("--config", c.config, "JSON run config");
    cmd->add_option("--lock", c.lock, "two-letter lock code: Lu, LU, Uu, UU, uu, uU");
    cmd->add_option("--batch", c.batch, "global batch size");
    cmd->add_option("--devices", c.devices, "simulated data-parallel devices");
    cmd->add_option("--steps", c.steps, "training steps");
    cmd->add_option("--schedule", c.schedule, "cosine, image-delayed, image-scaled[:f], sigmoid, two-cycle");
    cmd->add_option("--signal", c.signal, "joint, image, batch");
    cmd->add_option("--dedup", c.dedup, "none, test, train+test");
    cmd->add_option("--seed", c.seed, "run seed");
    cmd->add_option("--data", c.data, "corpus directory written by gen-data");
    cmd->add_option("--checkpoints", c.checkpoints, "directory holding image.ckpt / text.ckpt");
    if (with_out) cmd->add_option("--out", c.out, "output directory")->required();
}

runner::RunConfig resolve(const Common& c) {
    runner::RunConfig config = c.config.empty() ? runner::RunConfig{} : runner::load_config(c.config);
    if (!c.lock.empty()) config.lock = runner::LockCode::parse(c.lock);
    if (c.batch) config.batch = *c.batch;
    if (c.devices) config.devices = *c.devices;
    if (c.steps) config.steps = *c.steps;
    if (!c.schedule.empty()) config.schedule = optim::parse_variant(c.schedule);
    if (!c.signal.empty()) config.signal = synth::parse_strategy(c.signal);
    if (!c.dedup.empty()) config.dedup = synth::parse_dedup(c.dedup);
    if (c.seed) config.seed = *c.seed;
    config.validate();
    return config;
}

synth::Corpus corpus_for(const Common& c, const runner::RunConfig& config) {
    if (!c.data.empty()) return synth::load_corpus(c.data);
    return synth::generate_corpus(config.data, config.splits, config.data_seed);
}

fs::path out_dir(const Common& c) {
    fs::path dir(c.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(Errc::IoError, "cannot create " + dir.string() + ": " + ec.message());
    return dir;
}

std::optional<towers::Checkpoint> maybe_checkpoint(const fs::path& dir, const char* name) {
    const fs::path p = dir / name;
    if (!fs::exists(p)) return std::nullopt;
    return towers::load_checkpoint(p);
}

// Pretrained bodies for the towers the lock code needs: from --checkpoints
// when given, otherwise freshly pretrained.
runner::Pretrained pretrained_for(const Common& c, const runner::RunConfig& config) {
    if (c.checkpoints.empty()) return runner::pretrain_for(config, config.data);
    runner::Pretrained p;
    if (config.lock.image != towers::LockMode::Random) {
        p.image = maybe_checkpoint(c.checkpoints, kImageCheckpoint);
        if (!p.image) fail(Errc::ModeMismatch, "lock " + config.lock.str() + " needs " + kImageCheckpoint);
    }
    if (config.lock.text != towers::LockMode::Random) {
        p.text = maybe_checkpoint(c.checkpoints, kTextCheckpoint);
        if (!p.text) fail(Errc::ModeMismatch, "lock " + config.lock.str() + " needs " + kTextCheckpoint);
    }
    return p;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) fail(Errc::IoError, "cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::IoError, "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        fail(Errc::FormatError, path.string() + ": " + e.what());
    }
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

int cmd_gen_data(const Common& c) {
    const auto config = resolve(c);
    // --seed picks the corpus here.
    auto corpus = synth::generate_corpus(config.data, config.splits, c.seed ? *c.seed : config.data_seed);
    if (config.dedup != synth::DedupPolicy::None) synth::apply_dedup(corpus, config.dedup);
    const auto dir = out_dir(c);
    synth::save_corpus(dir, corpus);
    std::cout << synth::manifest(corpus).dump() << '\n';
    return 0;
}

int cmd_pretrain(const Common& c) {
    const auto config = resolve(c);
    const auto p = runner::pretrain_for(config, config.data);
    const auto dir = out_dir(c);
    json summary = {{"lock", config.lock.str()}};
    if (p.image) {
        towers::save_checkpoint(dir / kImageCheckpoint, *p.image);
        summary["image"] = (dir / kImageCheckpoint).string();
    }
    if (p.text) {
        towers::save_checkpoint(dir / kTextCheckpoint, *p.text);
        summary["text"] = (dir / kTextCheckpoint).string();
    }
    std::cout << summary.dump() << '\n';
    return 0;
}

int cmd_tune(const Common& c, const std::string& cache_path) {
    const auto config = resolve(c);
    const auto corpus = corpus_for(c, config);
    const auto pretrained = pretrained_for(c, config);
    std::optional<runner::EmbeddingCache> cache;
    if (!cache_path.empty()) cache = runner::load_cache(cache_path);

    const auto dir = out_dir(c);
    runner::save_config(dir / "config.json", config);
    runner::MetricsLog log(dir / "metrics.jsonl");
    runner::TrainOptions options;
    options.cache = cache ? &*cache : nullptr;
    options.log = &log;
    const auto result = runner::train(config, corpus, pretrained, options);
    log.write_csv(dir / "metrics.csv");

    towers::save_checkpoint(dir / kImageCheckpoint, towers::make_checkpoint(result.image, true));
    towers::save_checkpoint(dir / kTextCheckpoint, towers::make_checkpoint(result.text, true));
    write_json(dir / kModelFile, {{"lock", config.lock.str()},
                                  {"temperature", result.loss.temperature()}});

    json summary = {{"steps", config.steps}, {"train_examples", result.train_examples}};
    if (!result.metrics.empty()) summary["final"] = result.metrics.back();
    std::cout << summary.dump() << '\n';
    return 0;
}

int cmd_eval(const Common& c) {
    const auto config = resolve(c);
    if (c.checkpoints.empty()) fail(Errc::InvalidConfig, "eval needs --checkpoints with a tuned model");
    const fs::path dir(c.checkpoints);
    const auto model = read_json(dir / kModelFile);
    const auto image_ckpt = towers::load_checkpoint(dir / kImageCheckpoint);
    const auto text_ckpt = towers::load_checkpoint(dir / kTextCheckpoint);

    auto image = towers::init_tower<float>(config.image, towers::LockMode::Locked, 0, &image_ckpt);
    auto text = towers::init_tower<float>(config.text, towers::LockMode::Locked, 0, &text_ckpt);
    towers::load_head(image, image_ckpt);
    towers::load_head(text, text_ckpt);
    auto loss = contrastive::LossConfig<float>::with_temperature(model.at("temperature").get<double>(), false);

    const auto corpus = corpus_for(c, config);
    const auto row = runner::evaluate(config, corpus, image, text, loss);
    std::cout << json(row).dump() << '\n';
    return 0;
}

int cmd_precompute(const Common& c, std::size_t epochs) {
    auto config = resolve(c);
    if (config.lock.image != towers::LockMode::Locked) {
        fail(Errc::NotLocked, "precompute needs a locked image tower, lock is " + config.lock.str());
    }
    const auto corpus = corpus_for(c, config);
    const auto pretrained = pretrained_for(c, config);
    const auto image = towers::init_tower<float>(config.image, towers::LockMode::Locked,
                                                 mix_seed(config.seed, 1),
                                                 pretrained.image ? &*pretrained.image : nullptr);
    const auto cache = runner::precompute_cache(image, corpus);
    const auto dir = out_dir(c);
    runner::save_cache(dir / kCacheFile, cache);
    if (pretrained.image) towers::save_checkpoint(dir / kImageCheckpoint, *pretrained.image);
    if (pretrained.text) towers::save_checkpoint(dir / kTextCheckpoint, *pretrained.text);

    json summary = {{"cache", (dir / kCacheFile).string()}, {"entries", cache.size()}, {"dim", cache.dim()}};
    if (epochs > 0) {
        const auto report = runner::measure_precompute(config, corpus, pretrained, epochs);
        write_json(dir / "precompute_report.json", report);
        summary["report"] = report;
    }
    std::cout << summary.dump() << '\n';
    return 0;
}

int cmd_sweep(const Common& c, const std::string& axis_name, const std::string& values, bool grid) {
    const auto config = resolve(c);
    const auto axis = runner::parse_axis(axis_name);
    const auto corpus = corpus_for(c, config);
    runner::SweepOptions options;
    options.out_dir = out_dir(c);
    options.grid = grid;
    const auto points = runner::sweep(axis, split_list(values), config, corpus, options);
    json summary = json::array();
    for (const auto& p : points) {
        json entry = {{"value", p.value}, {"jsonl", p.jsonl.string()}, {"csv", p.csv.string()}};
        if (!p.metrics.empty()) entry["zero_shot_acc"] = p.metrics.back().zero_shot_acc;
        summary.push_back(entry);
    }
    std::cout << summary.dump() << '\n';
    return 0;
}

int cmd_dedup(const Common& c) {
    auto config = resolve(c);
    if (config.dedup == synth::DedupPolicy::None) config.dedup = synth::DedupPolicy::TrainTest;
    auto corpus = corpus_for(c, config);
    synth::apply_dedup(corpus, config.dedup);
    const std::size_t left = synth::remaining_matches(corpus.train, corpus.eval, config.dedup);
    json report = corpus.dedup;
    report["remaining_matches"] = left;
    report["train_after"] = corpus.train.size();
    if (!c.out.empty()) {
        const auto dir = out_dir(c);
        synth::save_corpus(dir, corpus);
        write_json(dir / "dedup_report.json", report);
    }
    std::cout << report.dump() << '\n';
    return 0;
}

void error_line(std::string_view code, const std::string& message) {
    std::cerr << json{{"error", code}, {"message", message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lit: locked-image contrastive tuning at desk scale"};
    app.require_subcommand(1);

    Common gen, pre, tune, ev, pc, sw, dd;
    std::string cache_path, axis, values;
    std::size_t epochs = 0;
    bool grid = false;

    auto* gen_cmd = app.add_subcommand("gen-data", "write a synthetic corpus");
    add_common(gen_cmd, gen);
    auto* pre_cmd = app.add_subcommand("pretrain", "pretrain the towers the lock code needs");
    add_common(pre_cmd, pre);
    auto* tune_cmd = app.add_subcommand("tune", "contrastive tuning run");
    add_common(tune_cmd, tune);
    tune_cmd->add_option("--cache", cache_path, "embedding cache from precompute");
    auto* ev_cmd = app.add_subcommand("eval", "evaluate a tuned model");
    add_common(ev_cmd, ev, false);
    auto* pc_cmd = app.add_subcommand("precompute", "build the image embedding cache");
    add_common(pc_cmd, pc);
    pc_cmd->add_option("--epochs", epochs, "also time this many epochs with and without the cache");
    auto* sw_cmd = app.add_subcommand("sweep", "one run per axis value");
    add_common(sw_cmd, sw);
    sw_cmd->add_option("--axis", axis, "lock-code, batch, width, schedule")->required();
    sw_cmd->add_option("--values", values, "comma-separated axis values")->required();
    sw_cmd->add_flag("--grid", grid, "best final zero-shot over the lr/wd grid");
    auto* dd_cmd = app.add_subcommand("dedup", "remove eval near-duplicates from the training split");
    add_common(dd_cmd, dd, false);
    dd_cmd->add_option("--out", dd.out, "write the deduplicated corpus here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        error_line("UsageError", e.what());
        return 64;
    }

    try {
        if (*gen_cmd) return cmd_gen_data(gen);
        if (*pre_cmd) return cmd_pretrain(pre);
        if (*tune_cmd) return cmd_tune(tune, cache_path);
        if (*ev_cmd) return cmd_eval(ev);
        if (*pc_cmd) return cmd_precompute(pc, epochs);
        if (*sw_cmd) return cmd_sweep(sw, axis, values, grid);
        if (*dd_cmd) return cmd_dedup(dd);
    } catch (const lit::Error& e) {
        error_line(e.name(), e.what());
        return 2;
    } catch (const std::exception& e) {
        error_line("InternalError", e.what());
        return 3;
    }
    return 0;
}
