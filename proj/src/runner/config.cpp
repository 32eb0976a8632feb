// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "lit/runner/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "lit/contrastive/loss.hpp"
#include "lit/synthdata/corpus_io.hpp"

namespace lit::runner {

using nlohmann::json;

LockCode LockCode::parse(std::string_view code) {
    static const std::set<std::string_view> allowed = {"Lu", "LU", "Uu", "UU", "uu", "uU"};
    if (!allowed.count(code)) {
        fail(Errc::InvalidConfig, "lock code '" + std::string(code) + "' is not one of Lu, LU, Uu, UU, uu, uU");
    }
    return {towers::parse_lock(code[0]), towers::parse_lock(code[1])};
}

std::string LockCode::str() const { return {towers::lock_char(image), towers::lock_char(text)}; }

optim::ScheduleSpec RunConfig::schedule_spec() const {
    optim::ScheduleSpec s;
    s.base_lr = optimizer.base_lr;
    s.total_steps = steps;
    s.warmup_steps = std::min(warmup_steps, steps);
    s.variant = schedule;
    s.per_tower = per_tower_schedule;
    return s;
}

void RunConfig::validate() const {
    LockCode::parse(lock.str());
    if (image.modality != towers::Modality::Image) fail(Errc::InvalidConfig, "image tower must have image modality");
    if (text.modality != towers::Modality::Text) fail(Errc::InvalidConfig, "text tower must have text modality");
    image.validate();
    text.validate();
    if (!text.head) fail(Errc::InvalidConfig, "the text tower always carries a projection head");
    if (image.output_dim() != text.output_dim()) {
        fail(Errc::InvalidConfig, "image embedding width " + std::to_string(image.output_dim()) +
                                      " differs from text embedding width " + std::to_string(text.output_dim()));
    }
    if (!(initial_temperature >= contrastive::kMinTemperature)) {
        fail(Errc::InvalidConfig, "initial temperature below the clamp");
    }
    if (devices == 0 || batch == 0) fail(Errc::InvalidConfig, "devices and batch must be positive");
    if (batch % devices != 0) {
        fail(Errc::IndivisibleBatch, "batch " + std::to_string(batch) + " does not split over " +
                                         std::to_string(devices) + " devices");
    }
    optimizer.validate();
    if (probe_shots == 0 || !(probe_lambda >= 0.0)) fail(Errc::InvalidConfig, "probe needs shots >= 1, lambda >= 0");
    data.validate();
    if (data.image_dim != image.input_dim) fail(Errc::InvalidConfig, "data image_dim differs from image input_dim");
    if (data.vocab_size != text.vocab_size) fail(Errc::InvalidConfig, "data vocab_size differs from text vocab_size");
}

namespace {

json tower_json(const towers::TowerConfig& c) {
    return json{{"kind", towers::to_string(c.kind)},
                {"input_dim", c.input_dim},
                {"vocab_size", c.vocab_size},
                {"max_len", c.max_len},
                {"patches", c.patches},
                {"width", c.width},
                {"depth", c.depth},
                {"heads", c.heads},
                {"embed_dim", c.embed_dim},
                {"head", c.head}};
}

void check_keys(const json& j, std::initializer_list<const char*> keys, const char* where) {
    if (!j.is_object()) fail(Errc::InvalidConfig, std::string(where) + " must be an object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) fail(Errc::InvalidConfig, "unknown key '" + it.key() + "' in " + where);
    }
}

towers::TowerConfig tower_from(const json& j, towers::TowerConfig c) {
    check_keys(j, {"kind", "input_dim", "vocab_size", "max_len", "patches", "width", "depth", "heads", "embed_dim",
                   "head"},
               "tower");
    if (j.contains("kind")) c.kind = towers::parse_kind(j.at("kind").get<std::string>());
    c.input_dim = j.value("input_dim", c.input_dim);
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.max_len = j.value("max_len", c.max_len);
    c.patches = j.value("patches", c.patches);
    c.width = j.value("width", c.width);
    c.depth = j.value("depth", c.depth);
    c.heads = j.value("heads", c.heads);
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.head = j.value("head", c.head);
    return c;
}

std::string role_name(optim::TowerRole r) { return r == optim::TowerRole::Image ? "image" : "text"; }

}  // namespace

void to_json(json& j, const RunConfig& c) {
    json per_tower = json::object();
    for (const auto& [role, v] : c.per_tower_schedule) per_tower[role_name(role)] = optim::to_string(v);
    j = json{{"lock", c.lock.str()},
             {"image_tower", tower_json(c.image)},
             {"text_tower", tower_json(c.text)},
             {"loss",
              {{"initial_temperature", c.initial_temperature},
               {"learnable_temperature", c.learnable_temperature},
               {"global", c.global_loss}}},
             {"devices", c.devices},
             {"optimizer",
              {{"beta1", c.optimizer.beta1},
               {"beta2", c.optimizer.beta2},
               {"eps", c.optimizer.eps},
               {"base_lr", c.optimizer.base_lr},
               {"weight_decay", c.optimizer.weight_decay},
               {"clip_norm", c.optimizer.clip_norm}}},
             {"schedule",
              {{"variant", optim::to_string(c.schedule)},
               {"warmup_steps", c.warmup_steps},
               {"per_tower", per_tower}}},
             {"signal", synth::to_string(c.signal)},
             {"dedup", synth::to_string(c.dedup)},
             {"steps", c.steps},
             {"batch", c.batch},
             {"eval_every", c.eval_every},
             {"seed", c.seed},
             {"probe", {{"shots", c.probe_shots}, {"lambda", c.probe_lambda}}},
             {"data", c.data},
             {"splits", c.splits},
             {"data_seed", c.data_seed},
             {"pretrain",
              {{"items", c.pretrain_items},
               {"steps", c.pretrain.steps},
               {"batch", c.pretrain.batch},
               {"lr", c.pretrain.lr},
               {"weight_decay", c.pretrain.weight_decay},
               {"warmup_steps", c.pretrain.warmup_steps},
               {"seed", c.pretrain.seed}}}};
}

void from_json(const json& j, RunConfig& c) {
    check_keys(j, {"lock", "image_tower", "text_tower", "loss", "devices", "optimizer", "schedule", "signal", "dedup",
                   "steps", "batch", "eval_every", "seed", "probe", "data", "splits", "data_seed", "pretrain"},
               "config");
    RunConfig d;
    if (j.contains("lock")) d.lock = LockCode::parse(j.at("lock").get<std::string>());
    if (j.contains("image_tower")) d.image = tower_from(j.at("image_tower"), d.image);
    if (j.contains("text_tower")) d.text = tower_from(j.at("text_tower"), d.text);
    if (j.contains("loss")) {
        const auto& l = j.at("loss");
        check_keys(l, {"initial_temperature", "learnable_temperature", "global"}, "loss");
        d.initial_temperature = l.value("initial_temperature", d.initial_temperature);
        d.learnable_temperature = l.value("learnable_temperature", d.learnable_temperature);
        d.global_loss = l.value("global", d.global_loss);
    }
    d.devices = j.value("devices", d.devices);
    if (j.contains("optimizer")) {
        const auto& o = j.at("optimizer");
        check_keys(o, {"beta1", "beta2", "eps", "base_lr", "weight_decay", "clip_norm"}, "optimizer");
        d.optimizer.beta1 = o.value("beta1", d.optimizer.beta1);
        d.optimizer.beta2 = o.value("beta2", d.optimizer.beta2);
        d.optimizer.eps = o.value("eps", d.optimizer.eps);
        d.optimizer.base_lr = o.value("base_lr", d.optimizer.base_lr);
        d.optimizer.weight_decay = o.value("weight_decay", d.optimizer.weight_decay);
        d.optimizer.clip_norm = o.value("clip_norm", d.optimizer.clip_norm);
    }
    if (j.contains("schedule")) {
        const auto& s = j.at("schedule");
        check_keys(s, {"variant", "warmup_steps", "per_tower"}, "schedule");
        if (s.contains("variant")) d.schedule = optim::parse_variant(s.at("variant").get<std::string>());
        d.warmup_steps = s.value("warmup_steps", d.warmup_steps);
        if (s.contains("per_tower")) {
            const auto& p = s.at("per_tower");
            check_keys(p, {"image", "text"}, "schedule.per_tower");
            if (p.contains("image")) d.per_tower_schedule[optim::TowerRole::Image] = optim::parse_variant(p.at("image").get<std::string>());
            if (p.contains("text")) d.per_tower_schedule[optim::TowerRole::Text] = optim::parse_variant(p.at("text").get<std::string>());
        }
    }
    if (j.contains("signal")) d.signal = synth::parse_strategy(j.at("signal").get<std::string>());
    if (j.contains("dedup")) d.dedup = synth::parse_dedup(j.at("dedup").get<std::string>());
    d.steps = j.value("steps", d.steps);
    d.batch = j.value("batch", d.batch);
    d.eval_every = j.value("eval_every", d.eval_every);
    d.seed = j.value("seed", d.seed);
    if (j.contains("probe")) {
        const auto& p = j.at("probe");
        check_keys(p, {"shots", "lambda"}, "probe");
        d.probe_shots = p.value("shots", d.probe_shots);
        d.probe_lambda = p.value("lambda", d.probe_lambda);
    }
    if (j.contains("data")) d.data = j.at("data").get<synth::ConceptSpec>();
    if (j.contains("splits")) d.splits = j.at("splits").get<synth::SplitSizes>();
    d.data_seed = j.value("data_seed", d.data_seed);
    if (j.contains("pretrain")) {
        const auto& p = j.at("pretrain");
        check_keys(p, {"items", "steps", "batch", "lr", "weight_decay", "warmup_steps", "seed"}, "pretrain");
        d.pretrain_items = p.value("items", d.pretrain_items);
        d.pretrain.steps = p.value("steps", d.pretrain.steps);
        d.pretrain.batch = p.value("batch", d.pretrain.batch);
        d.pretrain.lr = p.value("lr", d.pretrain.lr);
        d.pretrain.weight_decay = p.value("weight_decay", d.pretrain.weight_decay);
        d.pretrain.warmup_steps = p.value("warmup_steps", d.pretrain.warmup_steps);
        d.pretrain.seed = p.value("seed", d.pretrain.seed);
    }
    c = d;
}

RunConfig parse_config(const std::string& text) {
    try {
        return json::parse(text).get<RunConfig>();
    } catch (const json::exception& e) {
        fail(Errc::InvalidConfig, std::string("config: ") + e.what());
    }
}

std::string emit_config(const RunConfig& config) { return json(config).dump(2); }

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::IoError, "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

void save_config(const std::filesystem::path& path, const RunConfig& config) {
    std::ofstream out(path);
    if (!out) fail(Errc::IoError, "cannot open " + path.string() + " for writing");
    out << emit_config(config) << '\n';
}

}  // namespace lit::runner
