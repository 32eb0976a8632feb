// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "lit/hash.hpp"
#include "lit/runner/cache.hpp"
#include "lit/runner/config.hpp"
#include "lit/runner/metrics.hpp"
#include "lit/runner/precompute.hpp"
#include "lit/runner/sweep.hpp"
#include "lit/runner/train.hpp"

using namespace lit;
using namespace lit::runner;
namespace fs = std::filesystem;

namespace {

RunConfig small_config() {
    RunConfig c;
    c.splits.train = 256;
    c.splits.classification = 64;
    c.splits.retrieval = 32;
    c.splits.probe_train = 48;
    c.probe_shots = 2;
    c.steps = 12;
    c.batch = 32;
    c.devices = 4;
    c.eval_every = 5;
    c.warmup_steps = 3;
    c.pretrain_items = 256;
    c.pretrain.steps = 40;
    c.pretrain.batch = 64;
    c.pretrain.warmup_steps = 5;
    return c;
}

const synth::Corpus& small_corpus() {
    static const synth::Corpus corpus = [] {
        const auto c = small_config();
        return synth::generate_corpus(c.data, c.splits, c.data_seed);
    }();
    return corpus;
}

const Pretrained& small_pretrained() {
    static const Pretrained p = [] {
        auto c = small_config();
        c.lock = LockCode::parse("LU");
        return pretrain_for(c, c.data);
    }();
    return p;
}

towers::TowerState<float> locked_image(const RunConfig& c) {
    return towers::init_tower<float>(c.image, towers::LockMode::Locked, mix_seed(c.seed, 1),
                                     &*small_pretrained().image);
}

template <typename Fn>
Errc error_of(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return Errc::FormatError;
}

fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("lit_runner_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("lock codes", "[runner]") {
    for (const char* code : {"Lu", "LU", "Uu", "UU", "uu", "uU"}) CHECK(LockCode::parse(code).str() == code);
    CHECK(error_of([] { LockCode::parse("uL"); }) == Errc::InvalidConfig);
    CHECK(error_of([] { LockCode::parse("L"); }) == Errc::InvalidConfig);
}

TEST_CASE("config round trips through its text form", "[runner]") {
    RunConfig c;
    CHECK(parse_config(emit_config(c)) == c);
    c = small_config();
    c.lock = LockCode::parse("Uu");
    c.schedule = optim::parse_variant("image-scaled:0.25");
    c.per_tower_schedule[optim::TowerRole::Text] = optim::parse_variant("sigmoid");
    c.signal = synth::SignalStrategy::PerBatch;
    c.dedup = synth::DedupPolicy::TrainTest;
    c.optimizer.base_lr = 3e-4;
    c.initial_temperature = 0.1234567890123;
    c.data.caption_noise = 0.123;
    c.seed = 99;
    CHECK(parse_config(emit_config(c)) == c);
}

TEST_CASE("config rejects unknown keys and bad values", "[runner]") {
    CHECK(error_of([] { parse_config(R"({"stepz": 3})"); }) == Errc::InvalidConfig);
    CHECK(error_of([] { parse_config(R"({"optimizer": {"lr": 1}})"); }) == Errc::InvalidConfig);
    CHECK(error_of([] { parse_config("{not json"); }) == Errc::InvalidConfig);
    CHECK(error_of([] { parse_config(R"({"lock": "XY"})"); }) == Errc::InvalidConfig);
    auto c = small_config();
    c.batch = 30;
    CHECK(error_of([&] { c.validate(); }) == Errc::IndivisibleBatch);
    c = small_config();
    c.text.embed_dim = 32;
    CHECK(error_of([&] { c.validate(); }) == Errc::InvalidConfig);
}

TEST_CASE("cache round trip is bit-identical to encoding", "[runner][cache]") {
    const auto c = small_config();
    const auto tower = locked_image(c);
    const auto cache = precompute_cache(tower, small_corpus());
    CHECK(cache.size() == 256 + 64 + 32 + 48);
    std::stringstream buf;
    write_cache(buf, cache);
    const auto back = read_cache(buf);
    CHECK(back.digest() == tower.digest());
    CHECK(back.ids() == cache.ids());

    const auto& ex = small_corpus().eval.classification;
    const auto fresh = towers::encode_images<float>(tower, synth::image_batch(ex));
    std::vector<std::uint64_t> ids;
    for (const auto& e : ex) ids.push_back(e.id);
    CHECK(back.lookup(ids) == fresh.rows);
    CHECK(error_of([&] { back.row(1u << 30); }) == Errc::FormatError);
}

TEST_CASE("cache refuses other towers", "[runner][cache]") {
    const auto c = small_config();
    const auto tower = locked_image(c);
    const auto cache = precompute_cache(tower, small_corpus().eval.retrieval);
    cache.check(tower);
    auto other = tower;
    other.params[0].value[0] += 1.0f;
    CHECK(error_of([&] { cache.check(other); }) == Errc::DigestMismatch);

    const auto unlocked = towers::init_tower<float>(c.image, towers::LockMode::Unlocked, 1,
                                                    &*small_pretrained().image);
    CHECK(error_of([&] { precompute_cache(unlocked, small_corpus()); }) == Errc::NotLocked);
    const auto random = towers::init_tower<float>(c.image, towers::LockMode::Random, 1);
    CHECK(error_of([&] { precompute_cache(random, small_corpus()); }) == Errc::NotLocked);

    std::stringstream junk("LITX");
    CHECK(error_of([&] { read_cache(junk); }) == Errc::FormatError);
}

TEST_CASE("training with a foreign cache fails", "[runner][cache]") {
    auto c = small_config();
    c.lock = LockCode::parse("Lu");
    auto other = locked_image(c);
    other.params[0].value[0] += 1.0f;
    const auto cache = precompute_cache(other, small_corpus());
    TrainOptions opts;
    opts.cache = &cache;
    CHECK(error_of([&] { train(c, small_corpus(), small_pretrained(), opts); }) == Errc::DigestMismatch);
    c.lock = LockCode::parse("Uu");
    CHECK(error_of([&] { train(c, small_corpus(), small_pretrained(), opts); }) == Errc::NotLocked);
}

TEST_CASE("zero steps gives only the step-0 evaluation", "[runner]") {
    auto c = small_config();
    c.lock = LockCode::parse("uu");
    c.steps = 0;
    const auto r = train(c, small_corpus(), {});
    REQUIRE(r.metrics.size() == 1);
    CHECK(r.metrics[0].step == 0);
    CHECK(r.step_losses.empty());
}

TEST_CASE("uu runs are deterministic", "[runner]") {
    auto c = small_config();
    c.lock = LockCode::parse("uu");
    const auto a = train(c, small_corpus(), {});
    const auto b = train(c, small_corpus(), {});
    REQUIRE(a.metrics.size() == b.metrics.size());
    for (std::size_t i = 0; i < a.metrics.size(); ++i) {
        auto x = a.metrics[i], y = b.metrics[i];
        x.wall_ms = y.wall_ms = 0.0;
        CHECK(x == y);
    }
    CHECK(a.step_losses == b.step_losses);
    CHECK(a.text.params[0].value == b.text.params[0].value);
    std::vector<std::size_t> steps;
    for (const auto& m : a.metrics) steps.push_back(m.step);
    CHECK(steps == std::vector<std::size_t>{0, 5, 10, 12});
}

TEST_CASE("locked towers stay put during tuning", "[runner]") {
    auto c = small_config();
    c.lock = LockCode::parse("Lu");
    const auto r = train(c, small_corpus(), small_pretrained());
    const auto before = locked_image(c);
    for (std::size_t i = 0; i < before.params.size(); ++i) CHECK(r.image.params[i].value == before.params[i].value);
    CHECK(r.metrics.back().lr_image == 0.0);
}

TEST_CASE("cached and uncached Lu losses agree", "[runner][cache]") {
    auto c = small_config();
    c.lock = LockCode::parse("Lu");
    const auto cache = precompute_cache(locked_image(c), small_corpus());
    TrainOptions opts;
    opts.evaluate = false;
    const auto plain = train(c, small_corpus(), small_pretrained(), opts);
    opts.cache = &cache;
    const auto cached = train(c, small_corpus(), small_pretrained(), opts);
    REQUIRE(plain.step_losses.size() == cached.step_losses.size());
    for (std::size_t i = 0; i < plain.step_losses.size(); ++i)
        CHECK(std::abs(plain.step_losses[i] - cached.step_losses[i]) <= 1e-6);
    CHECK(cached.peak_step_bytes < plain.peak_step_bytes);
}

TEST_CASE("each signal strategy trains", "[runner]") {
    for (auto s : {synth::SignalStrategy::Joint, synth::SignalStrategy::PerImage, synth::SignalStrategy::PerBatch}) {
        auto c = small_config();
        c.lock = LockCode::parse("uu");
        c.signal = s;
        c.steps = 3;
        const auto r = train(c, small_corpus(), {});
        CHECK(r.step_losses.size() == 3);
        for (double l : r.step_losses) CHECK(std::isfinite(l));
    }
}

TEST_CASE("dedup policy shrinks the training split", "[runner]") {
    auto corpus = small_corpus();
    corpus.train.push_back(corpus.eval.classification[0]);
    corpus.train.back().id = 1u << 20;
    auto c = small_config();
    c.lock = LockCode::parse("uu");
    c.steps = 1;
    c.dedup = synth::DedupPolicy::TrainTest;
    CHECK(train(c, corpus, {}).train_examples == 256);
    c.dedup = synth::DedupPolicy::None;
    CHECK(train(c, corpus, {}).train_examples == 257);
}

TEST_CASE("metrics stream is append-only and ordered", "[runner][metrics]") {
    const auto dir = scratch_dir("metrics");
    {
        MetricsLog log(dir / "m.jsonl");
        MetricsRow r;
        r.step = 0;
        r.zero_shot_acc = 0.125;
        log.append(r);
        r.step = 10;
        r.train_loss = 1.0 / 3.0;
        log.append(r);
        CHECK(error_of([&] { log.append(r); }) == Errc::InvalidConfig);
        r.step = 20;
        r.eval_loss = std::numeric_limits<double>::quiet_NaN();
        CHECK(error_of([&] { log.append(r); }) == Errc::InvalidConfig);
        log.write_csv(dir / "m.csv");
        CHECK(log.rows().size() == 2);
    }
    const auto back = read_jsonl(dir / "m.jsonl");
    REQUIRE(back.size() == 2);
    CHECK(back[1].train_loss == 1.0 / 3.0);
    CHECK(back[0].zero_shot_acc == 0.125);
    CHECK(csv_header().find("recall_i2t@1") != std::string::npos);
}

TEST_CASE("sweeps write one file per value", "[runner][sweep]") {
    auto c = small_config();
    c.steps = 2;
    c.eval_every = 2;
    SweepOptions opts;
    opts.out_dir = scratch_dir("sweep");
    opts.provider = [](const RunConfig&) { return small_pretrained(); };
    const auto points = sweep(SweepAxis::LockCode, {"Lu", "Uu", "uu"}, c, small_corpus(), opts);
    REQUIRE(points.size() == 3);
    for (const auto& p : points) {
        CHECK(fs::exists(p.jsonl));
        CHECK(fs::exists(p.csv));
        CHECK(read_jsonl(p.jsonl).size() == p.metrics.size());
    }
    CHECK(points[0].jsonl.filename() == "lock-code_Lu.jsonl");
    CHECK(error_of([&] { sweep(SweepAxis::Batch, {}, c, small_corpus(), opts); }) == Errc::EmptySweep);
    CHECK(error_of([&] { sweep(SweepAxis::Batch, {"30"}, c, small_corpus(), opts); }) == Errc::IndivisibleBatch);
    CHECK(apply_axis(c, SweepAxis::Width, "32").text.embed_dim == 32);
    CHECK(parse_axis("lock-code") == SweepAxis::LockCode);
}

TEST_CASE("precompute report needs a locked tower", "[runner][cache]") {
    auto c = small_config();
    c.lock = LockCode::parse("Uu");
    CHECK(error_of([&] { measure_precompute(c, small_corpus(), small_pretrained(), 1); }) == Errc::NotLocked);
    c.lock = LockCode::parse("Lu");
    const auto r = measure_precompute(c, small_corpus(), small_pretrained(), 1);
    CHECK(r.steps == 256 / 32);
    CHECK(r.images == 256);
    CHECK(r.cached_peak_bytes < r.uncached_peak_bytes);
    CHECK(r.max_batch_cached >= r.max_batch_uncached);
}
