// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one PASS/FAIL line per criterion. Exit status is
// nonzero when any selected criterion fails.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "lit/hash.hpp"
#include "lit/optsched/adam.hpp"
#include "lit/optsched/schedule.hpp"
#include "lit/runner/cache.hpp"
#include "lit/runner/precompute.hpp"
#include "lit/runner/train.hpp"
#include "lit/shardsim/shard.hpp"
#include "lit/synthdata/corpus_io.hpp"
#include "lit/synthdata/dedup.hpp"
#include "lit/synthdata/text.hpp"
#include "lit/eval/eval.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

using namespace lit;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string format(const char* fmt, ...) {
    char buf[1024];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, args);
    va_end(args);
    return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

template <Scalar T>
EmbeddingBatch<T> unit_batch(std::size_t n, std::size_t d, std::mt19937_64& rng) {
    EmbeddingBatch<T> b;
    b.rows = l2_normalize(testing::random_normal({n, d}, rng)).template cast<T>();
    b.item_ids = iota_ids(n);
    b.normalized = true;
    return b;
}

template <Scalar T>
EmbeddingBatch<T> identity_batch(std::size_t n) {
    EmbeddingBatch<T> b;
    b.rows = Tensor<T>({n, n});
    for (std::size_t i = 0; i < n; ++i) b.rows.at(i, i) = T(1);
    b.item_ids = iota_ids(n);
    b.normalized = true;
    return b;
}

template <Scalar T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(double(a[i]) - double(b[i])));
    return m;
}

std::vector<TokenSeq> random_tokens(std::size_t n, std::size_t vocab, std::mt19937_64& rng) {
    std::vector<TokenSeq> out(n);
    std::uniform_int_distribution<int> len(1, kMaxTokens);
    std::uniform_int_distribution<int> id(2, static_cast<int>(vocab) - 1);
    for (auto& seq : out) {
        seq.fill(kPadId);
        const int k = len(rng);
        for (int i = 0; i < k; ++i) seq[i] = id(rng);
    }
    return out;
}

runner::RunConfig seeded_config(std::uint64_t s) {
    runner::RunConfig c;
    c.seed = s;
    c.data_seed = s;
    c.pretrain.seed = s;
    c.data.world_seed = s;
    c.eval_every = c.steps;
    return c;
}

// ---------------------------------------------------------------------------

// Towers, per-device encoding and the sharded loss as one f64 graph.
double full_graph_error(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::size_t devices = std::size_t{1} << (seed % 3), per = 2 + seed % 2;
    const bool global = seed % 2 == 0;

    towers::TowerConfig ic = towers::default_image_config();
    ic.width = 6;
    ic.depth = 2;
    ic.input_dim = 5;
    ic.embed_dim = 4;
    ic.head = true;
    towers::TowerConfig tc = towers::default_text_config();
    tc.kind = towers::TowerKind::TinyTransformer;
    tc.width = 8;
    tc.depth = 1;
    tc.heads = 2;
    tc.vocab_size = 10;
    tc.embed_dim = 4;
    auto image = towers::init_tower<double>(ic, towers::LockMode::Random, seed + 1);
    auto text = towers::init_tower<double>(tc, towers::LockMode::Random, seed + 2);
    for (auto* tower : {&image, &text})
        for (auto* p : tower->all_parameters())
            for (auto& v : p->value.values()) v += 0.3 * testing::random_normal({1}, rng)[0];
    auto cfg = contrastive::LossConfig<double>::with_temperature(std::uniform_real_distribution<double>(0.1, 1.0)(rng));

    std::vector<TensorD> x;
    std::vector<std::vector<TokenSeq>> toks;
    for (std::size_t r = 0; r < devices; ++r) {
        x.push_back(testing::random_normal({per, ic.input_dim}, rng));
        toks.push_back(random_tokens(per, tc.vocab_size, rng));
    }
    auto loss_of = [&](Tape<double>& tape) {
        std::vector<NodeId> u, v;
        for (std::size_t r = 0; r < devices; ++r) {
            u.push_back(towers::image_forward(tape, image, tape.constant(x[r])));
            v.push_back(towers::text_forward<double>(tape, text, toks[r]));
        }
        const NodeId lt = contrastive::temperature_node(tape, cfg);
        return global ? shard::build_global<double>(tape, u, v, lt).loss : shard::build_local<double>(tape, u, v, lt).loss;
    };

    Tape<double> tape;
    const auto grads = tape.backward(loss_of(tape));
    std::vector<Parameter<double>*> params = image.all_parameters();
    for (auto* p : text.all_parameters()) params.push_back(p);
    params.push_back(&cfg.log_temperature);

    double worst = 0.0;
    for (auto* p : params) {
        const TensorD* analytic = grads.param(*p);
        if (analytic == nullptr) return INFINITY;
        const TensorD saved = p->value;
        auto f = [&](const TensorD& probe) {
            p->value = probe;
            Tape<double> t;
            const double value = t.value(loss_of(t)).item();
            p->value = saved;
            return value;
        };
        const auto numeric = finite_diff_grad<double>(f, saved, 1e-5);
        if (p->name.ends_with("attn.k.bias")) {
            // Shift invariance of the softmax makes this gradient identically zero.
            for (std::size_t i = 0; i < numeric.numel(); ++i)
                if (std::abs((*analytic)[i]) > 1e-12 || std::abs(numeric[i]) > 1e-9) return INFINITY;
            continue;
        }
        worst = std::max(worst, testing::relative_error(*analytic, numeric));
    }
    return worst;
}

Outcome gradients() {
    const auto t0 = Clock::now();
    double op_worst = 0.0;
    std::size_t op_instances = 0;
    std::set<std::string> ops;
    std::string worst_op;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        for (const auto& c : testing::op_catalog(seed)) {
            const double e = testing::gradcheck(c, seed);
            ++op_instances;
            ops.insert(c.name);
            if (!(e <= op_worst)) {
                op_worst = e;
                worst_op = c.name;
            }
        }
    }
    double graph_worst = 0.0;
    const std::size_t graphs = 100;
    for (std::uint64_t seed = 0; seed < graphs; ++seed) {
        const double e = full_graph_error(seed);
        if (!(e <= graph_worst)) graph_worst = e;
    }
    const double elapsed = seconds_since(t0);
    const bool pass = op_worst <= 1e-4 && graph_worst <= 1e-4 && elapsed < 60.0;
    return {pass, format("%zu op instances over %zu ops, worst rel err %.2e (%s); %zu full loss graphs, worst %.2e; "
                         "%.1fs (limit 60s)",
                         op_instances, ops.size(), op_worst, worst_op.c_str(), graphs, graph_worst, elapsed)};
}

// ---------------------------------------------------------------------------

template <Scalar T>
double closed_form_error() {
    const double a = std::log1p(std::exp(-1.0)), b = std::log1p(3.0 * std::exp(-1.0));
    const auto tau1 = contrastive::LossConfig<T>::with_temperature(1.0);
    double worst = 0.0;
    auto track = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };
    track(contrastive::contrastive_loss(identity_batch<T>(2), identity_batch<T>(2), tau1).loss, a);
    track(contrastive::contrastive_loss(identity_batch<T>(4), identity_batch<T>(4), tau1).loss, b);
    const auto i4 = identity_batch<T>(4);
    const auto views = shard::shard_batch(i4, i4, shard::ShardLayout::split(4, 2));
    track(shard::global_loss<T>(views, tau1).total.loss, b);
    track(shard::local_loss<T>(views, tau1).total.loss, a);
    return worst;
}

Outcome gather_concat() {
    std::mt19937_64 rng(2);
    double loss_diff = 0.0, grad_diff = 0.0;
    const std::size_t trials = 20, n = 32;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const auto cfg = contrastive::LossConfig<float>::with_temperature(
            std::uniform_real_distribution<double>(0.03, 1.0)(rng));
        const auto u = unit_batch<float>(n, 16, rng), v = unit_batch<float>(n, 16, rng);
        const auto single = contrastive::contrastive_loss(u, v, cfg);
        for (std::size_t d : {1u, 2u, 4u, 8u}) {
            const auto views = shard::shard_batch(u, v, shard::ShardLayout::split(n, d));
            const auto sharded = shard::global_loss<float>(views, cfg);
            loss_diff = std::max(loss_diff, std::abs(double(sharded.total.loss) - double(single.loss)));
            grad_diff = std::max({grad_diff, max_abs_diff(sharded.total.grad_u, single.grad_u),
                                  max_abs_diff(sharded.total.grad_v, single.grad_v),
                                  std::abs(double(sharded.total.grad_log_temperature) -
                                           double(single.grad_log_temperature))});
            // Per-rank gradients are slices of the gathered ones.
            const std::size_t b = n / d;
            for (std::size_t r = 0; r < d; ++r)
                for (std::size_t i = 0; i < b; ++i)
                    for (std::size_t k = 0; k < 16; ++k)
                        grad_diff = std::max(
                            grad_diff, std::abs(double(sharded.grad_u[r].at(i, k)) - single.grad_u.at(r * b + i, k)));
        }
    }
    const double cf32 = closed_form_error<float>(), cf64 = closed_form_error<double>();
    const bool pass = loss_diff <= 1e-6 && grad_diff <= 1e-5 && cf32 <= 1e-6 && cf64 <= 1e-6;
    return {pass, format("D in {1,2,4,8}, %zu batches of %zu (f32): max loss diff %.1e, max grad diff %.1e; "
                         "closed forms ln(1+e^-1), ln(1+3e^-1): max err f32 %.1e, f64 %.1e",
                         trials, n, loss_diff, grad_diff, cf32, cf64)};
}

// ---------------------------------------------------------------------------

Outcome random_baseline() {
    const auto tau1 = contrastive::LossConfig<float>::with_temperature(1.0);
    bool pass = true;
    std::string detail;
    for (std::size_t n : {8u, 64u, 256u}) {
        double mean = 0.0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            std::mt19937_64 rng(seed * 1000 + n);
            const auto u = unit_batch<float>(n, 64, rng), v = unit_batch<float>(n, 64, rng);
            mean += contrastive::contrastive_loss(u, v, tau1).loss / 100.0;
        }
        const double rel = std::abs(mean - std::log(double(n))) / std::log(double(n));
        pass = pass && rel <= 0.10;
        detail += format("%sN=%zu mean %.4f vs ln N %.4f (%.2f%%)", detail.empty() ? "" : "; ", n, mean,
                         std::log(double(n)), 100.0 * rel);
    }
    return {pass, detail + " over 100 seeds, tau=1, tolerance 10%"};
}

// ---------------------------------------------------------------------------

Outcome lock_ordering() {
    const auto t0 = Clock::now();
    std::size_t ordered = 0;
    double gap = 0.0;
    std::string per_seed;
    const std::size_t seeds = 5;
    for (std::uint64_t s = 0; s < seeds; ++s) {
        const auto base = seeded_config(s);
        const auto corpus = synth::generate_corpus(base.data, base.splits, s);
        auto lu = base, uu_img = base, uu = base;
        lu.lock = runner::LockCode::parse("Lu");
        uu_img.lock = runner::LockCode::parse("Uu");
        uu.lock = runner::LockCode::parse("uu");
        const auto pre = runner::pretrain_for(lu, corpus.spec);
        const double a = runner::train(lu, corpus, pre).metrics.back().zero_shot_acc;
        const double b = runner::train(uu_img, corpus, pre).metrics.back().zero_shot_acc;
        const double c = runner::train(uu, corpus, runner::Pretrained{}).metrics.back().zero_shot_acc;
        ordered += (a >= b && b >= c) ? 1 : 0;
        gap += (a - c) / double(seeds);
        per_seed += format("%s%.3f/%.3f/%.3f", s == 0 ? "" : " ", a, b, c);
    }
    const double elapsed = seconds_since(t0);
    const bool pass = ordered >= 4 && gap >= 0.05 && elapsed < 600.0;
    return {pass, format("Lu>=Uu>=uu in %zu/%zu seeds (need 4); mean Lu-uu gap %.1f points (need 5); zero-shot "
                         "Lu/Uu/uu per seed: %s; 2000 steps; %.0fs (limit 600s)",
                         ordered, seeds, 100.0 * gap, per_seed.c_str(), elapsed)};
}

// ---------------------------------------------------------------------------

// Lu runs at a fixed number of seen pairs; warmup is scaled to keep the
// same number of warmup pairs.
Outcome batch_effects() {
    const std::size_t pairs = 512000, seeds = 3;
    std::size_t global_wins = 0, large_wins = 0;
    std::string per_seed;
    for (std::uint64_t s = 0; s < seeds; ++s) {
        auto base = seeded_config(s);
        base.lock = runner::LockCode::parse("Lu");
        const auto corpus = synth::generate_corpus(base.data, base.splits, s);
        const auto pre = runner::pretrain_for(base, corpus.spec);
        const auto tower =
            towers::init_tower<float>(base.image, towers::LockMode::Locked, mix_seed(s, 1), &*pre.image);
        const auto cache = runner::precompute_cache(tower, corpus);
        runner::TrainOptions opts;
        opts.cache = &cache;
        auto run = [&](std::size_t batch, bool global) {
            auto c = base;
            c.batch = batch;
            c.global_loss = global;
            c.steps = pairs / batch;
            c.eval_every = c.steps;
            c.warmup_steps = 200 * 256 / batch;
            return runner::train(c, corpus, pre, opts).metrics.back().zero_shot_acc;
        };
        const double g = run(256, true), l = run(256, false), small = run(64, true), large = run(512, true);
        global_wins += g >= l ? 1 : 0;
        large_wins += large >= small ? 1 : 0;
        per_seed += format("%sseed %llu global %.3f local %.3f b64 %.3f b512 %.3f", s == 0 ? "" : "; ",
                           static_cast<unsigned long long>(s), g, l, small, large);
    }
    const bool pass = global_wins >= 2 && large_wins >= 2;
    return {pass, format("global>=local in %zu/%zu seeds, batch 512>=64 in %zu/%zu seeds (need 2 each); Lu, "
                         "%zu seen pairs; %s",
                         global_wins, seeds, large_wins, seeds, pairs, per_seed.c_str())};
}

// ---------------------------------------------------------------------------

Outcome precompute() {
    // Transparency on the default Lu setup.
    auto c = seeded_config(0);
    c.lock = runner::LockCode::parse("Lu");
    c.steps = 200;
    c.eval_every = 200;
    const auto corpus = synth::generate_corpus(c.data, c.splits, 0);
    const auto pre = runner::pretrain_for(c, corpus.spec);
    const auto tower = towers::init_tower<float>(c.image, towers::LockMode::Locked, mix_seed(c.seed, 1), &*pre.image);
    const auto cache = runner::precompute_cache(tower, corpus);
    runner::TrainOptions opts;
    opts.cache = &cache;
    const auto plain = runner::train(c, corpus, pre);
    const auto cached = runner::train(c, corpus, pre, opts);
    double diff = plain.step_losses.size() == cached.step_losses.size() ? 0.0 : INFINITY;
    for (std::size_t i = 0; i < std::min(plain.step_losses.size(), cached.step_losses.size()); ++i)
        diff = std::max(diff, std::abs(plain.step_losses[i] - cached.step_losses[i]));
    const bool same_eval = plain.metrics.back().zero_shot_acc == cached.metrics.back().zero_shot_acc;

    // Throughput with a transformer image tower far larger than the text tower.
    auto big = c;
    big.image.kind = towers::TowerKind::TinyTransformer;
    big.image.width = 64;
    big.image.depth = 12;
    big.image.heads = 4;
    big.image.patches = 8;
    big.pretrain.steps = 20;
    const auto big_pre = runner::pretrain_for(big, corpus.spec);
    const std::size_t epochs = 3;
    const auto rep = runner::measure_precompute(big, corpus, big_pre, epochs);
    const double ratio = double(rep.image_parameters) / double(rep.text_parameters);

    const bool pass = plain.step_losses.size() == 200 && diff <= 1e-6 && same_eval && ratio >= 10.0 &&
                      epochs >= 2 && rep.speedup >= 1.5;
    return {pass, format("200 steps cached vs uncached: max loss diff %.1e, final zero-shot %s; throughput over %zu "
                         "epochs, image/text params %zu/%zu (%.1fx): %.0f vs %.0f img/s, speedup %.2fx (need 1.5x), "
                         "peak step bytes %zu vs %zu",
                         diff, same_eval ? "equal" : "differs", epochs, rep.image_parameters, rep.text_parameters,
                         ratio, rep.cached_ips, rep.uncached_ips, rep.speedup, rep.cached_peak_bytes,
                         rep.uncached_peak_bytes)};
}

// ---------------------------------------------------------------------------

Outcome retrieval() {
    std::mt19937_64 rng(7);
    const std::vector<std::size_t> ks = {1, 2, 5, 10};
    std::size_t agree = 0, tied = 0;
    const std::size_t instances = 50;
    for (std::size_t i = 0; i < instances; ++i) {
        const auto inst = testing::retrieval_instance(rng);
        const auto want = testing::recall_oracle(inst.u.rows, inst.v.rows, ks);
        const auto got = eval::recall_at_k(inst.u, inst.v, ks);
        EmbeddingBatch<float> uf{inst.u.rows.cast<float>(), inst.u.item_ids};
        EmbeddingBatch<float> vf{inst.v.rows.cast<float>(), inst.v.item_ids};
        const auto got_f = eval::recall_at_k(uf, vf, ks);
        agree += (got.i2t == want.i2t && got.t2i == want.t2i && got_f.i2t == want.i2t && got_f.t2i == want.t2i);
        const auto sim = contrastive::similarity_matrix(inst.u, inst.v);
        bool has_tie = false;
        for (std::size_t r = 0; r < sim.rows(); ++r)
            for (std::size_t j = 0; j < sim.cols(); ++j) has_tie |= j != r && sim.at(r, j) == sim.at(r, r);
        tied += has_tie ? 1 : 0;
    }
    return {agree == instances, format("%zu/%zu instances (N<=32, f64 and f32) equal the brute-force ranking oracle "
                                       "at k in {1,2,5,10}; %zu instances contain ties",
                                       agree, instances, tied)};
}

// ---------------------------------------------------------------------------

Outcome zero_shot() {
    std::mt19937_64 rng(8);
    const std::size_t instances = 50;
    std::size_t oracle = 0, invariant = 0;
    for (std::size_t i = 0; i < instances; ++i) {
        const auto inst = testing::zero_shot_instance(rng);
        const auto classes = eval::class_embeddings_from_prompts(inst.prompts, inst.classes);
        const auto base = eval::zero_shot_classify(inst.images, classes);
        oracle += base.predictions == testing::nearest_row_oracle(inst.images, classes.rows);
        bool same = eval::zero_shot_classify(inst.images, eval::class_embeddings_from_prompts(
                                                              testing::duplicate_templates(inst.prompts, inst.classes),
                                                              inst.classes))
                        .predictions == base.predictions;
        for (double s : {0.25, 3.7, 1e3})
            same = same && eval::zero_shot_classify(testing::scaled(inst.images, s), classes).predictions ==
                               base.predictions;
        invariant += same;
    }

    // The same properties through the towers and prompt templates.
    const synth::ConceptSpec spec;
    const auto vocab = synth::build_vocabulary(spec);
    const auto names = synth::class_names(spec);
    const auto text = towers::init_tower<float>(towers::default_text_config(), towers::LockMode::Random, 3);
    const auto image = towers::init_tower<float>(towers::default_image_config(), towers::LockMode::Random, 4);
    const auto set = synth::generate_labeled_set(spec, 256, 5);
    const auto features = towers::image_representation(image, synth::image_batch(set));
    auto templates = synth::prompt_templates();
    const auto classes = eval::build_class_embeddings(text, templates, names, vocab);
    templates.insert(templates.end(), synth::prompt_templates().begin(), synth::prompt_templates().end());
    const auto doubled = eval::build_class_embeddings(text, templates, names, vocab);
    const auto base = eval::zero_shot_classify(features, classes);
    bool tower_same = eval::zero_shot_classify(features, doubled).predictions == base.predictions;
    for (double s : {0.25, 3.7, 1e3})
        tower_same = tower_same &&
                     eval::zero_shot_classify(testing::scaled(features, s), classes).predictions == base.predictions;
    tower_same = tower_same && base.predictions == testing::nearest_row_oracle(features, classes.rows);

    const bool pass = oracle == instances && invariant == instances && tower_same;
    return {pass, format("%zu/%zu instances equal the nearest-row oracle; %zu/%zu identical under duplicated "
                         "templates and rescaling by {0.25, 3.7, 1e3}; tower pipeline on %zu images: %s",
                         oracle, instances, invariant, instances, set.size(), tower_same ? "identical" : "differs")};
}

// ---------------------------------------------------------------------------

Outcome dedup() {
    const runner::RunConfig c;
    auto corpus = synth::generate_corpus(c.data, c.splits, 9);
    std::mt19937_64 rng(9);
    std::set<std::uint64_t> planted;
    std::uint64_t next_id = 10'000'000;
    double min_cos = 1.0;
    auto plant = [&](std::vector<float> image) {
        synth::Example ex = corpus.train[planted.size()];
        ex.id = next_id++;
        ex.image = std::move(image);
        ex.content_hash = synth::content_hash(ex.image);
        planted.insert(ex.id);
        corpus.train.push_back(ex);
    };
    const std::size_t per_split = 10;
    for (const auto* split : {&corpus.eval.classification, &corpus.eval.retrieval, &corpus.eval.probe_train}) {
        for (std::size_t i = 0; i < per_split; ++i) {
            plant((*split)[i].image);
            const auto near = testing::near_copy((*split)[per_split + i].image, 0.999, rng);
            min_cos = std::min(min_cos, testing::cosine(near, (*split)[per_split + i].image));
            plant(near);
        }
    }
    const std::size_t before_matches = synth::remaining_matches(corpus.train, corpus.eval, synth::DedupPolicy::TrainTest);
    synth::apply_dedup(corpus, synth::DedupPolicy::TrainTest);
    const std::size_t after = synth::remaining_matches(corpus.train, corpus.eval, synth::DedupPolicy::TrainTest);
    std::size_t survivors = 0;
    for (const auto& ex : corpus.train) survivors += planted.count(ex.id);
    nlohmann::json report = corpus.dedup;
    const bool pass = after == 0 && survivors == 0 && corpus.dedup.removed_upstream >= planted.size() &&
                      corpus.dedup.exact_matches >= 3 * per_split && corpus.dedup.near_matches >= 3 * per_split &&
                      !report.dump().empty();
    return {pass, format("planted %zu exact + %zu near (cos >= %.4f) copies, %zu matches before, %zu after, %zu "
                         "planted survivors; report %s",
                         3 * per_split, 3 * per_split, min_cos, before_matches, after, survivors,
                         report.dump().c_str())};
}

// ---------------------------------------------------------------------------

Outcome schedules() {
    using namespace optim;
    std::vector<std::string> failed;
    auto expect = [&](bool ok, const char* what) {
        if (!ok) failed.push_back(what);
    };
    ScheduleSpec s;
    s.base_lr = 1e-3;
    s.warmup_steps = 10000;
    s.total_steps = 50000;
    const double warm = lr_at(5000, s, TowerRole::Image);
    expect(std::abs(warm - 5e-4) <= 1e-15, "warmup");
    const double mid = lr_at(30000, s, TowerRole::Text);
    expect(std::abs(mid - 5e-4) <= 1e-15, "cosine midpoint");

    auto delayed = s;
    delayed.variant = parse_variant("image-delayed");
    bool zero_region = true, text_live = true;
    for (std::size_t step = 0; step < 25000; ++step) {
        zero_region = zero_region && lr_at(step, delayed, TowerRole::Image) == 0.0;
        if (step > 0) text_live = text_live && lr_at(step, delayed, TowerRole::Text) > 0.0;
    }
    expect(zero_region, "image-delayed zero region");
    expect(text_live, "image-delayed text tower");
    expect(lr_at(37500, delayed, TowerRole::Image) > 0.0, "image-delayed restart");

    std::mt19937_64 rng(10);
    double worst_clip = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<TensorD> g;
        for (int k = 0; k < 3; ++k) g.push_back(testing::random_normal({1 + rng() % 7, 1 + rng() % 5}, rng, 10.0));
        std::vector<Tensor<double>*> ptrs;
        for (auto& t : g) ptrs.push_back(&t);
        clip_global_norm<double>(ptrs, 1.0);
        double ss = 0.0;
        for (auto& t : g)
            for (double v : t.values()) ss += v * v;
        worst_clip = std::max(worst_clip, std::sqrt(ss));
    }
    expect(worst_clip <= 1.0 + 1e-6, "clip");

    const double lr = 1e-3, wd = 1e-4;
    const std::size_t steps = 1000;
    Parameter<double> p("w", TensorD({3}, {1.5, -0.25, 4.0}));
    OptimizerConfig cfg;
    cfg.weight_decay = wd;
    OptimizerState<double> state;
    const ParamSlot<double> slots[] = {{&p, lr, true}};
    for (std::size_t t = 0; t < steps; ++t) {
        p.grad = TensorD({3});
        adam_update<double>(state, slots, cfg);
    }
    const double factor = std::pow(1.0 - lr * wd, double(steps));
    double decay_err = 0.0;
    const double start[] = {1.5, -0.25, 4.0};
    for (std::size_t i = 0; i < 3; ++i) decay_err = std::max(decay_err, std::abs(p.value[i] / (start[i] * factor) - 1.0));
    expect(decay_err <= 1e-12, "decoupled decay");

    std::string detail = format("lr(5000)=%.3g, midpoint %.3g, image-delayed zero on [0,25000), max clipped norm "
                                "%.9f, decay rel err %.1e after %zu steps",
                                warm, mid, worst_clip, decay_err, steps);
    for (const auto& f : failed) detail += "; FAILED " + f;
    return {failed.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lit-desk acceptance suite"};
    std::vector<int> only;
    app.add_option("criteria", only, "Criteria to run (default: all)")->check(CLI::Range(1, 10));
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"finite-difference gradients", gradients},
        {"gather-concat equivalence", gather_concat},
        {"random-embedding baseline", random_baseline},
        {"lock-code ordering", lock_ordering},
        {"global loss and batch size", batch_effects},
        {"embedding precompute", precompute},
        {"retrieval recall oracle", retrieval},
        {"zero-shot oracle and invariances", zero_shot},
        {"train+test dedup", dedup},
        {"schedules and optimizer", schedules},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        const auto t0 = Clock::now();
        Outcome out;
        try {
            out = criteria[i].second();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        failures += out.pass ? 0 : 1;
        std::printf("%s %2d %s: %s [%.1fs]\n", out.pass ? "PASS" : "FAIL", id, criteria[i].first, out.detail.c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
