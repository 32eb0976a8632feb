// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "lit/runner/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>

#include "lit/diffcore/memory.hpp"
#include "lit/eval/eval.hpp"
#include "lit/hash.hpp"
#include "lit/shardsim/shard.hpp"
#include "lit/synthdata/dedup.hpp"

namespace lit::runner {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

const towers::Checkpoint* need(const std::optional<towers::Checkpoint>& ckpt, towers::LockMode mode) {
    return mode == towers::LockMode::Random ? nullptr : (ckpt ? &*ckpt : nullptr);
}

EmbeddingBatch<float> image_embeddings(const towers::TowerState<float>& image, const std::vector<synth::Example>& split,
                                       const EmbeddingCache* cache) {
    std::vector<std::uint64_t> ids;
    for (const auto& ex : split) ids.push_back(ex.id);
    if (cache) {
        EmbeddingBatch<float> out;
        out.rows = cache->lookup(ids);
        out.item_ids = std::move(ids);
        out.normalized = true;
        return out;
    }
    return towers::encode_images(image, synth::image_batch(split), std::move(ids));
}

std::vector<std::int32_t> labels_of(const std::vector<synth::Example>& split) {
    std::vector<std::int32_t> out;
    for (const auto& ex : split) out.push_back(ex.class_id);
    return out;
}

// Rows of one signal kind inside a step: image rows and text rows per device.
// Joint supervision sums one loss per kind.
struct Term {
    std::vector<std::vector<std::size_t>> image_rows;
    std::vector<std::vector<std::size_t>> text_rows;
    std::size_t count = 0;
};

}  // namespace

Pretrained pretrain_for(const RunConfig& config, const synth::ConceptSpec& spec) {
    Pretrained out;
    if (config.lock.image != towers::LockMode::Random) {
        const auto labeled = synth::generate_labeled_set(spec, config.pretrain_items, mix_seed(config.data_seed, 0x1A));
        out.image = towers::pretrain_image_tower(config.image, synth::image_batch(labeled), labels_of(labeled),
                                                 spec.classes, config.pretrain)
                        .checkpoint;
    }
    if (config.lock.text != towers::LockMode::Random) {
        const auto vocab = synth::build_vocabulary(spec);
        const auto labeled = synth::generate_labeled_text(spec, config.pretrain_items, mix_seed(config.data_seed, 0x1B));
        std::vector<TokenSeq> tokens;
        for (const auto& ex : labeled) tokens.push_back(synth::tokenize(ex.description, vocab));
        out.text = towers::pretrain_text_tower(config.text, tokens, labels_of(labeled), spec.classes, config.pretrain)
                       .checkpoint;
    }
    return out;
}

MetricsRow evaluate(const RunConfig& config, const synth::Corpus& corpus, const towers::TowerState<float>& image,
                    const towers::TowerState<float>& text, const contrastive::LossConfig<float>& loss,
                    const EmbeddingCache* cache) {
    MetricsRow row;
    const auto vocab = synth::build_vocabulary(corpus.spec);
    const auto& ev = corpus.eval;

    if (!ev.classification.empty()) {
        const auto classes = eval::build_class_embeddings(text, synth::prompt_templates(),
                                                          synth::class_names(corpus.spec), vocab);
        const auto u = image_embeddings(image, ev.classification, cache);
        row.zero_shot_acc = eval::zero_shot_classify(u.rows, classes, labels_of(ev.classification)).accuracy;
    }
    if (!ev.retrieval.empty()) {
        const auto u = image_embeddings(image, ev.retrieval, cache);
        std::vector<TokenSeq> captions;
        for (const auto& ex : ev.retrieval) captions.push_back(synth::tokenize(ex.description, vocab));
        const auto v = towers::encode_texts(text, std::span<const TokenSeq>(captions), u.item_ids);
        const auto r = eval::recall_at_k(u, v);
        row.recall_i2t_1 = r.i2t.at(1);
        row.recall_i2t_5 = r.i2t.at(5);
        row.recall_i2t_10 = r.i2t.at(10);
        row.recall_t2i_1 = r.t2i.at(1);
        row.recall_t2i_5 = r.t2i.at(5);
        row.recall_t2i_10 = r.t2i.at(10);
        auto fixed = loss;
        fixed.learnable_temp = false;
        row.eval_loss = contrastive::contrastive_loss(u, v, fixed).loss;
    }
    if (!ev.probe_train.empty()) {
        const auto rep = towers::image_representation(image, synth::image_batch(ev.probe_train));
        row.probe_acc = eval::fewshot_probe(rep, labels_of(ev.probe_train), corpus.spec.classes, config.probe_shots,
                                            config.probe_lambda)
                            .accuracy;
    }
    return row;
}

TrainResult train(const RunConfig& config, const synth::Corpus& corpus, const Pretrained& pretrained,
                  const TrainOptions& options) {
    config.validate();
    if (corpus.spec.image_dim != config.image.input_dim || corpus.spec.vocab_size != config.text.vocab_size) {
        fail(Errc::InvalidConfig, "corpus dimensions do not match the tower configs");
    }
    const auto start = Clock::now();

    TrainResult res;
    res.image = towers::init_tower<float>(config.image, config.lock.image, mix_seed(config.seed, 1),
                                          need(pretrained.image, config.lock.image));
    res.text = towers::init_tower<float>(config.text, config.lock.text, mix_seed(config.seed, 2),
                                         need(pretrained.text, config.lock.text));
    res.loss = contrastive::LossConfig<float>::with_temperature(config.initial_temperature,
                                                                config.learnable_temperature);
    const EmbeddingCache* cache = options.cache;
    if (cache) {
        if (config.lock.image != towers::LockMode::Locked) fail(Errc::NotLocked, "a cache needs a locked image tower");
        cache->check(res.image);
    }

    std::vector<synth::Example> deduped;
    const std::vector<synth::Example>* train_set = &corpus.train;
    if (config.dedup != synth::DedupPolicy::None) {
        deduped = synth::dedup(corpus.train, corpus.eval, config.dedup).kept;
        train_set = &deduped;
    }
    const auto& examples = *train_set;
    res.train_examples = examples.size();
    if (examples.size() < config.batch) {
        fail(Errc::InvalidConfig, "batch " + std::to_string(config.batch) + " exceeds the " +
                                      std::to_string(examples.size()) + " training examples");
    }

    const auto vocab = synth::build_vocabulary(corpus.spec);
    const auto sched = config.schedule_spec();
    const auto layout = shard::ShardLayout::split(config.batch, config.devices);
    auto trainable_of = [](towers::TowerState<float>& tower) {
        auto ps = tower.all_parameters();
        std::erase_if(ps, [](const Parameter<float>* p) { return !p->trainable; });
        return ps;
    };
    const auto image_params = trainable_of(res.image);
    const auto text_params = trainable_of(res.text);
    const bool image_trains = !image_params.empty();
    optim::OptimizerState<float> opt_state;

    std::mt19937_64 order_rng(mix_seed(config.seed, 0xBA7C));
    const std::uint64_t text_stream = mix_seed(config.seed, 0x7E57);
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    std::size_t cursor = examples.size();

    double since_eval = 0.0;
    std::size_t since_count = 0;

    auto measure = [&](std::size_t step) {
        MetricsRow row = evaluate(config, corpus, res.image, res.text, res.loss, cache);
        row.step = step;
        row.lr_image = image_trains ? optim::lr_at(step, sched, optim::TowerRole::Image) : 0.0;
        row.lr_text = optim::lr_at(step, sched, optim::TowerRole::Text);
        row.wall_ms = ms_since(start);
        return row;
    };
    auto push = [&](const MetricsRow& row) {
        if (options.log) options.log->append(row);
        else if (!res.metrics.empty() && row.step <= res.metrics.back().step) {
            fail(Errc::InvalidConfig, "metrics step order violated");
        }
        res.metrics.push_back(row);
    };

    for (std::size_t step = 0;; ++step) {
        const bool update = step < config.steps;
        const bool eval_now = options.evaluate && (step == 0 || step == config.steps ||
                                                   (config.eval_every > 0 && step % config.eval_every == 0));
        std::optional<MetricsRow> first;
        if (eval_now) {
            auto row = measure(step);
            if (step == 0) {
                first = row;
            } else {
                row.train_loss = since_eval / static_cast<double>(since_count);
                since_eval = 0.0;
                since_count = 0;
                push(row);
            }
        }
        if (!update && step > 0) break;

        const auto step_start = Clock::now();
        memory::reset_peak();
        const std::size_t baseline = memory::live_bytes();

        if (cursor + config.batch > examples.size()) {
            std::shuffle(order.begin(), order.end(), order_rng);
            cursor = 0;
        }
        std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                                       order.begin() + static_cast<std::ptrdiff_t>(cursor + config.batch));
        cursor += config.batch;
        const std::uint64_t batch_seed = mix_seed(text_stream, step);

        std::vector<TokenSeq> texts;
        Term terms[3];
        for (auto& t : terms) {
            t.image_rows.resize(layout.devices);
            t.text_rows.resize(layout.devices);
        }
        for (std::size_t r = 0; r < config.batch; ++r) {
            const std::size_t device = r / layout.per_device;
            for (auto& s : synth::select_text(examples[batch[r]], config.signal, batch_seed, vocab)) {
                auto& term = terms[static_cast<std::size_t>(s.kind)];
                term.image_rows[device].push_back(r);
                term.text_rows[device].push_back(texts.size());
                ++term.count;
                texts.push_back(s.tokens);
            }
        }

        Tape<float> tape;
        NodeId img;
        if (cache) {
            std::vector<std::uint64_t> ids;
            for (auto i : batch) ids.push_back(examples[i].id);
            img = tape.constant(cache->lookup(ids));
        } else {
            img = towers::image_forward(tape, res.image, tape.constant(synth::image_batch(examples, batch)), image_trains);
        }
        const NodeId txt = towers::text_forward(tape, res.text, std::span<const TokenSeq>(texts), true);
        const NodeId lt = contrastive::temperature_node(tape, res.loss);

        std::vector<NodeId> parts;
        for (auto& term : terms) {
            if (term.count == 0) continue;
            std::vector<NodeId> us, vs;
            for (std::size_t d = 0; d < layout.devices; ++d) {
                us.push_back(tape.select_rows(img, term.image_rows[d]));
                vs.push_back(tape.select_rows(txt, term.text_rows[d]));
            }
            parts.push_back(config.global_loss ? shard::build_global(tape, us, vs, lt).loss
                                               : shard::build_local(tape, us, vs, lt).loss);
        }
        if (parts.empty()) fail(Errc::NoUsableSignal, "step " + std::to_string(step) + " has no usable text");
        NodeId loss = parts[0];
        for (std::size_t i = 1; i < parts.size(); ++i) loss = tape.add(loss, parts[i]);
        const double value = tape.value(loss).item();
        if (!std::isfinite(value)) fail(Errc::Diverged, "loss became non-finite at step " + std::to_string(step));

        if (first) {
            first->train_loss = value;
            push(*first);
        }
        if (!update) break;

        const auto grads = tape.backward(loss);
        std::vector<Parameter<float>*> owned = image_params;
        owned.insert(owned.end(), text_params.begin(), text_params.end());
        if (res.loss.learnable_temp) owned.push_back(&res.loss.log_temperature);
        std::vector<Tensor<float>*> grad_ptrs;
        for (auto* p : owned) {
            if (const auto* g = grads.param(*p)) {
                p->grad = *g;
                grad_ptrs.push_back(&p->grad);
            }
        }
        optim::clip_global_norm<float>(grad_ptrs, config.optimizer.clip_norm);

        const double lr_img = optim::lr_at(step, sched, optim::TowerRole::Image);
        const double lr_txt = optim::lr_at(step, sched, optim::TowerRole::Text);
        std::vector<optim::ParamSlot<float>> slots;
        for (auto* p : image_params) slots.push_back({p, lr_img, true});
        for (auto* p : text_params) slots.push_back({p, lr_txt, true});
        if (res.loss.learnable_temp) slots.push_back({&res.loss.log_temperature, lr_txt, false});
        optim::adam_update<float>(opt_state, slots, config.optimizer);
        for (auto* p : owned) p->grad = TensorF();
        res.loss.clamp();

        res.step_losses.push_back(value);
        res.images_seen += config.batch;
        since_eval += value;
        ++since_count;
        res.peak_step_bytes = std::max(res.peak_step_bytes, memory::peak_bytes() - baseline);
        res.train_seconds += ms_since(step_start) / 1000.0;
    }
    return res;
}

}  // namespace lit::runner
