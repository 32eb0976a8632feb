// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "lit/towers/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lit/hash.hpp"
#include "lit/optsched/adam.hpp"
#include "lit/optsched/schedule.hpp"

namespace lit::towers {

namespace {

// Batch source: rows of an image matrix or a list of token sequences.
struct ImageSource {
    const TensorF& images;
    std::size_t size() const { return images.rows(); }
    NodeId body(Tape<float>& tape, const TowerState<float>& tower, std::span<const std::size_t> rows, bool track) const {
        TensorF x = TensorF::matrix(rows.size(), images.cols());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            std::copy(images.row(rows[r]).begin(), images.row(rows[r]).end(), x.row(r).begin());
        }
        return image_body(tape, tower, tape.constant(std::move(x)), track);
    }
};

struct TextSource {
    const std::vector<TokenSeq>& tokens;
    std::size_t size() const { return tokens.size(); }
    NodeId body(Tape<float>& tape, const TowerState<float>& tower, std::span<const std::size_t> rows, bool track) const {
        std::vector<TokenSeq> batch;
        batch.reserve(rows.size());
        for (auto r : rows) batch.push_back(tokens[r]);
        return text_body(tape, tower, std::span<const TokenSeq>(batch), track);
    }
};

template <typename Source>
NodeId logits(Tape<float>& tape, const TowerState<float>& tower, const Parameter<float>& w, const Parameter<float>& b,
              const Source& src, std::span<const std::size_t> rows, bool track) {
    const NodeId rep = src.body(tape, tower, rows, track);
    return tape.add_bias(tape.matmul(rep, tape.param(w, track)), tape.param(b, track));
}

template <typename Source>
double accuracy(const TowerState<float>& tower, const Parameter<float>& w, const Parameter<float>& b, const Source& src,
                const std::vector<std::int32_t>& labels) {
    constexpr std::size_t kChunk = 512;
    std::size_t correct = 0;
    const std::size_t n = src.size();
    std::vector<std::size_t> rows;
    for (std::size_t start = 0; start < n; start += kChunk) {
        const std::size_t end = std::min(n, start + kChunk);
        rows.resize(end - start);
        std::iota(rows.begin(), rows.end(), start);
        Tape<float> tape;
        const auto& out = tape.value(logits(tape, tower, w, b, src, rows, false));
        for (std::size_t r = 0; r < out.rows(); ++r) {
            const auto row = out.row(r);
            const auto best = static_cast<std::int32_t>(std::max_element(row.begin(), row.end()) - row.begin());
            correct += best == labels[start + r] ? 1 : 0;
        }
    }
    return n == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(n);
}

template <typename Source>
PretrainResult pretrain(const TowerConfig& config, const Source& src, const std::vector<std::int32_t>& labels,
                        std::size_t classes, const PretrainOptions& options) {
    if (classes < 2) fail(Errc::BadSpec, "pretraining needs at least two classes");
    if (src.size() != labels.size()) fail(Errc::BatchMismatch, "input count differs from label count");
    if (src.size() == 0 || options.batch == 0) fail(Errc::BadSpec, "empty labeled set or batch");
    for (auto l : labels) {
        if (l < 0 || static_cast<std::size_t>(l) >= classes) fail(Errc::BadSpec, "label out of range");
    }

    TowerConfig body = config;
    body.head = false;
    auto tower = init_tower<float>(body, LockMode::Random, options.seed);
    std::mt19937_64 rng(mix_seed(options.seed, 0x5052));
    Parameter<float> cls_w("classifier.weight", TensorF::matrix(body.width, classes));
    Parameter<float> cls_b("classifier.bias", TensorF({classes}));
    {
        std::normal_distribution<double> n(0.0, 0.02);
        for (auto& v : cls_w.value.values()) v = static_cast<float>(n(rng));
    }

    optim::OptimizerConfig opt;
    opt.base_lr = options.lr;
    opt.weight_decay = options.weight_decay;
    optim::OptimizerState<float> state;
    optim::ScheduleSpec sched;
    sched.base_lr = options.lr;
    sched.total_steps = options.steps;
    sched.warmup_steps = std::min(options.warmup_steps, options.steps);

    const std::size_t n = src.size();
    const std::size_t batch = std::min(options.batch, n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::size_t cursor = n;

    PretrainResult result;
    std::vector<std::size_t> rows(batch), targets(batch);
    for (std::size_t step = 0; step < options.steps; ++step) {
        if (cursor + batch > n) {
            std::shuffle(order.begin(), order.end(), rng);
            cursor = 0;
        }
        for (std::size_t r = 0; r < batch; ++r) {
            rows[r] = order[cursor + r];
            targets[r] = static_cast<std::size_t>(labels[rows[r]]);
        }
        cursor += batch;

        Tape<float> tape;
        const NodeId loss = tape.nll(tape.log_softmax(logits(tape, tower, cls_w, cls_b, src, rows, true)), targets);
        const float value = tape.value(loss).item();
        if (!std::isfinite(value)) fail(Errc::Diverged, "pretraining loss became non-finite at step " + std::to_string(step));
        result.final_loss = value;
        const auto grads = tape.backward(loss);

        std::vector<Parameter<float>*> params = tower.all_parameters();
        params.push_back(&cls_w);
        params.push_back(&cls_b);
        std::vector<Tensor<float>*> grad_ptrs;
        for (auto* p : params) {
            if (const auto* g = grads.param(*p)) {
                p->grad = *g;
                grad_ptrs.push_back(&p->grad);
            }
        }
        optim::clip_global_norm<float>(grad_ptrs, opt.clip_norm);
        const double lr = optim::lr_at(step, sched, optim::TowerRole::Image);
        std::vector<optim::ParamSlot<float>> slots;
        for (auto* p : params) slots.push_back({p, lr, true});
        optim::adam_update<float>(state, slots, opt);
        for (auto* p : params) p->grad = TensorF();
    }

    result.train_accuracy = accuracy(tower, cls_w, cls_b, src, labels);
    result.checkpoint = make_checkpoint(tower);
    return result;
}

}  // namespace

PretrainResult pretrain_image_tower(const TowerConfig& config, const TensorF& images,
                                    const std::vector<std::int32_t>& labels, std::size_t classes,
                                    const PretrainOptions& options) {
    if (config.modality != Modality::Image) fail(Errc::InvalidConfig, "pretraining needs an image tower config");
    if (images.rank() != 2) fail(Errc::ShapeMismatch, "image batch must be a matrix");
    return pretrain(config, ImageSource{images}, labels, classes, options);
}

PretrainResult pretrain_text_tower(const TowerConfig& config, const std::vector<TokenSeq>& tokens,
                                   const std::vector<std::int32_t>& labels, std::size_t classes,
                                   const PretrainOptions& options) {
    if (config.modality != Modality::Text) fail(Errc::InvalidConfig, "pretraining needs a text tower config");
    return pretrain(config, TextSource{tokens}, labels, classes, options);
}

}  // namespace lit::towers
