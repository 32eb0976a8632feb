// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "lit/optsched/adam.hpp"
#include "lit/towers/checkpoint.hpp"
#include "lit/towers/tower.hpp"
#include "support/gradcheck.hpp"

using namespace lit;
using namespace lit::towers;

namespace {

TowerConfig small_config(TowerKind kind, Modality modality, bool head) {
    TowerConfig c = modality == Modality::Image ? default_image_config() : default_text_config();
    c.kind = kind;
    c.width = 16;
    c.depth = kind == TowerKind::Mlp ? 3 : 2;
    c.heads = 4;
    c.embed_dim = 8;
    c.input_dim = 16;
    c.patches = 4;
    c.vocab_size = 40;
    c.head = head;
    return c;
}

Checkpoint random_checkpoint(const TowerConfig& c, std::uint64_t seed) {
    return make_checkpoint(init_tower<float>(c, LockMode::Random, seed));
}

TensorF random_images(std::size_t n, std::size_t dim, std::mt19937_64& rng) {
    return testing::random_normal({n, dim}, rng).cast<float>();
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

template <typename Fn>
Errc error_of(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return Errc::IoError;
}

}  // namespace

TEST_CASE("init_tower lock modes", "[towers]") {
    const auto cfg = small_config(TowerKind::Mlp, Modality::Text, true);
    const auto ckpt = random_checkpoint(cfg, 1);

    const auto locked = init_tower<float>(cfg, LockMode::Locked, 7, &ckpt);
    for (const auto& p : locked.params) CHECK_FALSE(p.trainable);
    REQUIRE(locked.head.size() == 2);
    for (const auto& p : locked.head) CHECK(p.trainable);

    const auto unlocked = init_tower<float>(cfg, LockMode::Unlocked, 7, &ckpt);
    for (const auto& p : unlocked.params) CHECK(p.trainable);
    CHECK(unlocked.params[0].value == ckpt.tensors[0].value);

    const auto random = init_tower<float>(cfg, LockMode::Random, 7);
    for (const auto& p : random.params) CHECK(p.trainable);

    CHECK(error_of([&] { init_tower<float>(cfg, LockMode::Locked, 7); }) == Errc::ModeMismatch);
    CHECK(error_of([&] { init_tower<float>(cfg, LockMode::Random, 7, &ckpt); }) == Errc::ModeMismatch);
}

TEST_CASE("init draws truncated normal weights and zero biases", "[towers]") {
    auto cfg = small_config(TowerKind::Mlp, Modality::Image, false);
    cfg.width = 128;
    const auto t = init_tower<double>(cfg, LockMode::Random, 3);
    double ss = 0.0;
    std::size_t n = 0;
    for (double v : t.param("layer1.weight").value.values()) {
        CHECK(std::abs(v) <= 0.04);
        ss += v * v;
        ++n;
    }
    CHECK(std::sqrt(ss / n) == Catch::Approx(0.02 * 0.8796).epsilon(0.05));
    for (double v : t.param("layer1.bias").value.values()) CHECK(v == 0.0);
}

TEST_CASE("checkpoint shape mismatch is detected", "[towers]") {
    auto cfg = small_config(TowerKind::TinyTransformer, Modality::Image, false);
    const auto ckpt = random_checkpoint(cfg, 1);
    auto other = cfg;
    other.width = 32;
    CHECK(error_of([&] { init_tower<float>(other, LockMode::Locked, 0, &ckpt); }) == Errc::CheckpointMismatch);

    auto tampered = ckpt;
    tampered.tensors[0].value = TensorF({3, 3});
    CHECK(error_of([&] { init_tower<float>(cfg, LockMode::Locked, 0, &tampered); }) == Errc::CheckpointMismatch);
}

TEST_CASE("checkpoint files round trip", "[towers]") {
    const auto cfg = small_config(TowerKind::TinyTransformer, Modality::Text, true);
    const auto tower = init_tower<float>(cfg, LockMode::Random, 9);
    const auto ckpt = make_checkpoint(tower, true);
    std::stringstream buf;
    write_checkpoint(buf, ckpt);
    const auto back = read_checkpoint(buf);
    CHECK(back.config_digest == ckpt.config_digest);
    REQUIRE(back.tensors.size() == ckpt.tensors.size());
    for (std::size_t i = 0; i < ckpt.tensors.size(); ++i) {
        CHECK(back.tensors[i].name == ckpt.tensors[i].name);
        CHECK(back.tensors[i].value == ckpt.tensors[i].value);
    }

    auto restored = init_tower<float>(cfg, LockMode::Unlocked, 123, &back);
    load_head(restored, back);
    CHECK(restored.digest() == tower.digest());

    std::stringstream junk("NOPE....");
    CHECK(error_of([&] { read_checkpoint(junk); }) == Errc::FormatError);
    std::string bytes = buf.str();
    std::stringstream truncated;
    write_checkpoint(truncated, ckpt);
    std::string cut = truncated.str().substr(0, truncated.str().size() - 5);
    std::stringstream cut_stream(cut);
    CHECK(error_of([&] { read_checkpoint(cut_stream); }) == Errc::FormatError);
}

TEST_CASE("encoders produce unit rows", "[towers]") {
    std::mt19937_64 rng(4);
    for (auto kind : {TowerKind::Mlp, TowerKind::TinyTransformer}) {
        for (bool head : {false, true}) {
            const auto img = init_tower<float>(small_config(kind, Modality::Image, head), LockMode::Random, 1);
            const auto txt = init_tower<float>(small_config(kind, Modality::Text, head), LockMode::Random, 1);
            const auto u = encode_images(img, random_images(9, 16, rng));
            const auto toks = random_tokens(9, 40, rng);
            const auto v = encode_texts<float>(txt, toks);
            for (const auto* batch : {&u, &v}) {
                CHECK(batch->size() == 9);
                CHECK(batch->dim() == (head ? 8u : 16u));
                for (std::size_t r = 0; r < 9; ++r) {
                    double n = 0.0;
                    for (float x : batch->rows.row(r)) n += double(x) * x;
                    CHECK(std::abs(std::sqrt(n) - 1.0) <= 1e-6);
                }
            }
        }
    }
}

TEST_CASE("encoders handle empty batches and bad shapes", "[towers]") {
    const auto img = init_tower<float>(small_config(TowerKind::Mlp, Modality::Image, true), LockMode::Random, 1);
    const auto empty = encode_images(img, TensorF::matrix(0, 16));
    CHECK(empty.size() == 0);
    CHECK(error_of([&] { encode_images(img, TensorF::matrix(2, 15)); }) == Errc::ShapeMismatch);

    const auto txt = init_tower<float>(small_config(TowerKind::Mlp, Modality::Text, true), LockMode::Random, 1);
    std::vector<TokenSeq> toks(1);
    toks[0].fill(kPadId);
    CHECK(error_of([&] { encode_texts<float>(txt, toks); }) == Errc::PoolEmpty);
    toks[0][0] = 40;
    CHECK(error_of([&] { encode_texts<float>(txt, toks); }) == Errc::TokenOutOfRange);
}

TEST_CASE("encoding is deterministic and row independent", "[towers]") {
    std::mt19937_64 rng(8);
    for (auto kind : {TowerKind::Mlp, TowerKind::TinyTransformer}) {
        const auto img = init_tower<float>(small_config(kind, Modality::Image, true), LockMode::Random, 2);
        for (int trial = 0; trial < 100; ++trial) {
            auto x = random_images(4, 16, rng);
            std::copy(x.row(0).begin(), x.row(0).end(), x.row(3).begin());
            const auto a = encode_images(img, x);
            const auto b = encode_images(img, x);
            CHECK(a.rows == b.rows);
            CHECK(std::equal(a.rows.row(0).begin(), a.rows.row(0).end(), a.rows.row(3).begin()));
        }
    }
}

TEST_CASE("padding is neutral", "[towers]") {
    std::mt19937_64 rng(12);
    for (auto kind : {TowerKind::Mlp, TowerKind::TinyTransformer}) {
        const auto cfg = small_config(kind, Modality::Text, true);
        const auto tower = init_tower<float>(cfg, LockMode::Random, 5);
        auto scrambled = tower;
        // The pad row of the embedding table must never reach the output.
        for (auto& v : scrambled.param("embed.weight").value.row(kPadId)) v = 3.0f;
        for (int trial = 0; trial < 100; ++trial) {
            const auto toks = random_tokens(6, cfg.vocab_size, rng);
            const auto batch = encode_texts<float>(tower, toks);
            CHECK(encode_texts<float>(scrambled, toks).rows == batch.rows);
            // A sequence encoded alone matches its row in a mixed-length batch.
            const std::vector<TokenSeq> single{toks[trial % 6]};
            const auto alone = encode_texts<float>(tower, single);
            const auto row = batch.rows.row(trial % 6);
            for (std::size_t c = 0; c < row.size(); ++c) CHECK(std::abs(alone.rows.at(0, c) - row[c]) <= 1e-6f);
        }
    }
}

TEST_CASE("random towers differ across seeds", "[towers]") {
    std::mt19937_64 rng(3);
    const auto cfg = small_config(TowerKind::Mlp, Modality::Text, true);
    const auto toks = random_tokens(4, cfg.vocab_size, rng);
    const auto a = encode_texts<float>(init_tower<float>(cfg, LockMode::Random, 1), toks);
    const auto b = encode_texts<float>(init_tower<float>(cfg, LockMode::Random, 2), toks);
    CHECK_FALSE(a.rows == b.rows);
    CHECK(init_tower<float>(cfg, LockMode::Random, 1).digest() != init_tower<float>(cfg, LockMode::Random, 2).digest());
}

TEST_CASE("locked towers pass gradients to the head only", "[towers]") {
    std::mt19937_64 rng(21);
    for (auto kind : {TowerKind::Mlp, TowerKind::TinyTransformer}) {
        const auto cfg = small_config(kind, Modality::Image, true);
        const auto ckpt = random_checkpoint(cfg, 4);
        auto tower = init_tower<float>(cfg, LockMode::Locked, 0, &ckpt);
        const auto x = random_images(8, 16, rng);
        const auto target = random_images(8, 8, rng);
        const auto body_before = tower.params;
        const auto repr_before = image_representation(tower, x);

        optim::OptimizerState<float> state;
        for (int step = 0; step < 100; ++step) {
            Tape<float> tape;
            const NodeId y = image_forward(tape, tower, tape.constant(x));
            const auto grads = tape.backward(tape.sum(tape.mul(y, tape.constant(target))));
            std::vector<optim::ParamSlot<float>> slots;
            for (auto* p : tower.all_parameters()) {
                if (const auto* g = grads.param(*p)) p->grad = *g;
                slots.push_back({p, 1e-2, true});
            }
            if (step == 0) {
                for (const auto& p : tower.params) CHECK(grads.param(p) == nullptr);
                double head_norm = 0.0;
                for (float g : grads.param(tower.head[0])->values()) head_norm += std::abs(g);
                CHECK(head_norm > 0.0);
            }
            optim::adam_update<float>(state, slots, optim::OptimizerConfig{});
        }
        for (std::size_t i = 0; i < tower.params.size(); ++i) CHECK(tower.params[i].value == body_before[i].value);
        CHECK(image_representation(tower, x) == repr_before);
    }
}

TEST_CASE("tower gradients match finite differences", "[towers][gradcheck]") {
    std::mt19937_64 rng(17);
    for (auto kind : {TowerKind::Mlp, TowerKind::TinyTransformer}) {
        for (auto modality : {Modality::Image, Modality::Text}) {
            auto cfg = small_config(kind, modality, true);
            cfg.width = 8;
            cfg.embed_dim = 4;
            cfg.input_dim = 8;
            cfg.vocab_size = 12;
            auto tower = init_tower<double>(cfg, LockMode::Random, 11);
            for (auto* p : tower.all_parameters()) {
                for (auto& v : p->value.values()) v += 0.3 * testing::random_normal({1}, rng)[0];
            }
            const auto x = testing::random_normal({3, 8}, rng);
            const auto toks = random_tokens(3, cfg.vocab_size, rng);
            const auto w = testing::random_normal({3, 4}, rng);

            auto loss_of = [&](Tape<double>& tape) {
                const NodeId y = modality == Modality::Image ? image_forward(tape, tower, tape.constant(x))
                                                              : text_forward<double>(tape, tower, toks);
                return tape.sum(tape.mul(y, tape.constant(w)));
            };
            Tape<double> tape;
            const auto grads = tape.backward(loss_of(tape));
            for (auto* p : tower.all_parameters()) {
                INFO(to_string(kind) << ' ' << p->name);
                const TensorD* analytic = grads.param(*p);
                REQUIRE(analytic != nullptr);
                const TensorD saved = p->value;
                auto f = [&](const TensorD& probe) {
                    p->value = probe;
                    Tape<double> t;
                    const double v = t.value(loss_of(t)).item();
                    p->value = saved;
                    return v;
                };
                const auto numeric = finite_diff_grad<double>(f, saved, 1e-5);
                if (p->name.ends_with("attn.k.bias")) {
                    // Softmax is shift invariant per query, so this gradient is identically zero.
                    for (double g : analytic->values()) CHECK(std::abs(g) <= 1e-12);
                    for (double g : numeric.values()) CHECK(std::abs(g) <= 1e-9);
                    continue;
                }
                CHECK(testing::relative_error(*analytic, numeric) <= 1e-4);
            }
        }
    }
}
