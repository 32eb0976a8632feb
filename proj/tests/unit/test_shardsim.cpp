// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "lit/shardsim/shard.hpp"
#include "support/gradcheck.hpp"

using namespace lit;
using namespace lit::shard;

namespace {

EmbeddingBatch<double> unit_batch(std::size_t n, std::size_t d, std::mt19937_64& rng, std::uint64_t first_id = 0) {
    EmbeddingBatch<double> b;
    b.rows = l2_normalize(testing::random_normal({n, d}, rng));
    for (std::size_t i = 0; i < n; ++i) b.item_ids.push_back(first_id + i);
    b.normalized = true;
    return b;
}

double max_abs_diff(const TensorD& a, const TensorD& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
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

}  // namespace

TEST_CASE("split requires an even partition", "[shardsim]") {
    CHECK(ShardLayout::split(256, 4).per_device == 64);
    CHECK(ShardLayout::split(7, 1).global() == 7);
    CHECK(error_of([] { ShardLayout::split(10, 4); }) == Errc::IndivisibleBatch);
    CHECK(error_of([] { ShardLayout::split(8, 0); }) == Errc::IndivisibleBatch);
}

TEST_CASE("shard then gather is the identity", "[shardsim]") {
    std::mt19937_64 rng(1);
    const auto u = unit_batch(12, 5, rng), v = unit_batch(12, 5, rng, 100);
    for (std::size_t d : {1u, 2u, 3u, 4u, 6u, 12u}) {
        auto views = shard_batch(u, v, ShardLayout::split(12, d));
        REQUIRE(views.size() == d);
        for (std::size_t r = 0; r < d; ++r) {
            CHECK(views[r].rank == static_cast<int>(r));
            CHECK(views[r].local_u.shard == static_cast<int>(r));
            CHECK(views[r].local_u.item_ids.front() == r * (12 / d));
        }
        std::reverse(views.begin(), views.end());
        const auto gu = all_gather<double>(views, Field::U);
        const auto gv = all_gather<double>(views, Field::V);
        CHECK(gu.rows == u.rows);
        CHECK(gv.rows == v.rows);
        CHECK(gu.item_ids == u.item_ids);
        CHECK(gv.item_ids == v.item_ids);
    }
}

TEST_CASE("gather rejects missing and duplicate ranks", "[shardsim]") {
    std::mt19937_64 rng(2);
    const auto u = unit_batch(8, 3, rng), v = unit_batch(8, 3, rng);
    auto views = shard_batch(u, v, ShardLayout::split(8, 4));
    auto dup = views;
    dup[2].rank = 1;
    CHECK(error_of([&] { all_gather<double>(dup, Field::U); }) == Errc::DuplicateRank);
    auto missing = views;
    missing[3].rank = 7;
    CHECK(error_of([&] { all_gather<double>(missing, Field::U); }) == Errc::MissingRank);
    CHECK(error_of([&] { shard_batch(u, v, ShardLayout{3, 3}); }) == Errc::IndivisibleBatch);
}

TEST_CASE("global loss equals the single-device loss", "[shardsim]") {
    std::mt19937_64 rng(3);
    const auto cfg = contrastive::LossConfig<double>::with_temperature(0.1);
    for (int trial = 0; trial < 5; ++trial) {
        const auto u = unit_batch(16, 6, rng), v = unit_batch(16, 6, rng);
        const auto single = contrastive::contrastive_loss(u, v, cfg);
        for (std::size_t d : {1u, 2u, 4u, 8u}) {
            const auto views = shard_batch(u, v, ShardLayout::split(16, d));
            const auto sharded = global_loss<double>(views, cfg);
            CHECK(std::abs(sharded.total.loss - single.loss) <= 1e-12);
            CHECK(max_abs_diff(sharded.total.grad_u, single.grad_u) <= 1e-12);
            CHECK(max_abs_diff(sharded.total.grad_v, single.grad_v) <= 1e-12);
            CHECK(std::abs(sharded.total.grad_log_temperature - single.grad_log_temperature) <= 1e-12);
        }
    }
}

TEST_CASE("local loss is the mean of per-device losses", "[shardsim]") {
    std::mt19937_64 rng(4);
    const auto cfg = contrastive::LossConfig<double>::with_temperature(0.2);
    const auto u = unit_batch(12, 4, rng), v = unit_batch(12, 4, rng);
    const auto views = shard_batch(u, v, ShardLayout::split(12, 3));
    double mean = 0.0;
    for (const auto& view : views) mean += contrastive::contrastive_loss(view.local_u, view.local_v, cfg).loss / 3.0;
    CHECK(local_loss<double>(views, cfg).total.loss == Catch::Approx(mean).epsilon(1e-13));
    const auto one = shard_batch(u, v, ShardLayout::split(12, 1));
    CHECK(local_loss<double>(one, cfg).total.loss ==
          Catch::Approx(global_loss<double>(one, cfg).total.loss).epsilon(1e-14));
}

TEST_CASE("local loss sees fewer negatives", "[shardsim]") {
    // Identical rows within the batch: every negative scores like a positive.
    EmbeddingBatch<double> u;
    u.rows = TensorD({8, 2});
    for (std::size_t i = 0; i < 8; ++i) u.rows.at(i, 0) = 1.0;
    u.item_ids = iota_ids(8);
    const auto cfg = contrastive::LossConfig<double>::with_temperature(1.0);
    const auto views = shard_batch(u, u, ShardLayout::split(8, 4));
    CHECK(global_loss<double>(views, cfg).total.loss == Catch::Approx(std::log(8.0)).epsilon(1e-14));
    CHECK(local_loss<double>(views, cfg).total.loss == Catch::Approx(std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("sharded graphs match finite differences", "[shardsim][gradcheck]") {
    std::mt19937_64 rng(6);
    for (bool global : {true, false}) {
        for (int trial = 0; trial < 4; ++trial) {
            const std::size_t d = 1 + static_cast<std::size_t>(trial % 3), b = 2;
            std::vector<TensorD> inputs;
            for (std::size_t r = 0; r < 2 * d; ++r) inputs.push_back(testing::random_normal({b, 3}, rng));
            inputs.push_back(testing::random_normal({}, rng, 0.5));
            testing::GradCase c{"sharded", inputs, [d, global](Tape<double>& t, const std::vector<NodeId>& x) {
                                    std::vector<NodeId> u, v;
                                    for (std::size_t r = 0; r < d; ++r) {
                                        u.push_back(t.l2_normalize(x[r]));
                                        v.push_back(t.l2_normalize(x[d + r]));
                                    }
                                    return global ? build_global<double>(t, u, v, x[2 * d]).loss
                                                  : build_local<double>(t, u, v, x[2 * d]).loss;
                                }};
            CHECK(testing::gradcheck(c, 50 + trial) <= 1e-4);
        }
    }
}

TEST_CASE("empty ranks are skipped", "[shardsim]") {
    std::mt19937_64 rng(7);
    const auto u = unit_batch(4, 3, rng), v = unit_batch(4, 3, rng);
    Tape<double> tape;
    const auto cfg = contrastive::LossConfig<double>::with_temperature(0.3);
    const NodeId lt = contrastive::temperature_node(tape, cfg);
    const NodeId parts_u[] = {tape.constant(u.rows), tape.constant(TensorD({0, 3}))};
    const NodeId parts_v[] = {tape.constant(v.rows), tape.constant(TensorD({0, 3}))};
    const auto nodes = build_global<double>(tape, parts_u, parts_v, lt);
    CHECK(tape.value(nodes.loss).item() == Catch::Approx(contrastive::contrastive_loss(u, v, cfg).loss).epsilon(1e-14));
}
