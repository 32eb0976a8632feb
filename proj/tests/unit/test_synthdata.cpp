// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "lit/synthdata/corpus.hpp"
#include "lit/synthdata/corpus_io.hpp"
#include "lit/synthdata/dedup.hpp"
#include "support/oracles.hpp"

using namespace lit;
using namespace lit::synth;

namespace {

SplitSizes small_sizes() {
    SplitSizes s;
    s.train = 400;
    s.classification = 64;
    s.retrieval = 32;
    s.probe_train = 48;
    return s;
}

bool same_example(const Example& a, const Example& b) {
    return a.id == b.id && a.class_id == b.class_id && a.mode_id == b.mode_id && a.image == b.image &&
           a.title == b.title && a.description == b.description && a.tags == b.tags && a.has_title == b.has_title &&
           a.has_description == b.has_description && a.has_tags == b.has_tags && a.content_hash == b.content_hash;
}

bool same_split(const std::vector<Example>& a, const std::vector<Example>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!same_example(a[i], b[i])) return false;
    return true;
}

}  // namespace

TEST_CASE("vocabulary reserves pad and unk", "[synthdata]") {
    Vocabulary v;
    CHECK(v.size() == 2);
    CHECK(v.id("never-added") == kUnkId);
    const auto id = v.add("cat");
    CHECK(v.add("cat") == id);
    CHECK(v.word(id) == "cat");
    CHECK(v.contains("cat"));
}

TEST_CASE("tokenize lowercases, splits punctuation and pads", "[synthdata]") {
    Vocabulary v;
    const auto a = v.add("a"), photo = v.add("photo"), dot = v.add(".");
    const auto t = tokenize("A Photo.", v);
    CHECK(t[0] == a);
    CHECK(t[1] == photo);
    CHECK(t[2] == dot);
    for (std::size_t i = 3; i < t.size(); ++i) CHECK(t[i] == kPadId);
    CHECK(tokenize("zebra", v)[0] == kUnkId);
    std::string long_text;
    for (int i = 0; i < 100; ++i) long_text += "a ";
    CHECK(tokenize(long_text, v).back() == a);
}

TEST_CASE("title filter drops camera and numeric titles", "[synthdata]") {
    CHECK(filter_title("a red sunset over the hills"));
    CHECK_FALSE(filter_title("DSC_0042"));
    CHECK_FALSE(filter_title("IMG 1234"));
    CHECK_FALSE(filter_title("20190712"));
    CHECK_FALSE(filter_title(""));
}

TEST_CASE("tag composition is seeded", "[synthdata]") {
    const std::vector<std::string> tags = {"sea", "boat", "sky", "gull"};
    CHECK(compose_tags_text(tags, 5) == compose_tags_text(tags, 5));
    std::set<std::string> variants;
    for (std::uint64_t s = 0; s < 30; ++s) variants.insert(compose_tags_text(tags, s));
    CHECK(variants.size() > 1);
    for (const auto& t : tags) CHECK(compose_tags_text(tags, 9).find(t) != std::string::npos);
    try {
        compose_tags_text({}, 1);
        FAIL("expected EmptyTags");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::EmptyTags);
    }
}

TEST_CASE("prompt templates carry the class slot", "[synthdata]") {
    REQUIRE_FALSE(prompt_templates().empty());
    for (const auto& t : prompt_templates()) CHECK(instantiate(t, "tiger").find("tiger") != std::string::npos);
}

TEST_CASE("corpus generation is deterministic per seed", "[synthdata]") {
    const ConceptSpec spec;
    const auto a = generate_corpus(spec, small_sizes(), 7);
    const auto b = generate_corpus(spec, small_sizes(), 7);
    CHECK(same_split(a.train, b.train));
    CHECK(same_split(a.eval.classification, b.eval.classification));
    CHECK(same_split(a.eval.probe_train, b.eval.probe_train));
    const auto c = generate_corpus(spec, small_sizes(), 8);
    CHECK_FALSE(same_split(a.train, c.train));
}

TEST_CASE("splits have the requested sizes and disjoint ids", "[synthdata]") {
    const ConceptSpec spec;
    const auto corpus = generate_corpus(spec, small_sizes(), 1);
    CHECK(corpus.train.size() == 400);
    CHECK(corpus.eval.classification.size() == 64);
    CHECK(corpus.eval.retrieval.size() == 32);
    CHECK(corpus.eval.probe_train.size() == 48);
    std::set<std::uint64_t> ids;
    for (const auto* split : {&corpus.train, &corpus.eval.classification, &corpus.eval.retrieval,
                              &corpus.eval.probe_train}) {
        for (const auto& ex : *split) {
            CHECK(ids.insert(ex.id).second);
            CHECK(ex.image.size() == spec.image_dim);
            CHECK(ex.class_id >= 0);
            CHECK(static_cast<std::size_t>(ex.class_id) < spec.classes);
            CHECK(ex.content_hash == content_hash(ex.image));
        }
    }
}

TEST_CASE("every training example has a usable signal", "[synthdata]") {
    const ConceptSpec spec;
    const auto corpus = generate_corpus(spec, small_sizes(), 2);
    const auto vocab = build_vocabulary(spec);
    for (const auto& ex : corpus.train) {
        CHECK((ex.usable(SignalKind::Title) || ex.usable(SignalKind::Description) || ex.usable(SignalKind::Tags)));
        CHECK_FALSE(select_text(ex, SignalStrategy::Joint, 0, vocab).empty());
        CHECK(select_text(ex, SignalStrategy::PerImage, 3, vocab).size() == 1);
        CHECK(select_text(ex, SignalStrategy::PerBatch, 3, vocab).size() <= 1);
    }
    for (const auto& ex : corpus.eval.retrieval) CHECK(ex.usable(SignalKind::Description));
}

TEST_CASE("vocabulary covers class names and prompts", "[synthdata]") {
    const ConceptSpec spec;
    const auto vocab = build_vocabulary(spec);
    CHECK(vocab.size() <= spec.vocab_size);
    const auto names = class_names(spec);
    CHECK(names.size() == spec.classes);
    for (const auto& n : names) CHECK(vocab.contains(n));
    for (const auto& t : prompt_templates())
        for (auto id : tokenize(instantiate(t, names[0]), vocab)) CHECK(id != kUnkId);
}

TEST_CASE("labeled sets are clean", "[synthdata]") {
    const ConceptSpec spec;
    const auto set = generate_labeled_set(spec, 64, 3);
    CHECK(set.size() == 64);
    const auto text = generate_labeled_text(spec, 64, 3);
    for (const auto& ex : text) CHECK(ex.usable(SignalKind::Description));
}

TEST_CASE("invalid specs are rejected", "[synthdata]") {
    ConceptSpec bad;
    bad.caption_noise = 1.5;
    CHECK_THROWS_AS(bad.validate(), Error);
    ConceptSpec none;
    none.classes = 0;
    CHECK_THROWS_AS(none.validate(), Error);
}

TEST_CASE("corpus files round trip", "[synthdata]") {
    const auto corpus = generate_corpus(ConceptSpec{}, small_sizes(), 4);
    std::stringstream buf;
    write_corpus(buf, corpus);
    const auto back = read_corpus(buf);
    CHECK(back.spec == corpus.spec);
    CHECK(back.seed == corpus.seed);
    CHECK(same_split(back.train, corpus.train));
    CHECK(same_split(back.eval.retrieval, corpus.eval.retrieval));
    std::stringstream junk("LITX0000");
    CHECK_THROWS_AS(read_corpus(junk), Error);
}

TEST_CASE("dedup removes planted exact and near duplicates", "[synthdata][dedup]") {
    auto corpus = generate_corpus(ConceptSpec{}, small_sizes(), 5);
    std::mt19937_64 rng(5);
    std::set<std::uint64_t> planted;
    std::uint64_t next_id = 1'000'000;
    auto plant = [&](std::vector<float> image) {
        Example ex = corpus.train[planted.size()];
        ex.id = next_id++;
        ex.image = std::move(image);
        ex.content_hash = content_hash(ex.image);
        planted.insert(ex.id);
        corpus.train.push_back(ex);
    };
    for (std::size_t i = 0; i < 5; ++i) {
        plant(corpus.eval.classification[i].image);
        const auto near = testing::near_copy(corpus.eval.retrieval[i].image, 0.999, rng);
        CHECK(testing::cosine(near, corpus.eval.retrieval[i].image) == Catch::Approx(0.999).margin(1e-5));
        plant(near);
        plant(testing::near_copy(corpus.eval.probe_train[i].image, 0.999, rng));
    }
    const std::size_t before = corpus.train.size();
    CHECK(remaining_matches(corpus.train, corpus.eval, DedupPolicy::TrainTest) >= 15);

    const auto test_only = dedup(corpus.train, corpus.eval, DedupPolicy::TestOnly);
    CHECK(remaining_matches(test_only.kept, corpus.eval, DedupPolicy::TestOnly) == 0);
    CHECK(remaining_matches(test_only.kept, corpus.eval, DedupPolicy::TrainTest) >= 5);

    apply_dedup(corpus, DedupPolicy::TrainTest);
    CHECK(remaining_matches(corpus.train, corpus.eval, DedupPolicy::TrainTest) == 0);
    for (const auto& ex : corpus.train) CHECK(planted.count(ex.id) == 0);
    CHECK(corpus.dedup.policy == "train+test");
    CHECK(corpus.dedup.removed_upstream == before - corpus.train.size());
    CHECK(corpus.dedup.removed_upstream >= 15);
    CHECK(corpus.dedup.matched_eval >= 15);
    CHECK(corpus.dedup.exact_matches >= 5);
    CHECK(corpus.dedup.near_matches >= 10);
}

TEST_CASE("dedup none keeps everything", "[synthdata][dedup]") {
    const auto corpus = generate_corpus(ConceptSpec{}, small_sizes(), 6);
    const auto out = dedup(corpus.train, corpus.eval, DedupPolicy::None);
    CHECK(out.kept.size() == corpus.train.size());
    CHECK(out.report.removed_upstream == 0);
    CHECK(parse_dedup("train+test") == DedupPolicy::TrainTest);
    CHECK_THROWS_AS(parse_dedup("all"), Error);
}
