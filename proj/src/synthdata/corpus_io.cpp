// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "lit/synthdata/corpus_io.hpp"

#include <fstream>

#include "lit/binio.hpp"
#include "lit/error.hpp"

namespace lit::synth {

void to_json(nlohmann::json& j, const ConceptSpec& s) {
    j = nlohmann::json{{"classes", s.classes},
                       {"latent_dim", s.latent_dim},
                       {"image_dim", s.image_dim},
                       {"vocab_size", s.vocab_size},
                       {"words_per_class", s.words_per_class},
                       {"modes_per_class", s.modes_per_class},
                       {"mode_spread", s.mode_spread},
                       {"mode_skew", s.mode_skew},
                       {"latent_sigma", s.latent_sigma},
                       {"noise_sigma", s.noise_sigma},
                       {"caption_noise", s.caption_noise},
                       {"junk_title_prob", s.junk_title_prob},
                       {"drop_prob", s.drop_prob},
                       {"world_seed", s.world_seed}};
}

void from_json(const nlohmann::json& j, ConceptSpec& s) {
    ConceptSpec d;
    s.classes = j.value("classes", d.classes);
    s.latent_dim = j.value("latent_dim", d.latent_dim);
    s.image_dim = j.value("image_dim", d.image_dim);
    s.vocab_size = j.value("vocab_size", d.vocab_size);
    s.words_per_class = j.value("words_per_class", d.words_per_class);
    s.modes_per_class = j.value("modes_per_class", d.modes_per_class);
    s.mode_spread = j.value("mode_spread", d.mode_spread);
    s.mode_skew = j.value("mode_skew", d.mode_skew);
    s.latent_sigma = j.value("latent_sigma", d.latent_sigma);
    s.noise_sigma = j.value("noise_sigma", d.noise_sigma);
    s.caption_noise = j.value("caption_noise", d.caption_noise);
    s.junk_title_prob = j.value("junk_title_prob", d.junk_title_prob);
    s.drop_prob = j.value("drop_prob", d.drop_prob);
    s.world_seed = j.value("world_seed", d.world_seed);
}

void to_json(nlohmann::json& j, const SplitSizes& s) {
    j = nlohmann::json{{"train", s.train},
                       {"classification", s.classification},
                       {"retrieval", s.retrieval},
                       {"probe_train", s.probe_train}};
}

void from_json(const nlohmann::json& j, SplitSizes& s) {
    SplitSizes d;
    s.train = j.value("train", d.train);
    s.classification = j.value("classification", d.classification);
    s.retrieval = j.value("retrieval", d.retrieval);
    s.probe_train = j.value("probe_train", d.probe_train);
}

void to_json(nlohmann::json& j, const DedupReport& r) {
    j = nlohmann::json{{"policy", r.policy},
                       {"removed_upstream", r.removed_upstream},
                       {"matched_eval", r.matched_eval},
                       {"exact_matches", r.exact_matches},
                       {"near_matches", r.near_matches}};
}

namespace {

void write_examples(std::ostream& out, const std::vector<Example>& xs) {
    binio::put<std::uint64_t>(out, xs.size());
    for (const auto& ex : xs) {
        binio::put<std::uint64_t>(out, ex.id);
        binio::put<std::int32_t>(out, ex.class_id);
        binio::put<std::int32_t>(out, ex.mode_id);
        const std::uint8_t flags = (ex.has_title ? 1 : 0) | (ex.has_description ? 2 : 0) | (ex.has_tags ? 4 : 0);
        binio::put<std::uint8_t>(out, flags);
        binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(ex.image.size()));
        binio::put_f32s(out, ex.image);
        binio::put_string(out, ex.title);
        binio::put_string(out, ex.description);
        binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(ex.tags.size()));
        for (const auto& t : ex.tags) binio::put_string(out, t);
        binio::put<std::uint64_t>(out, ex.content_hash);
    }
}

std::vector<Example> read_examples(std::istream& in) {
    const auto n = binio::get<std::uint64_t>(in);
    if (n > (std::uint64_t{1} << 28)) fail(Errc::FormatError, "implausible example count");
    std::vector<Example> xs(n);
    for (auto& ex : xs) {
        ex.id = binio::get<std::uint64_t>(in);
        ex.class_id = binio::get<std::int32_t>(in);
        ex.mode_id = binio::get<std::int32_t>(in);
        const auto flags = binio::get<std::uint8_t>(in);
        ex.has_title = flags & 1;
        ex.has_description = flags & 2;
        ex.has_tags = flags & 4;
        const auto dim = binio::get<std::uint32_t>(in);
        if (dim > (1u << 20)) fail(Errc::FormatError, "implausible image width");
        ex.image.resize(dim);
        binio::get_f32s(in, ex.image);
        ex.title = binio::get_string(in, 4096);
        ex.description = binio::get_string(in, 4096);
        const auto n_tags = binio::get<std::uint32_t>(in);
        if (n_tags > 4096) fail(Errc::FormatError, "implausible tag count");
        ex.tags.resize(n_tags);
        for (auto& t : ex.tags) t = binio::get_string(in, 4096);
        ex.content_hash = binio::get<std::uint64_t>(in);
        if (ex.content_hash != content_hash(ex.image)) {
            fail(Errc::FormatError, "content hash mismatch for example " + std::to_string(ex.id));
        }
    }
    return xs;
}

}  // namespace

void write_corpus(std::ostream& out, const Corpus& corpus) {
    out.write(kCorpusMagic, 4);
    binio::put<std::uint32_t>(out, kCorpusVersion);
    binio::put_string(out, nlohmann::json(corpus.spec).dump());
    binio::put<std::uint64_t>(out, corpus.seed);
    binio::put_string(out, nlohmann::json(corpus.dedup).dump());
    write_examples(out, corpus.train);
    write_examples(out, corpus.eval.classification);
    write_examples(out, corpus.eval.retrieval);
    write_examples(out, corpus.eval.probe_train);
    if (!out) fail(Errc::IoError, "failed to write corpus");
}

Corpus read_corpus(std::istream& in) {
    binio::expect_magic(in, kCorpusMagic, "corpus");
    const auto version = binio::get<std::uint32_t>(in);
    if (version != kCorpusVersion) fail(Errc::FormatError, "unsupported corpus version " + std::to_string(version));
    Corpus c;
    try {
        c.spec = nlohmann::json::parse(binio::get_string(in)).get<ConceptSpec>();
        c.seed = binio::get<std::uint64_t>(in);
        const auto report = nlohmann::json::parse(binio::get_string(in));
        c.dedup.policy = report.at("policy").get<std::string>();
        c.dedup.removed_upstream = report.at("removed_upstream").get<std::size_t>();
        c.dedup.matched_eval = report.at("matched_eval").get<std::size_t>();
        c.dedup.exact_matches = report.at("exact_matches").get<std::size_t>();
        c.dedup.near_matches = report.at("near_matches").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::FormatError, std::string("corpus header: ") + e.what());
    }
    c.train = read_examples(in);
    c.eval.classification = read_examples(in);
    c.eval.retrieval = read_examples(in);
    c.eval.probe_train = read_examples(in);
    return c;
}

nlohmann::json manifest(const Corpus& corpus) {
    return nlohmann::json{{"format", "LITD"},
                          {"version", kCorpusVersion},
                          {"spec", corpus.spec},
                          {"seed", corpus.seed},
                          {"splits",
                           {{"train", corpus.train.size()},
                            {"classification", corpus.eval.classification.size()},
                            {"retrieval", corpus.eval.retrieval.size()},
                            {"probe_train", corpus.eval.probe_train.size()}}},
                          {"dedup", corpus.dedup}};
}

void save_corpus(const std::filesystem::path& dir, const Corpus& corpus) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "corpus.litd", std::ios::binary);
        if (!out) fail(Errc::IoError, "cannot open " + (dir / "corpus.litd").string());
        write_corpus(out, corpus);
    }
    std::ofstream m(dir / "manifest.json");
    if (!m) fail(Errc::IoError, "cannot open " + (dir / "manifest.json").string());
    m << manifest(corpus).dump(2) << '\n';
}

Corpus load_corpus(const std::filesystem::path& dir) {
    const auto path = std::filesystem::is_directory(dir) ? dir / "corpus.litd" : dir;
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::IoError, "cannot open " + path.string());
    return read_corpus(in);
}

}  // namespace lit::synth
