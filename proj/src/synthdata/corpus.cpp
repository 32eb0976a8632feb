// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "lit/synthdata/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <unordered_set>

#include "lit/error.hpp"
#include "lit/hash.hpp"

namespace lit::synth {

namespace {

const std::vector<std::string>& filler_words() {
    static const std::vector<std::string> words = {
        "a",      "the",     "my",    "our",     "with",    "near",   "on",      "in",     "at",
        "and",    "from",    "during", "after",  "this",    "that",   "some",    "old",    "new",
        "little", "big",     "lovely", "quiet",  "busy",    "morning", "evening", "day",   "night",
        "trip",   "walk",    "view",  "today",   "weekend", "visit",  "home",    "city",   "park",
        "garden", "street",  "we",    "saw",     "found",   "took",   "another", "shot",   "look",
    };
    return words;
}

const std::vector<std::string>& generic_tags() {
    static const std::vector<std::string> words = {
        "travel", "nature", "vacation", "summer", "winter",    "holiday", "canon",  "nikon",  "photo", "2012",
        "2013",   "2014",   "geotagged", "outdoor", "friends", "family",  "film",   "bw",     "iphone", "flickr",
    };
    return words;
}

const std::vector<std::string>& prompt_words() {
    static const std::vector<std::string> words = {"photo", "of", "blurry", "close-up", "bright", "good",
                                                   "picture", "itap", "wild"};
    return words;
}

const char* const kMarks[] = {",", ";", ".", "!", "?", ":"};

struct World {
    std::vector<std::vector<double>> prototypes;  // [class * modes + mode] -> latent_dim
    std::vector<double> mix;                      // image_dim x latent_dim, row-major
};

std::vector<double> unit_normal(std::size_t k, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> v(k);
    double ss = 0.0;
    do {
        ss = 0.0;
        for (auto& x : v) {
            x = n(rng);
            ss += x * x;
        }
    } while (ss < 1e-12);
    for (auto& x : v) x /= std::sqrt(ss);
    return v;
}

World build_world(const ConceptSpec& spec) {
    World w;
    std::mt19937_64 rng(mix_seed(spec.world_seed, 0x77));
    for (std::size_t c = 0; c < spec.classes; ++c) {
        const auto dir = unit_normal(spec.latent_dim, rng);
        for (std::size_t m = 0; m < spec.modes_per_class; ++m) {
            auto offset = unit_normal(spec.latent_dim, rng);
            std::vector<double> p(spec.latent_dim);
            for (std::size_t i = 0; i < p.size(); ++i) p[i] = dir[i] + spec.mode_spread * offset[i];
            w.prototypes.push_back(std::move(p));
        }
    }
    std::normal_distribution<double> n(0.0, 1.0 / std::sqrt(static_cast<double>(spec.latent_dim)));
    w.mix.resize(spec.image_dim * spec.latent_dim);
    for (auto& x : w.mix) x = n(rng);
    return w;
}

std::vector<float> render_image(const World& w, const ConceptSpec& spec, std::size_t cls, std::size_t mode,
                                std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    const auto& proto = w.prototypes[cls * spec.modes_per_class + mode];
    std::vector<double> z(spec.latent_dim);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = proto[i] + spec.latent_sigma * n(rng);
    std::vector<float> x(spec.image_dim);
    for (std::size_t r = 0; r < spec.image_dim; ++r) {
        double acc = 0.0;
        for (std::size_t i = 0; i < spec.latent_dim; ++i) acc += w.mix[r * spec.latent_dim + i] * z[i];
        x[r] = static_cast<float>(acc + spec.noise_sigma * n(rng));
    }
    return x;
}

template <typename T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

bool chance(double p, std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; }

// The class name half of the time, otherwise one of the other content words.
std::string mention(const ConceptSpec& spec, std::size_t cls, std::mt19937_64& rng) {
    if (spec.words_per_class == 1 || chance(0.5, rng)) return content_word(cls, 0);
    return content_word(cls, std::uniform_int_distribution<std::size_t>(1, spec.words_per_class - 1)(rng));
}

std::string junk_title(std::mt19937_64& rng) {
    char buf[64];
    std::uniform_int_distribution<int> num(0, 9999);
    switch (std::uniform_int_distribution<int>(0, 4)(rng)) {
        case 0: std::snprintf(buf, sizeof buf, "IMG_%04d", num(rng)); break;
        case 1: std::snprintf(buf, sizeof buf, "DSC%05d", num(rng)); break;
        case 2: std::snprintf(buf, sizeof buf, "Picture %d", num(rng) % 100); break;
        case 3: return "image";
        default:
            std::snprintf(buf, sizeof buf, "%04d %02d %02d %d", 2000 + num(rng) % 25, 1 + num(rng) % 12,
                          1 + num(rng) % 28, num(rng) % 10);
            break;
    }
    return buf;
}

std::string make_title(const ConceptSpec& spec, std::size_t cls, std::mt19937_64& rng) {
    const auto& fill = filler_words();
    switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
        case 0: return mention(spec, cls, rng);
        case 1: return "my " + mention(spec, cls, rng);
        default: return mention(spec, cls, rng) + " " + pick(fill, rng) + " " + pick(fill, rng);
    }
}

std::string make_description(const ConceptSpec& spec, std::size_t cls, std::mt19937_64& rng) {
    const auto& fill = filler_words();
    const std::size_t n_fill = std::uniform_int_distribution<std::size_t>(3, 7)(rng);
    std::vector<std::string> words;
    for (std::size_t i = 0; i < n_fill; ++i) words.push_back(pick(fill, rng));
    for (int k = 0; k < 2; ++k) {
        const auto pos = std::uniform_int_distribution<std::size_t>(0, words.size())(rng);
        words.insert(words.begin() + static_cast<std::ptrdiff_t>(pos), mention(spec, cls, rng));
    }
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) out += (i ? " " : "") + words[i];
    return out + (chance(0.5, rng) ? "." : "!");
}

std::vector<std::string> make_tags(const ConceptSpec& spec, std::size_t cls, std::mt19937_64& rng) {
    std::vector<std::string> tags;
    const std::size_t n_content = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
    const std::size_t n_generic = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
    for (std::size_t i = 0; i < n_content; ++i) tags.push_back(mention(spec, cls, rng));
    for (std::size_t i = 0; i < n_generic; ++i) tags.push_back(pick(generic_tags(), rng));
    std::sort(tags.begin(), tags.end());
    tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
    return tags;
}

// Tuning corpus: skewed modes, noisy captions, junk titles, missing signals.
Example web_example(const World& w, const ConceptSpec& spec, std::uint64_t id, std::size_t cls,
                    const std::vector<double>& mode_weights, std::mt19937_64& rng) {
    Example ex;
    ex.id = id;
    ex.class_id = static_cast<std::int32_t>(cls);
    std::discrete_distribution<std::size_t> modes(mode_weights.begin(), mode_weights.end());
    const std::size_t mode = modes(rng);
    ex.mode_id = static_cast<std::int32_t>(mode);
    ex.image = render_image(w, spec, cls, mode, rng);
    ex.content_hash = content_hash(ex.image);

    std::size_t text_cls = cls;
    if (spec.classes > 1 && chance(spec.caption_noise, rng)) {
        text_cls = (cls + std::uniform_int_distribution<std::size_t>(1, spec.classes - 1)(rng)) % spec.classes;
    }
    ex.title = chance(spec.junk_title_prob, rng) ? junk_title(rng) : make_title(spec, text_cls, rng);
    ex.description = make_description(spec, text_cls, rng);
    ex.tags = make_tags(spec, text_cls, rng);
    ex.has_title = !chance(spec.drop_prob, rng);
    ex.has_description = !chance(spec.drop_prob, rng);
    ex.has_tags = !chance(spec.drop_prob, rng);
    if (!ex.usable(SignalKind::Title) && !ex.has_description && !ex.has_tags) ex.has_description = true;
    if (!ex.has_title) ex.title.clear();
    if (!ex.has_description) ex.description.clear();
    if (!ex.has_tags) ex.tags.clear();
    return ex;
}

// Evaluation and curated data: uniform modes, clean captions, all signals.
Example clean_example(const World& w, const ConceptSpec& spec, std::uint64_t id, std::size_t cls, std::size_t mode,
                      bool with_text, std::mt19937_64& rng) {
    Example ex;
    ex.id = id;
    ex.class_id = static_cast<std::int32_t>(cls);
    ex.mode_id = static_cast<std::int32_t>(mode);
    ex.image = render_image(w, spec, cls, mode, rng);
    ex.content_hash = content_hash(ex.image);
    if (with_text) {
        ex.title = make_title(spec, cls, rng);
        ex.description = make_description(spec, cls, rng);
        ex.tags = make_tags(spec, cls, rng);
        ex.has_title = ex.has_description = ex.has_tags = true;
    }
    return ex;
}

std::vector<Example> clean_split(const World& w, const ConceptSpec& spec, std::size_t n, std::uint64_t first_id,
                                 std::uint64_t stream, bool with_text) {
    std::vector<Example> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::mt19937_64 rng(mix_seed(stream, i));
        const std::size_t cls = i % spec.classes;
        const std::size_t mode = (i / spec.classes) % spec.modes_per_class;
        out.push_back(clean_example(w, spec, first_id + i, cls, mode, with_text, rng));
    }
    return out;
}

}  // namespace

void ConceptSpec::validate() const {
    if (classes < 2) fail(Errc::BadSpec, "need at least two classes");
    if (latent_dim == 0 || image_dim == 0) fail(Errc::BadSpec, "latent_dim and image_dim must be positive");
    if (words_per_class < 3 || words_per_class > 16) {
        fail(Errc::BadSpec, "each class needs between 3 and 16 content words");
    }
    if (modes_per_class == 0) fail(Errc::BadSpec, "modes_per_class must be positive");
    for (double p : {caption_noise, junk_title_prob, drop_prob}) {
        if (!(p >= 0.0 && p <= 1.0)) fail(Errc::BadSpec, "probabilities must lie in [0, 1]");
    }
    if (!(noise_sigma >= 0.0) || !(latent_sigma >= 0.0) || !(mode_spread >= 0.0) || !(mode_skew >= 0.0)) {
        fail(Errc::BadSpec, "noise, spread and skew must be non-negative");
    }
    const std::size_t needed = 2 + std::size(kMarks) + filler_words().size() + generic_tags().size() +
                               prompt_words().size() + classes * words_per_class;
    if (needed > vocab_size) {
        fail(Errc::BadSpec, "vocabulary of " + std::to_string(vocab_size) + " cannot hold " + std::to_string(needed) +
                                " words");
    }
}

bool Example::usable(SignalKind kind) const {
    switch (kind) {
        case SignalKind::Title: return has_title && filter_title(title);
        case SignalKind::Description: return has_description && !description.empty();
        case SignalKind::Tags: return has_tags && !tags.empty();
    }
    return false;
}

std::uint64_t content_hash(const std::vector<float>& image) noexcept { return fnv1a(image); }

std::string content_word(std::size_t cls, std::size_t index) {
    static constexpr char kCons[] = "bdfgklmnprstvz";
    static constexpr char kVow[] = "aeiou";
    constexpr std::size_t n_syl = (sizeof kCons - 1) * (sizeof kVow - 1);
    auto syllable = [&](std::size_t s) {
        return std::string{kCons[s / (sizeof kVow - 1)], kVow[s % (sizeof kVow - 1)]};
    };
    const std::size_t i = cls * 16 + index;
    const std::size_t a = i % n_syl;
    const std::size_t b = (i / n_syl + 3 * a + 5) % n_syl;
    return syllable(a) + syllable(b) + "x";
}

Vocabulary build_vocabulary(const ConceptSpec& spec) {
    spec.validate();
    Vocabulary v;
    for (const char* m : kMarks) v.add(m);
    for (const auto& w : filler_words()) v.add(w);
    for (const auto& w : generic_tags()) v.add(w);
    for (const auto& w : prompt_words()) v.add(w);
    for (std::size_t c = 0; c < spec.classes; ++c) {
        for (std::size_t j = 0; j < spec.words_per_class; ++j) {
            const auto word = content_word(c, j);
            if (v.contains(word)) fail(Errc::BadSpec, "content word collision: " + word);
            v.add(word);
        }
    }
    return v;
}

std::vector<std::string> class_names(const ConceptSpec& spec) {
    std::vector<std::string> names;
    for (std::size_t c = 0; c < spec.classes; ++c) names.push_back(content_word(c, 0));
    return names;
}

Corpus generate_corpus(const ConceptSpec& spec, const SplitSizes& sizes, std::uint64_t seed) {
    spec.validate();
    if (sizes.train < spec.classes) fail(Errc::BadSpec, "corpus must hold at least one example per class");
    const World w = build_world(spec);

    std::vector<double> weights(spec.modes_per_class);
    for (std::size_t m = 0; m < weights.size(); ++m) weights[m] = std::pow(static_cast<double>(m + 1), -spec.mode_skew);

    Corpus corpus;
    corpus.spec = spec;
    corpus.seed = seed;
    corpus.train.reserve(sizes.train);
    const std::uint64_t train_stream = mix_seed(seed, 1);
    for (std::size_t i = 0; i < sizes.train; ++i) {
        std::mt19937_64 rng(mix_seed(train_stream, i));
        corpus.train.push_back(web_example(w, spec, i, i % spec.classes, weights, rng));
    }
    std::uint64_t next = sizes.train;
    corpus.eval.classification = clean_split(w, spec, sizes.classification, next, mix_seed(seed, 2), true);
    next += sizes.classification;
    corpus.eval.retrieval = clean_split(w, spec, sizes.retrieval, next, mix_seed(seed, 3), true);
    next += sizes.retrieval;
    corpus.eval.probe_train = clean_split(w, spec, sizes.probe_train, next, mix_seed(seed, 4), true);

    std::unordered_set<std::uint64_t> train_ids;
    for (const auto& ex : corpus.train) train_ids.insert(ex.id);
    for (const auto* split : {&corpus.eval.classification, &corpus.eval.retrieval, &corpus.eval.probe_train}) {
        for (const auto& ex : *split) {
            if (train_ids.count(ex.id)) fail(Errc::BadSpec, "train and eval ids intersect");
        }
    }
    return corpus;
}

std::vector<Example> generate_labeled_set(const ConceptSpec& spec, std::size_t n, std::uint64_t seed) {
    spec.validate();
    if (n < spec.classes) fail(Errc::BadSpec, "labeled set must hold at least one example per class");
    return clean_split(build_world(spec), spec, n, 0, mix_seed(seed, 5), false);
}

std::vector<SignalText> select_text(const Example& example, SignalStrategy strategy, std::uint64_t batch_seed,
                                    const Vocabulary& vocab) {
    std::vector<SignalKind> usable;
    for (auto k : {SignalKind::Title, SignalKind::Description, SignalKind::Tags}) {
        if (example.usable(k)) usable.push_back(k);
    }
    if (usable.empty()) fail(Errc::NoUsableSignal, "example " + std::to_string(example.id) + " has no usable text");

    const std::uint64_t local_seed = mix_seed(batch_seed, example.id);
    auto render = [&](SignalKind k) -> SignalText {
        switch (k) {
            case SignalKind::Title: return {k, tokenize(example.title, vocab)};
            case SignalKind::Description: return {k, tokenize(example.description, vocab)};
            case SignalKind::Tags: return {k, compose_tags(example.tags, local_seed, vocab)};
        }
        return {k, {}};
    };

    std::vector<SignalText> out;
    switch (strategy) {
        case SignalStrategy::Joint:
            for (auto k : usable) out.push_back(render(k));
            break;
        case SignalStrategy::PerImage: {
            std::mt19937_64 rng(local_seed);
            out.push_back(render(pick(usable, rng)));
            break;
        }
        case SignalStrategy::PerBatch: {
            const auto k = batch_signal(batch_seed);
            if (example.usable(k)) out.push_back(render(k));
            break;
        }
    }
    return out;
}

TensorF image_batch(const std::vector<Example>& examples, const std::vector<std::size_t>& indices) {
    if (indices.empty()) return TensorF::matrix(0, examples.empty() ? 0 : examples.front().image.size());
    const std::size_t dim = examples[indices[0]].image.size();
    auto out = TensorF::matrix(indices.size(), dim);
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const auto& img = examples[indices[r]].image;
        std::copy(img.begin(), img.end(), out.row(r).begin());
    }
    return out;
}

TensorF image_batch(const std::vector<Example>& examples) {
    std::vector<std::size_t> all(examples.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return image_batch(examples, all);
}

std::vector<Example> generate_labeled_text(const ConceptSpec& spec, std::size_t n, std::uint64_t seed) {
    spec.validate();
    if (n < spec.classes) fail(Errc::BadSpec, "labeled set must hold at least one example per class");
    return clean_split(build_world(spec), spec, n, 0, mix_seed(seed, 6), true);
}

}  // namespace lit::synth
