// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lit/diffcore/tensor.hpp"
#include "lit/synthdata/text.hpp"

namespace lit::synth {

/// Parameters of the synthetic world and of the noisy web-like corpus drawn
/// from it.
///
/// Every class owns `modes_per_class` latent prototypes. An image is
/// A * (prototype + latent_sigma * n) + noise_sigma * e for a fixed random
/// map A shared by all splits. The tuning corpus draws modes with weights
/// (m + 1)^-mode_skew; curated and evaluation data draw them uniformly.
struct ConceptSpec {
    std::size_t classes = 8;
    std::size_t latent_dim = 8;
    std::size_t image_dim = 32;
    std::size_t vocab_size = 256;
    std::size_t words_per_class = 4;  // disjoint content words; word 0 is the class name
    std::size_t modes_per_class = 4;
    double mode_spread = 1.5;   // norm of a mode's offset from its class direction
    double mode_skew = 3.0;
    double latent_sigma = 0.35;
    double noise_sigma = 0.3;
    double caption_noise = 0.4;     // probability that a caption describes another class
    double junk_title_prob = 0.15;  // camera-style or numeric titles
    double drop_prob = 0.2;         // each signal independently missing
    std::uint64_t world_seed = 0;

    void validate() const;
    friend bool operator==(const ConceptSpec&, const ConceptSpec&) = default;
};

struct Example {
    std::uint64_t id = 0;
    std::int32_t class_id = 0;
    std::int32_t mode_id = 0;
    std::vector<float> image;
    std::string title;
    std::string description;
    std::vector<std::string> tags;
    bool has_title = false;
    bool has_description = false;
    bool has_tags = false;
    std::uint64_t content_hash = 0;

    bool usable(SignalKind kind) const;
};

std::uint64_t content_hash(const std::vector<float>& image) noexcept;

struct SplitSizes {
    std::size_t train = 8192;
    std::size_t classification = 512;
    std::size_t retrieval = 256;
    std::size_t probe_train = 256;

    friend bool operator==(const SplitSizes&, const SplitSizes&) = default;
};

struct EvalSplits {
    std::vector<Example> classification;  // zero-shot accuracy
    std::vector<Example> retrieval;       // image <-> description recall, eval loss
    std::vector<Example> probe_train;     // few-shot probe fitting pool
};

struct DedupReport {
    std::string policy = "none";
    std::size_t removed_upstream = 0;  // corpus examples dropped
    std::size_t matched_eval = 0;      // eval examples with at least one match
    std::size_t exact_matches = 0;
    std::size_t near_matches = 0;
};

struct Corpus {
    ConceptSpec spec;
    std::uint64_t seed = 0;
    std::vector<Example> train;
    EvalSplits eval;
    DedupReport dedup;
};

/// Content words and vocabulary are a pure function of the ConceptSpec.
Vocabulary build_vocabulary(const ConceptSpec& spec);
std::vector<std::string> class_names(const ConceptSpec& spec);
std::string content_word(std::size_t cls, std::size_t index);

/// Noisy web-style training corpus plus clean evaluation splits. Ids are
/// assigned consecutively across train, classification, retrieval and
/// probe_train, so splits are disjoint by construction.
Corpus generate_corpus(const ConceptSpec& spec, const SplitSizes& sizes, std::uint64_t seed);

/// Clean labeled images, modes drawn uniformly; stands in for the curated
/// set the image tower is pretrained on. Text fields are left empty.
std::vector<Example> generate_labeled_set(const ConceptSpec& spec, std::size_t n, std::uint64_t seed);
/// Clean captioned examples with class labels, for text-tower pretraining.
std::vector<Example> generate_labeled_text(const ConceptSpec& spec, std::size_t n, std::uint64_t seed);

struct SignalText {
    SignalKind kind;
    TokenSeq tokens;
};

/// joint: every usable signal; per-image: one usable signal drawn per
/// example; per-batch: the batch-wide kind, or nothing when this example
/// lacks it. Throws NoUsableSignal when the example has no usable signal.
std::vector<SignalText> select_text(const Example& example, SignalStrategy strategy, std::uint64_t batch_seed,
                                    const Vocabulary& vocab);

/// Stacks the images of `examples[indices]` into a row-major batch.
TensorF image_batch(const std::vector<Example>& examples, const std::vector<std::size_t>& indices);
TensorF image_batch(const std::vector<Example>& examples);

}  // namespace lit::synth
