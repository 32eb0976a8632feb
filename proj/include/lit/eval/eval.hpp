// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lit/contrastive/embedding_batch.hpp"
#include "lit/synthdata/text.hpp"
#include "lit/towers/tower.hpp"

namespace lit::eval {

/// C x d, unit rows.
template <Scalar T>
struct ClassEmbeddings {
    Tensor<T> rows;
};

/// Collapses prompt embeddings (class-major: rows [c*P, (c+1)*P) belong to
/// class c) into one unit row per class: sum in double, then normalise.
template <Scalar T>
ClassEmbeddings<T> class_embeddings_from_prompts(const Tensor<T>& prompt_rows, std::size_t classes);

/// Instantiates every template for every class name, encodes with the text
/// tower and averages per class.
template <Scalar T>
ClassEmbeddings<T> build_class_embeddings(const towers::TowerState<T>& text_tower,
                                          const std::vector<std::string>& templates,
                                          const std::vector<std::string>& class_names, const synth::Vocabulary& vocab);

struct ZeroShotResult {
    std::vector<std::int32_t> predictions;
    double accuracy = 0.0;  // 0 when no labels were given
};

/// Normalises each image row, then takes the argmax cosine over classes
/// (lowest class index on ties).
template <Scalar T>
ZeroShotResult zero_shot_classify(const Tensor<T>& image_embeddings, const ClassEmbeddings<T>& classes,
                                  const std::vector<std::int32_t>& labels = {});

struct RetrievalResult {
    std::map<std::size_t, double> i2t;  // k -> recall
    std::map<std::size_t, double> t2i;
};

inline const std::vector<std::size_t>& default_ks() {
    static const std::vector<std::size_t> ks = {1, 5, 10};
    return ks;
}

/// Rank of query i = #{j : s_ij > s_ii} + #{j < i : s_ij == s_ii}; a hit
/// at k means rank < k. Rows of `sim` are image queries.
template <Scalar T>
RetrievalResult recall_from_similarity(const Tensor<T>& sim, const std::vector<std::size_t>& ks = default_ks());

template <Scalar T>
RetrievalResult recall_at_k(const EmbeddingBatch<T>& u, const EmbeddingBatch<T>& v,
                            const std::vector<std::size_t>& ks = default_ks());

struct ProbeResult {
    double accuracy = 0.0;
    std::size_t fitted = 0;
    std::size_t held_out = 0;
};

/// One-vs-all ridge regression on {0,1} targets with an unpenalised
/// intercept. The first `shots` examples of each class (in order) are
/// fitted; the rest are scored. An infinite lambda zeroes all weights.
template <Scalar T>
ProbeResult fewshot_probe(const Tensor<T>& embeddings, const std::vector<std::int32_t>& labels, std::size_t classes,
                          std::size_t shots, double lambda);

}  // namespace lit::eval
