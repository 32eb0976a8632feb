// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "lit/eval/eval.hpp"

namespace lit::eval {

template <Scalar T>
ClassEmbeddings<T> class_embeddings_from_prompts(const Tensor<T>& prompt_rows, std::size_t classes) {
    if (classes == 0 || prompt_rows.rank() != 2 || prompt_rows.rows() == 0) {
        fail(Errc::EmptyPrompts, "no prompt embeddings");
    }
    if (prompt_rows.rows() % classes != 0) {
        fail(Errc::ShapeMismatch, "prompt rows do not split evenly over classes");
    }
    const std::size_t per = prompt_rows.rows() / classes;
    const std::size_t d = prompt_rows.cols();
    ClassEmbeddings<T> out;
    out.rows = Tensor<T>::matrix(classes, d);
    std::vector<double> acc(d);
    for (std::size_t c = 0; c < classes; ++c) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t p = 0; p < per; ++p) {
            const auto row = prompt_rows.row(c * per + p);
            for (std::size_t i = 0; i < d; ++i) acc[i] += static_cast<double>(row[i]);
        }
        double ss = 0.0;
        for (double v : acc) ss += v * v;
        const double norm = std::sqrt(ss);
        if (norm <= kEpsilonNorm) fail(Errc::ZeroNormRow, "class " + std::to_string(c) + " prompts cancel out");
        for (std::size_t i = 0; i < d; ++i) out.rows.at(c, i) = static_cast<T>(acc[i] / norm);
    }
    return out;
}

template <Scalar T>
ClassEmbeddings<T> build_class_embeddings(const towers::TowerState<T>& text_tower,
                                          const std::vector<std::string>& templates,
                                          const std::vector<std::string>& class_names, const synth::Vocabulary& vocab) {
    if (templates.empty()) fail(Errc::EmptyPrompts, "prompt set is empty");
    if (class_names.empty()) fail(Errc::EmptyPrompts, "no class names");
    std::vector<TokenSeq> prompts;
    prompts.reserve(templates.size() * class_names.size());
    for (const auto& name : class_names) {
        for (const auto& t : templates) prompts.push_back(synth::tokenize(synth::instantiate(t, name), vocab));
    }
    const auto batch = towers::encode_texts<T>(text_tower, prompts);
    return class_embeddings_from_prompts(batch.rows, class_names.size());
}

template <Scalar T>
ZeroShotResult zero_shot_classify(const Tensor<T>& image_embeddings, const ClassEmbeddings<T>& classes,
                                  const std::vector<std::int32_t>& labels) {
    const auto& C = classes.rows;
    if (image_embeddings.rank() != 2 || C.rank() != 2) fail(Errc::ShapeMismatch, "embeddings must be matrices");
    if (image_embeddings.cols() != C.cols()) {
        fail(Errc::DimMismatch, "image width " + std::to_string(image_embeddings.cols()) + " vs class width " +
                                    std::to_string(C.cols()));
    }
    if (!labels.empty() && labels.size() != image_embeddings.rows()) {
        fail(Errc::BatchMismatch, "label count differs from image count");
    }
    const std::size_t n = image_embeddings.rows(), d = C.cols();
    ZeroShotResult out;
    out.predictions.resize(n);
    std::vector<double> x(d);
    std::size_t correct = 0;
    for (std::size_t r = 0; r < n; ++r) {
        const auto row = image_embeddings.row(r);
        double ss = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            x[i] = static_cast<double>(row[i]);
            ss += x[i] * x[i];
        }
        const double norm = std::sqrt(ss);
        if (norm <= kEpsilonNorm) fail(Errc::ZeroNormRow, "image embedding " + std::to_string(r) + " is zero");
        for (auto& v : x) v /= norm;
        std::int32_t best = 0;
        double best_score = 0.0;
        for (std::size_t c = 0; c < C.rows(); ++c) {
            double s = 0.0;
            const auto crow = C.row(c);
            for (std::size_t i = 0; i < d; ++i) s += x[i] * static_cast<double>(crow[i]);
            if (c == 0 || s > best_score) {
                best = static_cast<std::int32_t>(c);
                best_score = s;
            }
        }
        out.predictions[r] = best;
        if (!labels.empty()) correct += best == labels[r] ? 1 : 0;
    }
    if (!labels.empty() && n > 0) out.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    return out;
}

#define LIT_INSTANTIATE_ZS(T)                                                                                    \
    template ClassEmbeddings<T> class_embeddings_from_prompts(const Tensor<T>&, std::size_t);                   \
    template ClassEmbeddings<T> build_class_embeddings(const towers::TowerState<T>&,                            \
                                                       const std::vector<std::string>&,                          \
                                                       const std::vector<std::string>&, const synth::Vocabulary&); \
    template ZeroShotResult zero_shot_classify(const Tensor<T>&, const ClassEmbeddings<T>&,                     \
                                               const std::vector<std::int32_t>&);

LIT_INSTANTIATE_ZS(float)
LIT_INSTANTIATE_ZS(double)

#undef LIT_INSTANTIATE_ZS

}  // namespace lit::eval
