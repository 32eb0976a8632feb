// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "lit/contrastive/loss.hpp"
#include "lit/eval/eval.hpp"

namespace lit::eval {

namespace {

// at(i, j) scores candidate j for query i.
template <typename At>
std::map<std::size_t, double> recall(std::size_t n, const std::vector<std::size_t>& ks, At at) {
    std::map<std::size_t, std::size_t> hits;
    for (auto k : ks) hits[k] = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto positive = at(i, i);
        std::size_t rank = 0;
        for (std::size_t j = 0; j < n; ++j) {
            const auto s = at(i, j);
            if (s > positive || (s == positive && j < i)) ++rank;
        }
        for (auto k : ks) hits[k] += rank < k ? 1 : 0;
    }
    std::map<std::size_t, double> out;
    for (auto k : ks) out[k] = n == 0 ? 0.0 : static_cast<double>(hits[k]) / static_cast<double>(n);
    return out;
}

}  // namespace

template <Scalar T>
RetrievalResult recall_from_similarity(const Tensor<T>& sim, const std::vector<std::size_t>& ks) {
    if (sim.rank() != 2 || sim.rows() != sim.cols()) fail(Errc::BatchMismatch, "similarity matrix must be square");
    const std::size_t n = sim.rows();
    RetrievalResult out;
    out.i2t = recall(n, ks, [&](std::size_t i, std::size_t j) { return sim.at(i, j); });
    out.t2i = recall(n, ks, [&](std::size_t i, std::size_t j) { return sim.at(j, i); });
    return out;
}

template <Scalar T>
RetrievalResult recall_at_k(const EmbeddingBatch<T>& u, const EmbeddingBatch<T>& v, const std::vector<std::size_t>& ks) {
    if (u.size() != v.size()) {
        fail(Errc::BatchMismatch, "retrieval needs paired batches: " + std::to_string(u.size()) + " vs " +
                                      std::to_string(v.size()));
    }
    return recall_from_similarity(contrastive::similarity_matrix(u, v), ks);
}

template RetrievalResult recall_from_similarity(const Tensor<float>&, const std::vector<std::size_t>&);
template RetrievalResult recall_from_similarity(const Tensor<double>&, const std::vector<std::size_t>&);
template RetrievalResult recall_at_k(const EmbeddingBatch<float>&, const EmbeddingBatch<float>&,
                                     const std::vector<std::size_t>&);
template RetrievalResult recall_at_k(const EmbeddingBatch<double>&, const EmbeddingBatch<double>&,
                                     const std::vector<std::size_t>&);

}  // namespace lit::eval
