// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>

#include "lit/contrastive/embedding_batch.hpp"
#include "lit/diffcore/tape.hpp"

namespace lit::contrastive {

inline constexpr double kInitialTemperature = 0.07;
inline constexpr double kMinTemperature = 0.001;

/// Logits are sim * exp(log_temperature), i.e. tau = exp(-log_temperature).
template <Scalar T>
struct LossConfig {
    Parameter<T> log_temperature{"log_temperature", Tensor<T>::scalar(static_cast<T>(-std::log(kInitialTemperature)))};
    bool learnable_temp = true;

    static LossConfig with_temperature(double tau, bool learnable = true) {
        LossConfig cfg;
        cfg.log_temperature.value = Tensor<T>::scalar(static_cast<T>(-std::log(tau)));
        cfg.learnable_temp = learnable;
        cfg.log_temperature.trainable = learnable;
        return cfg;
    }
    double temperature() const { return std::exp(-static_cast<double>(log_temperature.value.item())); }
    /// Enforces tau >= min_tau; returns true when the value was changed.
    bool clamp(double min_tau = kMinTemperature) {
        const T cap = static_cast<T>(-std::log(min_tau));
        if (log_temperature.value.item() > cap) {
            log_temperature.value = Tensor<T>::scalar(cap);
            return true;
        }
        return false;
    }
};

template <Scalar T>
struct LossOutput {
    T loss{};
    T i2t{};
    T t2i{};
    Tensor<T> sim;
    Tensor<T> grad_u;
    Tensor<T> grad_v;
    T grad_log_temperature{};  // zero when the temperature is fixed
};

/// Nodes of a symmetric InfoNCE graph.
struct LossNodes {
    NodeId loss;
    NodeId i2t;
    NodeId t2i;
};

/// N_u x N_v cosine similarities of two normalised batches.
template <Scalar T>
Tensor<T> similarity_matrix(const EmbeddingBatch<T>& u, const EmbeddingBatch<T>& v);

/// Temperature leaf for a tape: tracked only when the temperature is learnable.
template <Scalar T>
NodeId temperature_node(Tape<T>& tape, const LossConfig<T>& cfg) {
    return tape.param(cfg.log_temperature, cfg.learnable_temp);
}

/// Symmetric InfoNCE with positional positives on existing tape nodes.
template <Scalar T>
LossNodes build_contrastive(Tape<T>& tape, NodeId u, NodeId v, NodeId log_temperature);

/// Loss, similarity matrix and gradients for u, v and the temperature.
template <Scalar T>
LossOutput<T> contrastive_loss(const EmbeddingBatch<T>& u, const EmbeddingBatch<T>& v, const LossConfig<T>& cfg);

}  // namespace lit::contrastive
