// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <unordered_map>

#include "lit/diffcore/parameter.hpp"

namespace lit::optim {

struct OptimizerConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double base_lr = 1e-3;
    double weight_decay = 1e-4;  // decoupled
    double clip_norm = 1.0;

    void validate() const;
    friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

/// One parameter's share of an update: its learning rate for this step and
/// whether decoupled weight decay applies (never for the temperature).
template <Scalar T>
struct ParamSlot {
    Parameter<T>* param = nullptr;
    double lr = 0.0;
    bool decay = true;
};

template <Scalar T>
class OptimizerState {
   public:
    struct Moments {
        Tensor<T> first;
        Tensor<T> second;
    };

    std::size_t step() const noexcept { return step_; }
    const Moments* moments(const Parameter<T>& p) const {
        auto it = moments_.find(&p);
        return it == moments_.end() ? nullptr : &it->second;
    }
    std::size_t tracked() const noexcept { return moments_.size(); }

   private:
    template <Scalar U>
    friend struct AdamAccess;
    std::unordered_map<const Parameter<T>*, Moments> moments_;
    std::size_t step_ = 0;
};

struct UpdateReport {
    std::size_t updated = 0;
    std::size_t rejected = 0;  // locked parameters that arrived with a gradient
};

/// Bias-corrected Adam followed by decoupled decay (value -= lr * wd * value).
/// Gradients are read from Parameter::grad; an empty grad counts as zero.
/// Locked parameters are never modified and their gradient is discarded.
template <Scalar T>
UpdateReport adam_update(OptimizerState<T>& state, std::span<const ParamSlot<T>> slots, const OptimizerConfig& cfg);

/// Rescales all gradients by clip_norm / g when the global L2 norm g exceeds
/// clip_norm. Returns g.
template <Scalar T>
double clip_global_norm(std::span<Tensor<T>* const> grads, double clip_norm);

}  // namespace lit::optim
