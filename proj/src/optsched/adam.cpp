// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "lit/optsched/adam.hpp"

#include <cmath>

#include "lit/error.hpp"

namespace lit::optim {

void OptimizerConfig::validate() const {
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        fail(Errc::InvalidConfig, "Adam betas must lie in [0, 1)");
    }
    if (!(eps > 0.0)) fail(Errc::InvalidConfig, "Adam eps must be positive");
    if (!(base_lr >= 0.0) || !(weight_decay >= 0.0)) fail(Errc::InvalidConfig, "negative lr or weight decay");
    if (!(clip_norm > 0.0)) fail(Errc::InvalidConfig, "clip_norm must be positive");
}

template <Scalar U>
struct AdamAccess {
    static auto& moments(OptimizerState<U>& s) { return s.moments_; }
    static std::size_t& step(OptimizerState<U>& s) { return s.step_; }
};

template <Scalar T>
UpdateReport adam_update(OptimizerState<T>& state, std::span<const ParamSlot<T>> slots, const OptimizerConfig& cfg) {
    UpdateReport report;
    for (const auto& slot : slots) {
        const auto& p = *slot.param;
        if (p.trainable && !p.grad.empty() && !p.grad.all_finite()) {
            fail(Errc::NonFiniteGradient, "gradient of '" + p.name + "' is not finite");
        }
    }

    auto& moments = AdamAccess<T>::moments(state);
    const std::size_t t = ++AdamAccess<T>::step(state);
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));

    for (const auto& slot : slots) {
        Parameter<T>& p = *slot.param;
        if (!p.trainable) {
            if (!p.grad.empty()) {
                ++report.rejected;
                p.grad = Tensor<T>();
            }
            continue;
        }
        auto [it, fresh] = moments.try_emplace(&p);
        if (fresh) {
            it->second.first = Tensor<T>(p.value.shape());
            it->second.second = Tensor<T>(p.value.shape());
        }
        T* m = it->second.first.data();
        T* v = it->second.second.data();
        T* w = p.value.data();
        const bool has_grad = !p.grad.empty();
        const T b1 = static_cast<T>(cfg.beta1);
        const T b2 = static_cast<T>(cfg.beta2);
        const T lr = static_cast<T>(slot.lr);
        const T decay = slot.decay ? static_cast<T>(1.0 - slot.lr * cfg.weight_decay) : T{1};
        const T c1 = static_cast<T>(bc1);
        const T c2 = static_cast<T>(bc2);
        const T eps = static_cast<T>(cfg.eps);
        for (std::size_t i = 0; i < p.value.numel(); ++i) {
            const T g = has_grad ? p.grad[i] : T{0};
            m[i] = b1 * m[i] + (T{1} - b1) * g;
            v[i] = b2 * v[i] + (T{1} - b2) * g * g;
            const T mhat = m[i] / c1;
            const T vhat = v[i] / c2;
            w[i] -= lr * mhat / (std::sqrt(vhat) + eps);
            w[i] *= decay;
        }
        ++report.updated;
    }
    return report;
}

template <Scalar T>
double clip_global_norm(std::span<Tensor<T>* const> grads, double clip_norm) {
    double ss = 0.0;
    for (const Tensor<T>* g : grads) {
        for (T v : g->values()) ss += static_cast<double>(v) * static_cast<double>(v);
    }
    const double norm = std::sqrt(ss);
    if (norm > clip_norm) {
        const T factor = static_cast<T>(clip_norm / norm);
        for (Tensor<T>* g : grads) {
            for (T& v : g->values()) v *= factor;
        }
    }
    return norm;
}

template UpdateReport adam_update(OptimizerState<float>&, std::span<const ParamSlot<float>>, const OptimizerConfig&);
template UpdateReport adam_update(OptimizerState<double>&, std::span<const ParamSlot<double>>, const OptimizerConfig&);
template double clip_global_norm(std::span<Tensor<float>* const>, double);
template double clip_global_norm(std::span<Tensor<double>* const>, double);

}  // namespace lit::optim
