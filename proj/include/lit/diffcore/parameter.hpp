// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "lit/diffcore/tensor.hpp"

namespace lit {

/// A named trainable (or locked) tensor. Locked parameters never hold a
/// gradient and are never touched by the optimizer.
template <Scalar T>
struct Parameter {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    bool trainable = true;

    Parameter() = default;
    Parameter(std::string n, Tensor<T> v, bool train = true)
        : name(std::move(n)), value(std::move(v)), trainable(train) {}

    template <Scalar U>
    Parameter<U> cast() const {
        Parameter<U> out(name, value.template cast<U>(), trainable);
        return out;
    }
};

}  // namespace lit
