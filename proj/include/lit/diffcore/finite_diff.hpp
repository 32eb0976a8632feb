// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "lit/diffcore/tensor.hpp"

namespace lit {

/// Central-difference gradient of a scalar function. Verification oracle for
/// the analytic backward pass; it never touches the tape.
template <Scalar T, typename F>
Tensor<T> finite_diff_grad(F&& f, const Tensor<T>& x, T eps) {
    Tensor<T> grad(x.shape());
    Tensor<T> probe = x;
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const T orig = probe[i];
        probe[i] = orig + eps;
        const T plus = static_cast<T>(f(probe));
        probe[i] = orig - eps;
        const T minus = static_cast<T>(f(probe));
        probe[i] = orig;
        if (!std::isfinite(plus) || !std::isfinite(minus)) {
            fail(Errc::NonFinite, "finite-difference probe " + std::to_string(i) + " is not finite");
        }
        grad[i] = (plus - minus) / (T{2} * eps);
    }
    return grad;
}

}  // namespace lit
