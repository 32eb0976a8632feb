// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "lit/diffcore/memory.hpp"
#include "lit/error.hpp"

namespace lit {

enum class DType { f32, f64 };

template <typename T>
concept Scalar = std::is_same_v<T, float> || std::is_same_v<T, double>;

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

std::string shape_string(const Shape& shape);

/// Dense row-major array. A rank-0 tensor is a scalar; a default-constructed
/// tensor has shape {0} and holds nothing.
template <Scalar T>
class Tensor {
   public:
    using value_type = T;
    using Storage = std::vector<T, memory::TrackingAllocator<T>>;

    Tensor() : shape_{0} {}
    explicit Tensor(Shape shape, T fill = T{0}) : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}
    Tensor(Shape shape, std::span<const T> values) : shape_(std::move(shape)), data_(values.begin(), values.end()) {
        if (data_.size() != shape_numel(shape_)) {
            fail(Errc::ShapeMismatch, "tensor payload of " + std::to_string(data_.size()) +
                                          " elements does not fill shape " + shape_string(shape_));
        }
    }
    Tensor(Shape shape, std::initializer_list<T> values)
        : Tensor(std::move(shape), std::span<const T>(values.begin(), values.size())) {}

    static Tensor scalar(T value) { return Tensor(Shape{}, value); }
    static Tensor matrix(std::size_t rows, std::size_t cols, T fill = T{0}) { return Tensor(Shape{rows, cols}, fill); }
    static Tensor from_rows(std::initializer_list<std::initializer_list<T>> rows) {
        const std::size_t r = rows.size();
        const std::size_t c = r == 0 ? 0 : rows.begin()->size();
        Tensor t = matrix(r, c);
        std::size_t i = 0;
        for (const auto& row : rows) {
            if (row.size() != c) fail(Errc::ShapeMismatch, "ragged rows");
            for (T v : row) t.data_[i++] = v;
        }
        return t;
    }

    static constexpr DType dtype() noexcept { return std::is_same_v<T, float> ? DType::f32 : DType::f64; }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t numel() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }
    std::size_t bytes() const noexcept { return data_.size() * sizeof(T); }

    std::size_t rows() const noexcept { return shape_.empty() ? 1 : shape_[0]; }
    std::size_t cols() const noexcept { return shape_.size() < 2 ? 1 : shape_[1]; }

    T* data() noexcept { return data_.data(); }
    const T* data() const noexcept { return data_.data(); }
    std::span<T> values() noexcept { return {data_.data(), data_.size()}; }
    std::span<const T> values() const noexcept { return {data_.data(), data_.size()}; }

    T& operator[](std::size_t i) noexcept { return data_[i]; }
    T operator[](std::size_t i) const noexcept { return data_[i]; }
    T& at(std::size_t r, std::size_t c) noexcept { return data_[r * shape_[1] + c]; }
    T at(std::size_t r, std::size_t c) const noexcept { return data_[r * shape_[1] + c]; }

    std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols(), cols()}; }
    std::span<const T> row(std::size_t r) const noexcept { return {data_.data() + r * cols(), cols()}; }

    T item() const {
        if (data_.size() != 1) fail(Errc::NotScalar, "item() on shape " + shape_string(shape_));
        return data_[0];
    }

    void reshape(Shape shape) {
        if (shape_numel(shape) != data_.size()) {
            fail(Errc::ShapeMismatch, "cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
        }
        shape_ = std::move(shape);
    }

    template <Scalar U>
    Tensor<U> cast() const {
        Tensor<U> out(shape_);
        for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
        return out;
    }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
    }

    void fill(T v) noexcept { std::fill(data_.begin(), data_.end(), v); }

    friend bool operator==(const Tensor& a, const Tensor& b) noexcept {
        return a.shape_ == b.shape_ && std::equal(a.data_.begin(), a.data_.end(), b.data_.begin());
    }

   private:
    Shape shape_;
    Storage data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace lit
