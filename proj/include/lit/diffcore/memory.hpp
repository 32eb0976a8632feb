// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <memory>

namespace lit::memory {

// Per-thread accounting of bytes held by live tensors. The peak is the
// memory proxy reported by the precompute benchmark.
std::size_t live_bytes() noexcept;
std::size_t peak_bytes() noexcept;
void reset_peak() noexcept;

void on_allocate(std::size_t bytes) noexcept;
void on_deallocate(std::size_t bytes) noexcept;

template <typename T>
struct TrackingAllocator {
    using value_type = T;

    TrackingAllocator() noexcept = default;
    template <typename U>
    TrackingAllocator(const TrackingAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) {
        T* p = std::allocator<T>{}.allocate(n);
        on_allocate(n * sizeof(T));
        return p;
    }
    void deallocate(T* p, std::size_t n) noexcept {
        on_deallocate(n * sizeof(T));
        std::allocator<T>{}.deallocate(p, n);
    }

    template <typename U>
    bool operator==(const TrackingAllocator<U>&) const noexcept {
        return true;
    }
};

}  // namespace lit::memory
