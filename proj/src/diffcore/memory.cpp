// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "lit/diffcore/memory.hpp"

#include <algorithm>

namespace lit::memory {

namespace {
thread_local std::size_t t_live = 0;
thread_local std::size_t t_peak = 0;
}  // namespace

std::size_t live_bytes() noexcept { return t_live; }
std::size_t peak_bytes() noexcept { return t_peak; }
void reset_peak() noexcept { t_peak = t_live; }

void on_allocate(std::size_t bytes) noexcept {
    t_live += bytes;
    t_peak = std::max(t_peak, t_live);
}

void on_deallocate(std::size_t bytes) noexcept { t_live = bytes > t_live ? 0 : t_live - bytes; }

}  // namespace lit::memory
