// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lit/contrastive/embedding_batch.hpp"
#include "lit/diffcore/tape.hpp"
#include "lit/tokens.hpp"

namespace lit::towers {

enum class TowerKind { TinyTransformer, Mlp };
enum class Modality { Image, Text };

std::string_view to_string(TowerKind kind) noexcept;
TowerKind parse_kind(std::string_view text);

struct TowerConfig {
    TowerKind kind = TowerKind::Mlp;
    Modality modality = Modality::Image;
    std::size_t input_dim = 32;    // image feature width
    std::size_t vocab_size = 256;  // text only
    std::size_t max_len = kMaxTokens;
    std::size_t patches = 8;  // image tiny-transformer tokens; must divide input_dim
    std::size_t width = 64;
    std::size_t depth = 2;
    std::size_t heads = 4;
    std::size_t embed_dim = 64;
    bool head = false;

    void validate() const;
    /// Digest of every field that determines the encoder body's parameter
    /// layout; stored in checkpoints.
    std::uint64_t body_digest() const;
    /// Width of the final embedding (embed_dim with a head, width without).
    std::size_t output_dim() const noexcept { return head ? embed_dim : width; }

    friend bool operator==(const TowerConfig&, const TowerConfig&) = default;
};

TowerConfig default_image_config();
TowerConfig default_text_config();

/// L = locked pretrained, U = unlocked pretrained, u = unlocked random.
enum class LockMode { Locked, Unlocked, Random };

char lock_char(LockMode mode) noexcept;
LockMode parse_lock(char c);

struct NamedTensor {
    std::string name;
    TensorF value;
};

/// Encoder body weights plus the digest of the config that produced them.
struct Checkpoint {
    std::uint64_t config_digest = 0;
    std::vector<NamedTensor> tensors;
};

template <Scalar T>
struct TowerState {
    TowerConfig config;
    LockMode mode = LockMode::Random;
    std::vector<Parameter<T>> params;  // encoder body
    std::vector<Parameter<T>> head;    // {weight, bias} or empty

    const Parameter<T>& param(std::string_view name) const;
    Parameter<T>& param(std::string_view name);
    std::vector<Parameter<T>*> all_parameters();
    std::size_t parameter_count(bool include_head = true) const;

    /// Identifies this exact tower (config and every weight bit).
    std::uint64_t digest() const;

    template <Scalar U>
    TowerState<U> cast() const {
        TowerState<U> out;
        out.config = config;
        out.mode = mode;
        for (const auto& p : params) out.params.push_back(p.template cast<U>());
        for (const auto& p : head) out.head.push_back(p.template cast<U>());
        return out;
    }
};

/// Builds a tower. Modes L and U require a checkpoint, u forbids one. The
/// head, when configured, is always freshly initialised and trainable.
template <Scalar T>
TowerState<T> init_tower(const TowerConfig& config, LockMode mode, std::uint64_t seed,
                         const Checkpoint* checkpoint = nullptr);

Checkpoint make_checkpoint(const TowerState<float>& tower, bool include_head = false);

/// Restores head weights saved by make_checkpoint(tower, true).
void load_head(TowerState<float>& tower, const Checkpoint& checkpoint);

// Graph builders. `track` controls whether trainable weights record
// gradients; the returned node is the unit-norm embedding.
template <Scalar T>
NodeId image_forward(Tape<T>& tape, const TowerState<T>& tower, NodeId features, bool track = true);
template <Scalar T>
NodeId text_forward(Tape<T>& tape, const TowerState<T>& tower, std::span<const TokenSeq> tokens, bool track = true);

/// Representation before the head (pre-logits), unnormalised.
template <Scalar T>
NodeId image_body(Tape<T>& tape, const TowerState<T>& tower, NodeId features, bool track = true);
template <Scalar T>
NodeId text_body(Tape<T>& tape, const TowerState<T>& tower, std::span<const TokenSeq> tokens, bool track = true);
/// Applies the head (if any) and row normalisation to a body output.
template <Scalar T>
NodeId project(Tape<T>& tape, const TowerState<T>& tower, NodeId representation, bool track = true);

template <Scalar T>
EmbeddingBatch<T> encode_images(const TowerState<T>& tower, const Tensor<T>& features,
                                std::vector<std::uint64_t> ids = {});
template <Scalar T>
EmbeddingBatch<T> encode_texts(const TowerState<T>& tower, std::span<const TokenSeq> tokens,
                               std::vector<std::uint64_t> ids = {});

/// Pre-head image representation for a batch, as a plain tensor.
template <Scalar T>
Tensor<T> image_representation(const TowerState<T>& tower, const Tensor<T>& features);

}  // namespace lit::towers
