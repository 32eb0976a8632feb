// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "lit/towers/tower.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "lit/hash.hpp"

namespace lit::towers {

std::string_view to_string(TowerKind kind) noexcept {
    return kind == TowerKind::Mlp ? "mlp" : "tiny-transformer";
}

TowerKind parse_kind(std::string_view text) {
    if (text == "mlp") return TowerKind::Mlp;
    if (text == "tiny-transformer") return TowerKind::TinyTransformer;
    fail(Errc::InvalidConfig, "unknown tower kind '" + std::string(text) + "'");
}

void TowerConfig::validate() const {
    if (width == 0 || depth == 0 || embed_dim == 0) fail(Errc::InvalidConfig, "tower sizes must be positive");
    if (modality == Modality::Text) {
        if (max_len != kMaxTokens) fail(Errc::InvalidConfig, "text towers use a fixed sequence length of 16");
        if (vocab_size < 2) fail(Errc::InvalidConfig, "vocabulary too small");
    } else if (input_dim == 0) {
        fail(Errc::InvalidConfig, "image input_dim must be positive");
    }
    if (kind == TowerKind::TinyTransformer) {
        if (heads == 0 || width % heads != 0) fail(Errc::InvalidConfig, "width must be divisible by heads");
        if (modality == Modality::Image && (patches == 0 || input_dim % patches != 0)) {
            fail(Errc::InvalidConfig, "patches must divide input_dim");
        }
    }
}

std::uint64_t TowerConfig::body_digest() const {
    std::ostringstream os;
    os << "tower/v1|" << to_string(kind) << '|' << (modality == Modality::Image ? "image" : "text") << '|';
    if (modality == Modality::Image) {
        os << "in=" << input_dim;
        if (kind == TowerKind::TinyTransformer) os << "|patches=" << patches;
    } else {
        os << "vocab=" << vocab_size << "|len=" << max_len;
    }
    os << "|width=" << width << "|depth=" << depth;
    if (kind == TowerKind::TinyTransformer) os << "|heads=" << heads;
    Fnv1a h;
    h.update(os.str());
    return h.digest();
}

TowerConfig default_image_config() {
    TowerConfig c;
    c.kind = TowerKind::Mlp;
    c.modality = Modality::Image;
    c.input_dim = 32;
    c.width = 64;
    c.depth = 2;
    c.embed_dim = 64;
    c.head = false;
    return c;
}

TowerConfig default_text_config() {
    TowerConfig c;
    c.kind = TowerKind::Mlp;
    c.modality = Modality::Text;
    c.vocab_size = 256;
    c.width = 64;
    c.depth = 2;
    c.embed_dim = 64;
    c.head = true;
    return c;
}

char lock_char(LockMode mode) noexcept {
    switch (mode) {
        case LockMode::Locked: return 'L';
        case LockMode::Unlocked: return 'U';
        case LockMode::Random: return 'u';
    }
    return '?';
}

LockMode parse_lock(char c) {
    switch (c) {
        case 'L': return LockMode::Locked;
        case 'U': return LockMode::Unlocked;
        case 'u': return LockMode::Random;
        default: fail(Errc::InvalidConfig, std::string("unknown lock mode '") + c + "'");
    }
}

template <Scalar T>
const Parameter<T>& TowerState<T>::param(std::string_view name) const {
    for (const auto& p : params)
        if (p.name == name) return p;
    for (const auto& p : head)
        if (p.name == name) return p;
    fail(Errc::CheckpointMismatch, "no parameter named '" + std::string(name) + "'");
}

template <Scalar T>
Parameter<T>& TowerState<T>::param(std::string_view name) {
    return const_cast<Parameter<T>&>(std::as_const(*this).param(name));
}

template <Scalar T>
std::vector<Parameter<T>*> TowerState<T>::all_parameters() {
    std::vector<Parameter<T>*> out;
    for (auto& p : params) out.push_back(&p);
    for (auto& p : head) out.push_back(&p);
    return out;
}

template <Scalar T>
std::size_t TowerState<T>::parameter_count(bool include_head) const {
    std::size_t n = 0;
    for (const auto& p : params) n += p.value.numel();
    if (include_head)
        for (const auto& p : head) n += p.value.numel();
    return n;
}

template <Scalar T>
std::uint64_t TowerState<T>::digest() const {
    Fnv1a h;
    h.update_value(config.body_digest());
    h.update_value(static_cast<std::uint64_t>(head.empty() ? 0 : config.embed_dim));
    auto mix = [&](const Parameter<T>& p) {
        h.update(p.name);
        h.update_span(p.value.values());
    };
    for (const auto& p : params) mix(p);
    for (const auto& p : head) mix(p);
    return h.digest();
}

namespace {

// Truncated at two standard deviations.
template <Scalar T>
Tensor<T> trunc_normal(Shape shape, double stddev, std::mt19937_64& rng) {
    Tensor<T> t(std::move(shape));
    std::normal_distribution<double> dist(0.0, 1.0);
    for (auto& v : t.values()) {
        double z = dist(rng);
        while (std::abs(z) > 2.0) z = dist(rng);
        v = static_cast<T>(z * stddev);
    }
    return t;
}

constexpr double kInitStd = 0.02;

template <Scalar T>
struct LayoutBuilder {
    std::vector<Parameter<T>>& out;
    std::mt19937_64& rng;

    void weight(std::string name, std::size_t rows, std::size_t cols) {
        out.emplace_back(std::move(name), trunc_normal<T>({rows, cols}, kInitStd, rng));
    }
    void bias(std::string name, std::size_t n) { out.emplace_back(std::move(name), Tensor<T>({n})); }
    void ones(std::string name, std::size_t n) { out.emplace_back(std::move(name), Tensor<T>({n}, T{1})); }
    void linear(const std::string& prefix, std::size_t in, std::size_t outw) {
        weight(prefix + ".weight", in, outw);
        bias(prefix + ".bias", outw);
    }
    void norm(const std::string& prefix, std::size_t n) {
        ones(prefix + ".gamma", n);
        bias(prefix + ".beta", n);
    }
};

template <Scalar T>
void build_body(const TowerConfig& c, std::vector<Parameter<T>>& out, std::mt19937_64& rng) {
    LayoutBuilder<T> b{out, rng};
    const bool text = c.modality == Modality::Text;
    if (c.kind == TowerKind::Mlp) {
        std::size_t in = c.input_dim;
        if (text) {
            b.weight("embed.weight", c.vocab_size, c.width);
            in = c.width;
        }
        for (std::size_t i = 0; i < c.depth; ++i) {
            b.linear("layer" + std::to_string(i), i == 0 ? in : c.width, c.width);
        }
        return;
    }
    if (text) {
        b.weight("embed.weight", c.vocab_size, c.width);
        b.weight("pos.weight", c.max_len, c.width);
    } else {
        b.linear("patch", c.input_dim / c.patches, c.width);
        b.weight("pos.weight", c.patches, c.width);
    }
    for (std::size_t i = 0; i < c.depth; ++i) {
        const std::string p = "block" + std::to_string(i);
        b.norm(p + ".ln1", c.width);
        b.linear(p + ".attn.q", c.width, c.width);
        b.linear(p + ".attn.k", c.width, c.width);
        b.linear(p + ".attn.v", c.width, c.width);
        b.linear(p + ".attn.o", c.width, c.width);
        b.norm(p + ".ln2", c.width);
        b.linear(p + ".mlp.fc1", c.width, 4 * c.width);
        b.linear(p + ".mlp.fc2", 4 * c.width, c.width);
    }
    b.norm("final_ln", c.width);
}

std::uint64_t stream_seed(std::uint64_t seed, const TowerConfig& c, std::uint64_t salt) {
    Fnv1a h;
    h.update_value(seed);
    h.update_value(static_cast<std::uint32_t>(c.modality));
    h.update_value(salt);
    return h.digest();
}

// Walks the body parameters in layout order.
template <Scalar T>
class Cursor {
   public:
    Cursor(Tape<T>& tape, const std::vector<Parameter<T>>& params, bool track)
        : tape_(tape), params_(params), track_(track) {}

    NodeId next(std::string_view expected) {
        if (at_ >= params_.size() || params_[at_].name != expected) {
            fail(Errc::CheckpointMismatch, "parameter layout mismatch at '" + std::string(expected) + "'");
        }
        return tape_.param(params_[at_++], track_);
    }

    NodeId linear(NodeId x, const std::string& prefix) {
        const NodeId w = next(prefix + ".weight");
        const NodeId b = next(prefix + ".bias");
        return tape_.add_bias(tape_.matmul(x, w), b);
    }

    NodeId norm(NodeId x, const std::string& prefix) {
        const NodeId g = next(prefix + ".gamma");
        const NodeId b = next(prefix + ".beta");
        return tape_.layer_norm(x, g, b);
    }

   private:
    Tape<T>& tape_;
    const std::vector<Parameter<T>>& params_;
    bool track_;
    std::size_t at_ = 0;
};

template <Scalar T>
NodeId mlp_stack(Cursor<T>& cur, Tape<T>& tape, NodeId x, std::size_t depth) {
    for (std::size_t i = 0; i < depth; ++i) {
        x = cur.linear(x, "layer" + std::to_string(i));
        if (i + 1 < depth) x = tape.gelu(x);
    }
    return x;
}

template <Scalar T>
NodeId transformer_blocks(Cursor<T>& cur, Tape<T>& tape, NodeId x, const TowerConfig& c,
                          std::span<const std::uint8_t> mask, std::size_t seq_len) {
    for (std::size_t i = 0; i < c.depth; ++i) {
        const std::string p = "block" + std::to_string(i);
        const NodeId h = cur.norm(x, p + ".ln1");
        const NodeId q = cur.linear(h, p + ".attn.q");
        const NodeId k = cur.linear(h, p + ".attn.k");
        const NodeId v = cur.linear(h, p + ".attn.v");
        const NodeId a = tape.attention(q, k, v, mask, seq_len, c.heads);
        x = tape.add(x, cur.linear(a, p + ".attn.o"));
        const NodeId h2 = cur.norm(x, p + ".ln2");
        const NodeId m = cur.linear(tape.gelu(cur.linear(h2, p + ".mlp.fc1")), p + ".mlp.fc2");
        x = tape.add(x, m);
    }
    return cur.norm(x, "final_ln");
}

template <Scalar T>
NodeId text_body_graph(Tape<T>& tape, const TowerState<T>& tower, std::span<const TokenSeq> tokens, bool track) {
    const auto& c = tower.config;
    std::vector<std::int32_t> ids;
    std::vector<std::uint8_t> mask;
    ids.reserve(tokens.size() * kMaxTokens);
    mask.reserve(tokens.size() * kMaxTokens);
    for (const auto& seq : tokens) {
        for (auto id : seq) {
            if (id < 0 || static_cast<std::size_t>(id) >= c.vocab_size) {
                fail(Errc::TokenOutOfRange, "token id " + std::to_string(id) + " outside vocabulary of " +
                                                std::to_string(c.vocab_size));
            }
            ids.push_back(id);
            mask.push_back(id != kPadId ? 1 : 0);
        }
    }
    Cursor<T> cur(tape, tower.params, track);
    NodeId x = tape.embedding(cur.next("embed.weight"), ids);
    if (c.kind == TowerKind::Mlp) {
        x = tape.masked_mean_pool(x, mask, kMaxTokens);
        return mlp_stack(cur, tape, x, c.depth);
    }
    x = tape.add_tiled(x, cur.next("pos.weight"));
    x = transformer_blocks(cur, tape, x, c, mask, kMaxTokens);
    return tape.masked_mean_pool(x, mask, kMaxTokens);
}

template <Scalar T>
void check_modality(const TowerState<T>& tower, Modality expected) {
    if (tower.config.modality != expected) {
        fail(Errc::ShapeMismatch, expected == Modality::Image ? "tower is not an image tower" : "tower is not a text tower");
    }
}

}  // namespace

template <Scalar T>
TowerState<T> init_tower(const TowerConfig& config, LockMode mode, std::uint64_t seed, const Checkpoint* checkpoint) {
    config.validate();
    const bool pretrained = mode != LockMode::Random;
    if (pretrained && checkpoint == nullptr) {
        fail(Errc::ModeMismatch, std::string("lock mode ") + lock_char(mode) + " requires a pretrained checkpoint");
    }
    if (!pretrained && checkpoint != nullptr) {
        fail(Errc::ModeMismatch, "lock mode u starts from random weights and takes no checkpoint");
    }

    TowerState<T> tower;
    tower.config = config;
    tower.mode = mode;
    std::mt19937_64 body_rng(stream_seed(seed, config, 1));
    build_body<T>(config, tower.params, body_rng);

    if (checkpoint != nullptr) {
        if (checkpoint->config_digest != config.body_digest()) {
            fail(Errc::CheckpointMismatch, "checkpoint was written for a different tower config");
        }
        if (checkpoint->tensors.size() < tower.params.size()) {
            fail(Errc::CheckpointMismatch, "checkpoint holds too few tensors");
        }
        for (auto& p : tower.params) {
            auto it = std::find_if(checkpoint->tensors.begin(), checkpoint->tensors.end(),
                                   [&](const NamedTensor& t) { return t.name == p.name; });
            if (it == checkpoint->tensors.end()) fail(Errc::CheckpointMismatch, "checkpoint lacks '" + p.name + "'");
            if (it->value.shape() != p.value.shape()) {
                fail(Errc::CheckpointMismatch, "shape of '" + p.name + "' is " + shape_string(it->value.shape()) +
                                                   ", expected " + shape_string(p.value.shape()));
            }
            p.value = it->value.template cast<T>();
        }
    }
    for (auto& p : tower.params) p.trainable = mode != LockMode::Locked;

    if (config.head) {
        std::mt19937_64 head_rng(stream_seed(seed, config, 2));
        LayoutBuilder<T> b{tower.head, head_rng};
        b.linear("head", config.width, config.embed_dim);
    }
    return tower;
}

Checkpoint make_checkpoint(const TowerState<float>& tower, bool include_head) {
    Checkpoint ckpt;
    ckpt.config_digest = tower.config.body_digest();
    for (const auto& p : tower.params) ckpt.tensors.push_back({p.name, p.value});
    if (include_head)
        for (const auto& p : tower.head) ckpt.tensors.push_back({p.name, p.value});
    return ckpt;
}

void load_head(TowerState<float>& tower, const Checkpoint& checkpoint) {
    for (auto& p : tower.head) {
        auto it = std::find_if(checkpoint.tensors.begin(), checkpoint.tensors.end(),
                               [&](const NamedTensor& t) { return t.name == p.name; });
        if (it == checkpoint.tensors.end()) fail(Errc::CheckpointMismatch, "checkpoint lacks '" + p.name + "'");
        if (it->value.shape() != p.value.shape()) fail(Errc::CheckpointMismatch, "head shape mismatch");
        p.value = it->value;
    }
}

template <Scalar T>
NodeId image_body(Tape<T>& tape, const TowerState<T>& tower, NodeId features, bool track) {
    check_modality(tower, Modality::Image);
    const auto& c = tower.config;
    const auto& X = tape.value(features);
    if (X.rank() != 2 || X.cols() != c.input_dim) {
        fail(Errc::ShapeMismatch, "image batch " + shape_string(X.shape()) + " for input_dim " +
                                      std::to_string(c.input_dim));
    }
    Cursor<T> cur(tape, tower.params, track);
    if (c.kind == TowerKind::Mlp) return mlp_stack(cur, tape, features, c.depth);

    const std::size_t n = X.rows();
    const std::size_t patch_dim = c.input_dim / c.patches;
    NodeId x = tape.reshape(features, Shape{n * c.patches, patch_dim});
    x = cur.linear(x, "patch");
    x = tape.add_tiled(x, cur.next("pos.weight"));
    const std::vector<std::uint8_t> mask(n * c.patches, 1);
    x = transformer_blocks(cur, tape, x, c, mask, c.patches);
    return tape.masked_mean_pool(x, mask, c.patches);
}

template <Scalar T>
NodeId project(Tape<T>& tape, const TowerState<T>& tower, NodeId representation, bool track) {
    NodeId x = representation;
    if (!tower.head.empty()) {
        const NodeId w = tape.param(tower.head[0], track);
        const NodeId b = tape.param(tower.head[1], track);
        x = tape.add_bias(tape.matmul(x, w), b);
    }
    return tape.l2_normalize(x);
}

template <Scalar T>
NodeId image_forward(Tape<T>& tape, const TowerState<T>& tower, NodeId features, bool track) {
    return project(tape, tower, image_body(tape, tower, features, track), track);
}

template <Scalar T>
NodeId text_body(Tape<T>& tape, const TowerState<T>& tower, std::span<const TokenSeq> tokens, bool track) {
    check_modality(tower, Modality::Text);
    return text_body_graph(tape, tower, tokens, track);
}

template <Scalar T>
NodeId text_forward(Tape<T>& tape, const TowerState<T>& tower, std::span<const TokenSeq> tokens, bool track) {
    return project(tape, tower, text_body(tape, tower, tokens, track), track);
}

template <Scalar T>
EmbeddingBatch<T> encode_images(const TowerState<T>& tower, const Tensor<T>& features, std::vector<std::uint64_t> ids) {
    check_modality(tower, Modality::Image);
    if (features.rank() != 2 || features.cols() != tower.config.input_dim) {
        fail(Errc::ShapeMismatch, "image batch " + shape_string(features.shape()) + " for input_dim " +
                                      std::to_string(tower.config.input_dim));
    }
    const std::size_t n = features.rows();
    if (ids.empty()) ids = iota_ids(n);
    if (ids.size() != n) fail(Errc::BatchMismatch, "id count differs from batch size");
    EmbeddingBatch<T> out;
    out.item_ids = std::move(ids);
    out.normalized = true;
    if (n == 0) {
        out.rows = Tensor<T>::matrix(0, tower.config.output_dim());
        return out;
    }
    Tape<T> tape;
    const NodeId y = image_forward(tape, tower, tape.constant(features), false);
    out.rows = tape.value(y);
    return out;
}

template <Scalar T>
EmbeddingBatch<T> encode_texts(const TowerState<T>& tower, std::span<const TokenSeq> tokens,
                               std::vector<std::uint64_t> ids) {
    check_modality(tower, Modality::Text);
    const std::size_t n = tokens.size();
    if (ids.empty()) ids = iota_ids(n);
    if (ids.size() != n) fail(Errc::BatchMismatch, "id count differs from batch size");
    EmbeddingBatch<T> out;
    out.item_ids = std::move(ids);
    out.normalized = true;
    if (n == 0) {
        out.rows = Tensor<T>::matrix(0, tower.config.output_dim());
        return out;
    }
    Tape<T> tape;
    const NodeId y = text_forward(tape, tower, tokens, false);
    out.rows = tape.value(y);
    return out;
}

template <Scalar T>
Tensor<T> image_representation(const TowerState<T>& tower, const Tensor<T>& features) {
    if (features.rank() == 2 && features.rows() == 0) return Tensor<T>::matrix(0, tower.config.width);
    Tape<T> tape;
    const NodeId y = image_body(tape, tower, tape.constant(features), false);
    return tape.value(y);
}

#define LIT_INSTANTIATE_TOWER(T)                                                                              \
    template struct TowerState<T>;                                                                            \
    template TowerState<T> init_tower<T>(const TowerConfig&, LockMode, std::uint64_t, const Checkpoint*);    \
    template NodeId image_forward<T>(Tape<T>&, const TowerState<T>&, NodeId, bool);                          \
    template NodeId text_forward<T>(Tape<T>&, const TowerState<T>&, std::span<const TokenSeq>, bool);        \
    template NodeId image_body<T>(Tape<T>&, const TowerState<T>&, NodeId, bool);                             \
    template NodeId text_body<T>(Tape<T>&, const TowerState<T>&, std::span<const TokenSeq>, bool);           \
    template NodeId project<T>(Tape<T>&, const TowerState<T>&, NodeId, bool);                                \
    template EmbeddingBatch<T> encode_images<T>(const TowerState<T>&, const Tensor<T>&,                      \
                                                std::vector<std::uint64_t>);                                  \
    template EmbeddingBatch<T> encode_texts<T>(const TowerState<T>&, std::span<const TokenSeq>,              \
                                               std::vector<std::uint64_t>);                                   \
    template Tensor<T> image_representation<T>(const TowerState<T>&, const Tensor<T>&);

LIT_INSTANTIATE_TOWER(float)
LIT_INSTANTIATE_TOWER(double)

#undef LIT_INSTANTIATE_TOWER

}  // namespace lit::towers
