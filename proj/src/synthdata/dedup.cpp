// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "lit/synthdata/dedup.hpp"

#include <cmath>
#include <unordered_map>

#include "lit/error.hpp"

namespace lit::synth {

std::string_view to_string(DedupPolicy policy) noexcept {
    switch (policy) {
        case DedupPolicy::None: return "none";
        case DedupPolicy::TestOnly: return "test";
        case DedupPolicy::TrainTest: return "train+test";
    }
    return "?";
}

DedupPolicy parse_dedup(std::string_view text) {
    if (text == "none") return DedupPolicy::None;
    if (text == "test" || text == "test-only") return DedupPolicy::TestOnly;
    if (text == "train+test") return DedupPolicy::TrainTest;
    fail(Errc::InvalidConfig, "unknown dedup policy '" + std::string(text) + "'");
}

namespace {

struct Reference {
    const Example* example;
    std::size_t index;  // position among the selected eval examples
    double norm;
};

std::vector<Reference> references(const EvalSplits& eval, DedupPolicy policy) {
    std::vector<const std::vector<Example>*> splits;
    if (policy != DedupPolicy::None) {
        splits.push_back(&eval.classification);
        splits.push_back(&eval.retrieval);
    }
    if (policy == DedupPolicy::TrainTest) splits.push_back(&eval.probe_train);
    std::vector<Reference> refs;
    for (const auto* split : splits) {
        for (const auto& ex : *split) {
            double ss = 0.0;
            for (float v : ex.image) ss += double(v) * v;
            refs.push_back({&ex, refs.size(), std::sqrt(ss)});
        }
    }
    return refs;
}

enum class Match { None, Exact, Near };

class Matcher {
   public:
    Matcher(const EvalSplits& eval, DedupPolicy policy, double near_cosine)
        : refs_(references(eval, policy)), near_(near_cosine) {
        for (const auto& r : refs_) by_hash_.emplace(r.example->content_hash, r.index);
    }

    std::size_t size() const noexcept { return refs_.size(); }

    // Reports every eval index matched by `ex` through `hit`.
    template <typename Hit>
    Match match(const Example& ex, Hit&& hit) const {
        Match best = Match::None;
        auto range = by_hash_.equal_range(ex.content_hash);
        for (auto it = range.first; it != range.second; ++it) {
            if (refs_[it->second].example->image == ex.image) {
                best = Match::Exact;
                hit(it->second);
            }
        }
        double ss = 0.0;
        for (float v : ex.image) ss += double(v) * v;
        const double norm = std::sqrt(ss);
        if (norm == 0.0) return best;
        for (const auto& r : refs_) {
            if (r.norm == 0.0 || r.example->image.size() != ex.image.size()) continue;
            double dot = 0.0;
            for (std::size_t i = 0; i < ex.image.size(); ++i) dot += double(ex.image[i]) * r.example->image[i];
            if (dot / (norm * r.norm) >= near_) {
                if (best == Match::None) best = Match::Near;
                hit(r.index);
            }
        }
        return best;
    }

   private:
    std::vector<Reference> refs_;
    std::unordered_multimap<std::uint64_t, std::size_t> by_hash_;
    double near_;
};

}  // namespace

DedupResult dedup(const std::vector<Example>& corpus, const EvalSplits& eval, DedupPolicy policy,
                  double near_cosine) {
    DedupResult out;
    out.report.policy = std::string(to_string(policy));
    if (policy == DedupPolicy::None) {
        out.kept = corpus;
        return out;
    }
    const Matcher matcher(eval, policy, near_cosine);
    std::vector<bool> eval_hit(matcher.size(), false);
    out.kept.reserve(corpus.size());
    for (const auto& ex : corpus) {
        const Match m = matcher.match(ex, [&](std::size_t i) { eval_hit[i] = true; });
        if (m == Match::None) {
            out.kept.push_back(ex);
            continue;
        }
        ++out.report.removed_upstream;
        if (m == Match::Exact) ++out.report.exact_matches;
        else ++out.report.near_matches;
    }
    for (bool h : eval_hit) out.report.matched_eval += h ? 1 : 0;
    return out;
}

void apply_dedup(Corpus& corpus, DedupPolicy policy) {
    auto result = dedup(corpus.train, corpus.eval, policy);
    corpus.train = std::move(result.kept);
    corpus.dedup = result.report;
}

std::size_t remaining_matches(const std::vector<Example>& corpus, const EvalSplits& eval, DedupPolicy policy,
                              double near_cosine) {
    if (policy == DedupPolicy::None) return 0;
    const Matcher matcher(eval, policy, near_cosine);
    std::size_t n = 0;
    for (const auto& ex : corpus) matcher.match(ex, [&](std::size_t) { ++n; });
    return n;
}

}  // namespace lit::synth
