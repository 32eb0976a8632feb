// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "lit/runner/precompute.hpp"

#include <chrono>

#include "lit/hash.hpp"

namespace lit::runner {

void to_json(nlohmann::json& j, const PrecomputeReport& r) {
    j = {{"epochs", r.epochs},
         {"steps", r.steps},
         {"images", r.images},
         {"build_seconds", r.build_seconds},
         {"cached_seconds", r.cached_seconds},
         {"uncached_seconds", r.uncached_seconds},
         {"cached_imgs_per_sec", r.cached_ips},
         {"uncached_imgs_per_sec", r.uncached_ips},
         {"speedup", r.speedup},
         {"cached_peak_bytes", r.cached_peak_bytes},
         {"uncached_peak_bytes", r.uncached_peak_bytes},
         {"max_batch_cached", r.max_batch_cached},
         {"max_batch_uncached", r.max_batch_uncached},
         {"image_parameters", r.image_parameters},
         {"text_parameters", r.text_parameters}};
}

PrecomputeReport measure_precompute(const RunConfig& config, const synth::Corpus& corpus, const Pretrained& pretrained,
                                    std::size_t epochs) {
    if (config.lock.image != towers::LockMode::Locked) fail(Errc::NotLocked, "precompute needs image lock mode L");
    if (epochs == 0) fail(Errc::InvalidConfig, "epochs must be positive");
    if (!pretrained.image) fail(Errc::ModeMismatch, "lock mode L needs an image checkpoint");

    RunConfig run = config;
    run.validate();
    // The measured paths see the same training split train() would use.
    const std::size_t usable = run.dedup == synth::DedupPolicy::None
                                   ? corpus.train.size()
                                   : synth::dedup(corpus.train, corpus.eval, run.dedup).kept.size();
    const std::size_t per_epoch = usable / run.batch;
    if (per_epoch == 0) fail(Errc::InvalidConfig, "batch exceeds the training split");
    run.steps = epochs * per_epoch;

    PrecomputeReport rep;
    rep.epochs = epochs;
    rep.steps = run.steps;
    rep.images = run.steps * run.batch;

    TrainOptions quiet;
    quiet.evaluate = false;
    const auto uncached = train(run, corpus, pretrained, quiet);

    const auto tower = towers::init_tower<float>(run.image, towers::LockMode::Locked, mix_seed(run.seed, 1),
                                                 &*pretrained.image);
    const auto t0 = std::chrono::steady_clock::now();
    const auto cache = precompute_cache(tower, corpus.train);
    rep.build_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    TrainOptions cached_opts = quiet;
    cached_opts.cache = &cache;
    const auto cached = train(run, corpus, pretrained, cached_opts);

    rep.uncached_seconds = uncached.train_seconds;
    rep.cached_seconds = rep.build_seconds + cached.train_seconds;
    rep.uncached_ips = static_cast<double>(rep.images) / rep.uncached_seconds;
    rep.cached_ips = static_cast<double>(rep.images) / rep.cached_seconds;
    rep.speedup = rep.cached_ips / rep.uncached_ips;
    rep.uncached_peak_bytes = uncached.peak_step_bytes;
    rep.cached_peak_bytes = cached.peak_step_bytes;
    rep.max_batch_uncached = run.batch;
    rep.max_batch_cached = rep.cached_peak_bytes == 0
                               ? run.batch
                               : static_cast<std::size_t>(static_cast<double>(run.batch) *
                                                          static_cast<double>(rep.uncached_peak_bytes) /
                                                          static_cast<double>(rep.cached_peak_bytes));
    rep.image_parameters = tower.parameter_count();
    rep.text_parameters = uncached.text.parameter_count();
    return rep;
}

}  // namespace lit::runner
