// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
// Iteration-indexed schedules. Iterations count from 1.
//
#pragma once

#include "splatlab/optim/adam.hpp"
#include "splatlab/optim/config.hpp"

#include <algorithm>
#include <cmath>

namespace splatlab {

/// Log-linear interpolation from `init` to `final` over `total` iterations.
inline double exponential_decay(double init, double final, long iteration, long total) {
    if (total <= 0) return final;
    const double t = std::clamp(double(iteration) / double(total), 0.0, 1.0);
    return std::exp((1.0 - t) * std::log(init) + t * std::log(final));
}

inline StepRates step_rates(const TrainConfig &cfg, long iteration, double scene_extent) {
    const double pos_scale = cfg.scale_position_lr_by_extent ? scene_extent : 1.0;
    StepRates r;
    r.position = pos_scale * exponential_decay(cfg.lr.position_init, cfg.lr.position_final, iteration, cfg.total_iters);
    r.sh_dc = cfg.lr.sh_dc;
    r.sh_rest = cfg.lr.sh_rest;
    r.opacity = cfg.lr.opacity;
    r.scale = cfg.lr.scale;
    r.rotation = cfg.lr.rotation;
    return r;
}

/// SH degree active while rendering iteration `iteration`.
inline int active_sh_degree_at(const TrainConfig &cfg, long iteration) {
    return int(std::min<long>(cfg.max_sh_degree, iteration / cfg.sh_band_interval));
}

/// Image downscale factor used at `iteration`.
inline int resolution_factor_at(const TrainConfig &cfg, long iteration) {
    if (!cfg.resolution_warmup) return 1;
    if (iteration <= cfg.warmup_quarter_iters) return 4;
    if (iteration <= cfg.warmup_half_iters) return 2;
    return 1;
}

inline bool accumulates_stats_at(const TrainConfig &cfg, long iteration) {
    return cfg.densify && iteration <= cfg.densify_until;
}

inline bool is_densify_iteration(const TrainConfig &cfg, long iteration) {
    return cfg.densify && iteration > cfg.densify_from && iteration <= cfg.densify_until &&
           iteration % cfg.densify_interval == 0;
}

inline bool is_opacity_reset_iteration(const TrainConfig &cfg, long iteration) {
    return cfg.densify && iteration <= cfg.densify_until && iteration % cfg.opacity_reset_interval == 0;
}

/// Size-based pruning only runs once opacities have been reset.
inline bool prunes_size_at(const TrainConfig &cfg, long iteration) {
    return iteration > cfg.opacity_reset_interval;
}

} // namespace splatlab
