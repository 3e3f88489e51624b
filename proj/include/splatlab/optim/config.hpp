// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "splatlab/core/gaussian.hpp"
#include "splatlab/core/types.hpp"

#include <algorithm>
#include <string>

namespace splatlab {

struct LearningRates {
    double position_init = 1.6e-4;
    double position_final = 1.6e-6;
    double sh_dc = 2.5e-3;
    double sh_rest = 2.5e-3 / 20.0;
    double opacity = 5e-2;
    double scale = 5e-3;
    double rotation = 1e-3;
};

struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-15;
};

struct TrainConfig {
    double lambda_dssim = 0.2;

    int total_iters = 30000;
    LearningRates lr;
    AdamParams adam;
    /// Multiply the position learning rates by the scene extent.
    bool scale_position_lr_by_extent = true;

    int sh_band_interval = 1000;
    int max_sh_degree = kMaxShDegree;

    /// Iterations rendered at 1/4 and 1/2 resolution.
    int warmup_quarter_iters = 250;
    int warmup_half_iters = 500;
    bool resolution_warmup = true;

    bool densify = true;
    int densify_interval = 100;
    int densify_from = 500;
    int densify_until = 15000;
    double densify_grad_threshold = 0.0002;
    double split_scale_fraction = 0.01; // of scene extent
    double split_factor = 1.6;
    double prune_alpha = 0.005;
    double prune_world_fraction = 0.1; // of scene extent
    int opacity_reset_interval = 3000;
    double opacity_reset_value = 0.01;

    Vec3<double> background = Vec3<double>::Zero();
    bool deterministic = false;

    /// Defaults for a run of `iters` iterations; densification stops halfway,
    /// and never later than iteration 15000.
    static TrainConfig for_iterations(int iters) {
        TrainConfig c;
        c.total_iters = iters;
        c.densify_until = std::min(15000, iters / 2);
        return c;
    }

    void validate() const {
        auto require = [](bool ok, const std::string &what) {
            if (!ok) throw InvalidArgument("train config: " + what);
        };
        require(lambda_dssim >= 0.0 && lambda_dssim <= 1.0, "lambda_dssim must lie in [0, 1]");
        require(total_iters >= 0, "total_iters must be non-negative");
        require(lr.position_init > 0 && lr.position_final > 0 && lr.sh_dc > 0 && lr.sh_rest > 0 &&
                    lr.opacity > 0 && lr.scale > 0 && lr.rotation > 0,
                "learning rates must be positive");
        require(adam.beta1 >= 0 && adam.beta1 < 1 && adam.beta2 >= 0 && adam.beta2 < 1 && adam.eps > 0,
                "invalid Adam parameters");
        require(sh_band_interval > 0, "sh_band_interval must be positive");
        require(max_sh_degree >= 0 && max_sh_degree <= kMaxShDegree, "max_sh_degree must lie in [0, 3]");
        require(densify_interval > 0 && opacity_reset_interval > 0, "intervals must be positive");
        require(densify_grad_threshold > 0 && split_scale_fraction > 0 && split_factor > 0 && prune_alpha > 0 &&
                    prune_world_fraction > 0,
                "thresholds must be positive");
        require(opacity_reset_value > 0 && opacity_reset_value < 1, "opacity_reset_value must lie in (0, 1)");
    }
};

} // namespace splatlab
