// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
// Adaptive density control: prune, clone, split and opacity reset.
//
#pragma once

#include "splatlab/optim/adam.hpp"
#include "splatlab/raster/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace splatlab {

/// Per-Gaussian view-space gradient statistics since the last densification.
struct DensityStats {
    std::vector<double> grad_sum;
    std::vector<long> count;
    std::vector<int> max_radius;

    std::size_t size() const { return grad_sum.size(); }

    void reset(std::size_t n) {
        grad_sum.assign(n, 0.0);
        count.assign(n, 0);
        max_radius.assign(n, 0);
    }

    double mean_grad(std::size_t i) const { return count[i] > 0 ? grad_sum[i] / double(count[i]) : 0.0; }

    template <typename T> void accumulate(const Frame<T> &frame, const std::vector<GaussianGrads<T>> &grads) {
        for (const auto &s : frame.splats) {
            grad_sum[s.source] += double(grads[s.source].view_pos_grad_norm);
            count[s.source] += 1;
            max_radius[s.source] = std::max(max_radius[s.source], s.radius);
        }
    }
};

struct DensifyReport {
    long before = 0;
    long after = 0;
    long pruned = 0;
    long cloned = 0;
    long split = 0; // parents replaced by two children each
};

struct DensifyLimits {
    double grad_threshold = 0.0;
    double split_scale = 0.0;  // world units
    double prune_alpha = 0.0;
    double prune_world = 0.0;  // world units; ignored when not positive
    double prune_radius = 0.0; // pixels; ignored when not positive
    double split_factor = 1.6;
};

inline DensifyLimits densify_limits(const TrainConfig &cfg, double scene_extent, int image_height,
                                    bool prune_size) {
    DensifyLimits l;
    l.grad_threshold = cfg.densify_grad_threshold;
    l.split_scale = cfg.split_scale_fraction * scene_extent;
    l.prune_alpha = cfg.prune_alpha;
    l.prune_world = prune_size ? cfg.prune_world_fraction * scene_extent : 0.0;
    l.prune_radius = prune_size ? 0.5 * image_height : 0.0;
    l.split_factor = cfg.split_factor;
    return l;
}

/// Two samples from the Gaussian's own density, each with scale / factor.
template <typename T, typename Rng> std::array<Gaussian<T>, 2> split_gaussian(const Gaussian<T> &g, T factor, Rng &rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    const Mat3<T> R = quaternion_to_rotation(normalized_rotation(g.rotation));
    const Vec3<T> s = g.scale();
    std::array<Gaussian<T>, 2> children{g, g};
    for (auto &c : children) {
        const Vec3<T> z(T(n(rng)), T(n(rng)), T(n(rng)));
        c.mean = g.mean + R * s.cwiseProduct(z);
        c.log_scale = g.log_scale.array() - std::log(factor);
    }
    return children;
}

template <typename T, typename Rng>
DensifyReport densify_and_prune(std::vector<Gaussian<T>> &gaussians, AdamMoments<T> &moments, DensityStats &stats,
                                const DensifyLimits &limits, Rng &rng) {
    if (moments.size() != gaussians.size() || stats.size() != gaussians.size())
        throw InvalidArgument("densify_and_prune: model, moments and statistics are not index-aligned");
    DensifyReport rep;
    rep.before = long(gaussians.size());
    std::vector<Gaussian<T>> kept, added;
    AdamMoments<T> kept_moments;
    kept.reserve(gaussians.size());
    for (std::size_t i = 0; i < gaussians.size(); ++i) {
        const Gaussian<T> &g = gaussians[i];
        const double max_scale = double(g.scale().maxCoeff());
        const bool too_large = (limits.prune_world > 0.0 && max_scale > limits.prune_world) ||
                               (limits.prune_radius > 0.0 && stats.max_radius[i] > limits.prune_radius);
        if (double(g.opacity()) < limits.prune_alpha || too_large) {
            ++rep.pruned;
            continue;
        }
        const bool densify = stats.mean_grad(i) > limits.grad_threshold;
        if (densify && max_scale > limits.split_scale) {
            for (auto &c : split_gaussian(g, T(limits.split_factor), rng)) added.push_back(c);
            ++rep.split;
            continue;
        }
        kept.push_back(g);
        kept_moments.first.push_back(moments.first[i]);
        kept_moments.second.push_back(moments.second[i]);
        if (densify) {
            added.push_back(g);
            ++rep.cloned;
        }
    }
    for (const auto &g : added) {
        kept.push_back(g);
        kept_moments.push_zero();
    }
    gaussians = std::move(kept);
    moments = std::move(kept_moments);
    stats.reset(gaussians.size());
    rep.after = long(gaussians.size());
    return rep;
}

/// Set every opacity to `alpha` and clear the opacity moments.
template <typename T> void reset_opacity(std::vector<Gaussian<T>> &gaussians, AdamMoments<T> &moments, double alpha) {
    const T target = T(logit(alpha));
    for (auto &g : gaussians) g.opacity_logit = target;
    moments.reset_opacity();
}

} // namespace splatlab
