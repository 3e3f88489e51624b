// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "splatlab/core/blend.hpp"
#include "splatlab/gradients/grads.hpp"

#include <cstdint>
#include <span>

namespace splatlab {

/// Back-to-front gradient of one pixel's composited colour
///
///   C = sum_i c_i w_i T_i + T_final * background,  T_i = prod_{j<i} (1 - w_j)
///
/// `ids` is the pixel's tile list in front-to-back order and
/// `contributor_count` the number of entries the forward pass walked up to and
/// including the last splat it blended. Intermediate transmittances are
/// recovered by dividing the stored final transmittance by (1 - w_j) for each
/// blended splat j, walking backwards; w_j <= 0.99 keeps that well defined.
/// Gradients are accumulated into `grads`, indexed like `splats`.
template <typename T>
void backward_blend(int px, int py, std::span<const std::uint32_t> ids, std::uint32_t contributor_count,
                    T final_transmittance, const Vec3<T> &background, const Vec3<T> &d_pixel,
                    std::span<const ProjectedSplat<T>> splats, std::span<SplatGrad<T>> grads) {
    T transmittance = final_transmittance;
    // Colour composited behind the current splat, background included.
    Vec3<T> behind = background;
    for (std::uint32_t n = contributor_count; n-- > 0;) {
        const std::uint32_t id = ids[n];
        const ProjectedSplat<T> &s = splats[id];
        const BlendSample<T> b = blend_sample(s, px, py);
        if (b.skipped) continue;

        transmittance /= (T(1) - b.weight);
        SplatGrad<T> &g = grads[id];
        g.color += (b.weight * transmittance) * d_pixel;

        const T d_weight = transmittance * (s.color - behind).dot(d_pixel);
        behind = b.weight * s.color + (T(1) - b.weight) * behind;
        if (b.clamped) continue;

        g.alpha += d_weight * b.gaussian;
        const T d_power = d_weight * s.alpha * b.gaussian;
        // power = -0.5 (a dx^2 + c dy^2) - b dx dy,  d = pixel - mean2d
        g.mean2d.x() += d_power * (s.conic[0] * b.dx + s.conic[1] * b.dy);
        g.mean2d.y() += d_power * (s.conic[1] * b.dx + s.conic[2] * b.dy);
        g.conic[0] += d_power * T(-0.5) * b.dx * b.dx;
        g.conic[1] += d_power * -(b.dx * b.dy);
        g.conic[2] += d_power * T(-0.5) * b.dy * b.dy;
    }
}

} // namespace splatlab
