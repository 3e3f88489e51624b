// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "splatlab/core/projection.hpp"

#include <algorithm>
#include <cmath>

namespace splatlab {

/// Blend updates with a smaller weight are skipped (forward and backward).
inline constexpr double kMinBlendAlpha = 1.0 / 255.0;
/// Per-splat blend weights are clamped to this from above.
inline constexpr double kMaxBlendAlpha = 0.99;
/// Blending stops before transmittance would fall below this, i.e. before
/// accumulated opacity would exceed 0.9999.
inline constexpr double kMinTransmittance = 1e-4;

/// The blend weight of one splat at one pixel, with everything the backward
/// pass needs to differentiate it.
template <typename T> struct BlendSample {
    T weight = T(0);   // min(0.99, alpha * G), or 0 when skipped
    T gaussian = T(0); // G
    T dx = T(0), dy = T(0);
    bool clamped = false;
    bool skipped = true;
};

template <typename T> BlendSample<T> blend_sample(const ProjectedSplat<T> &s, int px, int py) {
    BlendSample<T> b;
    b.dx = T(px) - s.mean2d.x();
    b.dy = T(py) - s.mean2d.y();
    const T power = gaussian_power(s.conic, b.dx, b.dy);
    if (power > T(0)) return b;
    b.gaussian = std::exp(power);
    const T a = s.alpha * b.gaussian;
    b.clamped = a > T(kMaxBlendAlpha);
    const T w = b.clamped ? T(kMaxBlendAlpha) : a;
    if (w < T(kMinBlendAlpha)) return b;
    b.weight = w;
    b.skipped = false;
    return b;
}

} // namespace splatlab
