// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "splatlab/core/camera.hpp"
#include "splatlab/core/gaussian.hpp"
#include "splatlab/core/sh.hpp"

#include <cmath>
#include <cstdint>
#include <optional>

namespace splatlab {

/// Added to both diagonal entries of every screen covariance (px^2).
inline constexpr double kLowPassFloor = 0.3;
/// Means whose NDC position exceeds this magnitude are rejected.
inline constexpr double kGuardBand = 1.3;
/// Screen radius in standard deviations of the dominant axis.
inline constexpr double kRadiusSigmas = 3.0;

/// A Gaussian after projection into one view. `mean2d` is in pixel-index
/// coordinates: pixel (i, j) is centred at (i, j). `conic` holds the upper
/// triangle (a, b, c) of the inverse screen covariance [[a, b], [b, c]].
template <typename T> struct ProjectedSplat {
    Vec2<T> mean2d = Vec2<T>::Zero();
    Vec3<T> conic = Vec3<T>::Zero();
    T depth = T(0);
    int radius = 0;
    Vec3<T> color = Vec3<T>::Zero();
    T alpha = T(0);
    std::uint32_t source = 0;
};

/// Forward intermediates the backward pass re-uses.
template <typename T> struct ProjectionCache {
    Vec3<T> view_mean;        // mean in view space
    Mat3<T> view_cov;         // W Sigma W^T
    Mat23<T> jacobian;        // J at view_mean
    Mat2<T> screen_cov;       // J W Sigma W^T J^T + floor
    Vec3<T> view_dir;         // unit direction camera centre -> mean
    T view_dist = T(0);       // |mean - camera centre|
    Vec3<T> raw_color;        // SH output before offset and clamp
    int sh_degree = 0;
};

template <typename T> struct Projection {
    ProjectedSplat<T> splat;
    ProjectionCache<T> cache;
};

/// Affine approximation of the pinhole projection around view-space `p`.
template <typename T> Mat23<T> projection_jacobian(const Vec3<T> &p, T fx, T fy) {
    const T inv_z = T(1) / p.z();
    const T inv_z2 = inv_z * inv_z;
    Mat23<T> J;
    J << fx * inv_z, T(0), -fx * p.x() * inv_z2, T(0), fy * inv_z, -fy * p.y() * inv_z2;
    return J;
}

/// Exponent of the 2D Gaussian at offset d = pixel - mean2d.
template <typename T> T gaussian_power(const Vec3<T> &conic, T dx, T dy) {
    return T(-0.5) * (conic[0] * dx * dx + conic[2] * dy * dy) - conic[1] * dx * dy;
}

/// Value of the projected Gaussian at `pixel`, or 0 when the quadratic form
/// is negative (non positive-definite conic).
template <typename T> T eval_gaussian_2d(const Vec3<T> &conic, const Vec2<T> &mean2d, const Vec2<T> &pixel) {
    const T power = gaussian_power(conic, pixel.x() - mean2d.x(), pixel.y() - mean2d.y());
    if (power > T(0)) return T(0);
    return std::exp(power);
}

/// Projects one Gaussian, or returns nullopt when it is culled: behind the
/// near plane, outside the guard band, degenerate after flooring, or with a
/// footprint that misses the image entirely.
template <typename T>
std::optional<Projection<T>> project_gaussian(const Gaussian<T> &g, const Camera &cam, int sh_degree) {
    Projection<T> out;
    ProjectionCache<T> &c = out.cache;
    ProjectedSplat<T> &s = out.splat;

    const Mat3<T> W = cam.rotation.cast<T>();
    c.view_mean = cam.to_view(g.mean);
    const T z = c.view_mean.z();
    if (!(z >= T(cam.near))) return std::nullopt;

    const T fx = T(cam.fx), fy = T(cam.fy);
    const T u = fx * c.view_mean.x() / z + T(cam.cx);
    const T v = fy * c.view_mean.y() / z + T(cam.cy);
    const T ndc_x = T(2) * u / T(cam.width) - T(1);
    const T ndc_y = T(2) * v / T(cam.height) - T(1);
    if (std::abs(ndc_x) > T(kGuardBand) || std::abs(ndc_y) > T(kGuardBand)) return std::nullopt;

    const Mat3<T> sigma = covariance(g);
    c.view_cov = W * sigma * W.transpose();
    c.jacobian = projection_jacobian(c.view_mean, fx, fy);
    c.screen_cov = c.jacobian * c.view_cov * c.jacobian.transpose();
    c.screen_cov(0, 0) += T(kLowPassFloor);
    c.screen_cov(1, 1) += T(kLowPassFloor);
    // Symmetrise; the two off-diagonal products can differ in the last ulp.
    const T a = c.screen_cov(0, 0), b = T(0.5) * (c.screen_cov(0, 1) + c.screen_cov(1, 0)),
            d = c.screen_cov(1, 1);
    c.screen_cov(0, 1) = c.screen_cov(1, 0) = b;
    const T det = a * d - b * b;
    if (!(det > T(0))) return std::nullopt;
    const T inv_det = T(1) / det;
    s.conic = Vec3<T>(d * inv_det, -b * inv_det, a * inv_det);

    const T mid = T(0.5) * (a + d);
    const T lambda_max = mid + std::sqrt(std::max(T(0), mid * mid - det));
    s.radius = static_cast<int>(std::ceil(T(kRadiusSigmas) * std::sqrt(lambda_max)));
    s.mean2d = Vec2<T>(u - T(0.5), v - T(0.5));
    if (s.mean2d.x() + s.radius < T(0) || s.mean2d.x() - s.radius > T(cam.width - 1) ||
        s.mean2d.y() + s.radius < T(0) || s.mean2d.y() - s.radius > T(cam.height - 1))
        return std::nullopt;
    s.depth = z;

    const Vec3<T> offset = g.mean - cam.center().cast<T>();
    c.view_dist = offset.norm();
    c.view_dir = offset / c.view_dist;
    c.sh_degree = std::clamp(sh_degree, 0, kMaxShDegree);
    c.raw_color = sh_raw(g.sh, c.sh_degree, c.view_dir);
    s.color = (c.raw_color.array() + T(kShColorOffset)).max(T(0)).matrix();
    s.alpha = g.opacity();
    return out;
}

template <typename T>
std::optional<ProjectedSplat<T>> project(const Gaussian<T> &g, const Camera &cam, int sh_degree = kMaxShDegree) {
    auto p = project_gaussian(g, cam, sh_degree);
    if (!p) return std::nullopt;
    return p->splat;
}

} // namespace splatlab
