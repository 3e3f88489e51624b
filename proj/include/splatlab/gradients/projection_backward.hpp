// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "splatlab/core/camera.hpp"
#include "splatlab/core/projection.hpp"
#include "splatlab/core/sh.hpp"
#include "splatlab/gradients/covariance_backward.hpp"
#include "splatlab/gradients/grads.hpp"

namespace splatlab {

/// Chains one splat's gradient back to the Gaussian that produced it.
/// The projection Jacobian's dependence on the view-space mean is
/// differentiated, as is the SH viewing direction.
template <typename T>
GaussianGrads<T> backward_project(const Gaussian<T> &g, const Camera &cam, const Projection<T> &fwd,
                                  const SplatGrad<T> &dg) {
    const ProjectionCache<T> &c = fwd.cache;
    const ProjectedSplat<T> &s = fwd.splat;
    GaussianGrads<T> out;

    // Opacity: alpha = sigmoid(logit).
    out.opacity_logit = dg.alpha * s.alpha * (T(1) - s.alpha);

    // Colour: clamp(raw + 0.5, 0) with raw = sum_k Y_k(dir) sh_k.
    Vec3<T> d_raw = dg.color;
    for (int ch = 0; ch < 3; ++ch)
        if (c.raw_color[ch] + T(kShColorOffset) < T(0)) d_raw[ch] = T(0);
    const int ncoeff = sh_coeff_count(c.sh_degree);
    const auto basis = sh_basis(c.sh_degree, c.view_dir);
    for (int k = 0; k < ncoeff; ++k) out.sh[k] = basis[k] * d_raw;
    Vec3<T> d_mean = Vec3<T>::Zero();
    if (c.sh_degree > 0) {
        const auto dbasis = sh_basis_gradient(c.sh_degree, c.view_dir);
        Vec3<T> d_dir = Vec3<T>::Zero();
        for (int k = 1; k < ncoeff; ++k) d_dir += dbasis[k] * g.sh[k].dot(d_raw);
        const Vec3<T> &u = c.view_dir;
        d_mean += (d_dir - u * u.dot(d_dir)) / c.view_dist;
    }

    // Conic -> screen covariance -> (J, view covariance).
    const Mat2<T> d_screen = backward_conic_to_screen_cov(dg.conic, s.conic);
    const Mat3<T> W = cam.rotation.cast<T>();
    const Mat23<T> &J = c.jacobian;
    const Mat23<T> U = J * W;
    const Mat3<T> d_sigma = backward_conic_to_cov3d(d_screen, U);
    const Mat23<T> dJ = T(2) * d_screen * J * c.view_cov;

    const auto sr = backward_cov3d_to_scale_rotation(d_sigma, g.rotation, g.log_scale);
    out.log_scale = sr.log_scale;
    out.rotation = sr.rotation;

    // View-space mean through mean2d and through J.
    const T fx = T(cam.fx), fy = T(cam.fy);
    const T x = c.view_mean.x(), y = c.view_mean.y(), z = c.view_mean.z();
    const T iz = T(1) / z, iz2 = iz * iz, iz3 = iz2 * iz;
    Vec3<T> dp;
    dp.x() = dg.mean2d.x() * fx * iz - dJ(0, 2) * fx * iz2;
    dp.y() = dg.mean2d.y() * fy * iz - dJ(1, 2) * fy * iz2;
    dp.z() = -dg.mean2d.x() * fx * x * iz2 - dg.mean2d.y() * fy * y * iz2 - dJ(0, 0) * fx * iz2 +
             dJ(0, 2) * T(2) * fx * x * iz3 - dJ(1, 1) * fy * iz2 + dJ(1, 2) * T(2) * fy * y * iz3;
    d_mean += W.transpose() * dp;
    out.mean = d_mean;
    return out;
}

} // namespace splatlab
