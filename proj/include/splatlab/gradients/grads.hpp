// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "splatlab/core/gaussian.hpp"

#include <array>
#include <cmath>

namespace splatlab {

/// Loss gradient with respect to one projected splat.
template <typename T> struct SplatGrad {
    Vec3<T> color = Vec3<T>::Zero();
    T alpha = T(0);
    Vec2<T> mean2d = Vec2<T>::Zero(); // pixel units
    Vec3<T> conic = Vec3<T>::Zero();  // d/d(a, b, c) of the conic upper triangle

    SplatGrad &operator+=(const SplatGrad &o) {
        color += o.color;
        alpha += o.alpha;
        mean2d += o.mean2d;
        conic += o.conic;
        return *this;
    }
};

/// Loss gradient with respect to the unconstrained parameters of one Gaussian.
template <typename T> struct GaussianGrads {
    Vec3<T> mean = Vec3<T>::Zero();
    Vec4<T> rotation = Vec4<T>::Zero();
    Vec3<T> log_scale = Vec3<T>::Zero();
    T opacity_logit = T(0);
    std::array<Vec3<T>, kShCoeffs> sh{};
    /// |d loss / d mean2d| in normalised device units, summed over the views
    /// this gradient covers (one per render).
    T view_pos_grad_norm = T(0);

    GaussianGrads() { sh.fill(Vec3<T>::Zero()); }

    GaussianGrads &operator+=(const GaussianGrads &o) {
        mean += o.mean;
        rotation += o.rotation;
        log_scale += o.log_scale;
        opacity_logit += o.opacity_logit;
        for (int k = 0; k < kShCoeffs; ++k) sh[k] += o.sh[k];
        view_pos_grad_norm += o.view_pos_grad_norm;
        return *this;
    }

    bool is_zero() const {
        if (!mean.isZero(0) || !rotation.isZero(0) || !log_scale.isZero(0) || opacity_logit != T(0)) return false;
        for (const auto &c : sh)
            if (!c.isZero(0)) return false;
        return view_pos_grad_norm == T(0);
    }

    bool all_finite() const {
        bool ok = mean.allFinite() && rotation.allFinite() && log_scale.allFinite() &&
                  std::isfinite(static_cast<double>(opacity_logit)) &&
                  std::isfinite(static_cast<double>(view_pos_grad_norm));
        for (const auto &c : sh) ok = ok && c.allFinite();
        return ok;
    }
};

} // namespace splatlab
