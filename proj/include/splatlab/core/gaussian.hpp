// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "splatlab/core/types.hpp"

#include <array>
#include <cmath>

namespace splatlab {

inline constexpr int kMaxShDegree = 3;
inline constexpr int kShCoeffs = (kMaxShDegree + 1) * (kMaxShDegree + 1);

/// Number of SH coefficients used by bands 0..degree.
constexpr int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

/// One anisotropic Gaussian primitive, stored in its unconstrained
/// optimisation parameters. Rotation is (r, i, j, k) and need not be unit.
template <typename T> struct Gaussian {
    Vec3<T> mean = Vec3<T>::Zero();
    Vec4<T> rotation = Vec4<T>(T(1), T(0), T(0), T(0));
    Vec3<T> log_scale = Vec3<T>::Zero();
    T opacity_logit = T(0);
    std::array<Vec3<T>, kShCoeffs> sh{};

    Gaussian() { sh.fill(Vec3<T>::Zero()); }

    Vec3<T> scale() const { return log_scale.array().exp().matrix(); }
    T opacity() const { return sigmoid(opacity_logit); }

    template <typename U> Gaussian<U> cast() const {
        Gaussian<U> g;
        g.mean = mean.template cast<U>();
        g.rotation = rotation.template cast<U>();
        g.log_scale = log_scale.template cast<U>();
        g.opacity_logit = static_cast<U>(opacity_logit);
        for (int k = 0; k < kShCoeffs; ++k) g.sh[k] = sh[k].template cast<U>();
        return g;
    }

    bool operator==(const Gaussian &o) const {
        return mean == o.mean && rotation == o.rotation && log_scale == o.log_scale &&
               opacity_logit == o.opacity_logit && sh == o.sh;
    }
};

/// Unit quaternion of `q`; throws InvalidPrimitive for a zero quaternion.
template <typename T> Vec4<T> normalized_rotation(const Vec4<T> &q) {
    const T n = q.norm();
    if (!(n > T(0)) || !std::isfinite(static_cast<double>(n)))
        throw InvalidPrimitive("rotation quaternion has zero or non-finite norm");
    return q / n;
}

/// Rotation matrix of a unit quaternion (r, i, j, k).
template <typename T> Mat3<T> quaternion_to_rotation(const Vec4<T> &q) {
    const T r = q[0], x = q[1], y = q[2], z = q[3];
    Mat3<T> R;
    R << T(1) - T(2) * (y * y + z * z), T(2) * (x * y - r * z), T(2) * (x * z + r * y),
        T(2) * (x * y + r * z), T(1) - T(2) * (x * x + z * z), T(2) * (y * z - r * x),
        T(2) * (x * z - r * y), T(2) * (y * z + r * x), T(1) - T(2) * (x * x + y * y);
    return R;
}

/// Sigma = R S S^T R^T with S = diag(exp(log_scale)).
template <typename T> Mat3<T> assemble_covariance(const Vec4<T> &rotation, const Vec3<T> &log_scale) {
    const Mat3<T> R = quaternion_to_rotation(normalized_rotation(rotation));
    const Mat3<T> M = R * log_scale.array().exp().matrix().asDiagonal();
    return M * M.transpose();
}

template <typename T> Mat3<T> covariance(const Gaussian<T> &g) {
    return assemble_covariance(g.rotation, g.log_scale);
}

} // namespace splatlab
