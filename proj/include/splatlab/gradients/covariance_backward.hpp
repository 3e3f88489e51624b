// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
// Gradients of the covariance chain
//
//   (q, log_scale) -> M = R(q/|q|) diag(exp(log_scale)) -> Sigma = M M^T
//                  -> Sigma' = U Sigma U^T (+ floor) -> conic = Sigma'^-1
//
// Matrix gradients use the "full matrix" convention: dL/dX(i, j) treats every
// entry as independent, so gradients of symmetric matrices are symmetric.
//
#pragma once

#include "splatlab/core/gaussian.hpp"

#include <utility>

namespace splatlab {

/// Gradient w.r.t. the screen covariance from the gradient w.r.t. the conic
/// upper triangle (a, b, c); `b` appears once in the quadratic form as 2 b.
template <typename T> Mat2<T> backward_conic_to_screen_cov(const Vec3<T> &d_conic, const Vec3<T> &conic) {
    Mat2<T> Q;
    Q << conic[0], conic[1], conic[1], conic[2];
    Mat2<T> G;
    G << d_conic[0], T(0.5) * d_conic[1], T(0.5) * d_conic[1], d_conic[2];
    return -Q * G * Q;
}

/// dL/dSigma from dL/dSigma' where Sigma' = U Sigma U^T, U = J W (2x3).
/// Element-wise this contracts dSigma'/dSigma_ij = [[U1i U1j, U1i U2j], [U1j U2i, U2i U2j]].
template <typename T> Mat3<T> backward_conic_to_cov3d(const Mat2<T> &d_screen_cov, const Mat23<T> &U) {
    Mat3<T> d;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            d(i, j) = d_screen_cov(0, 0) * U(0, i) * U(0, j) + d_screen_cov(0, 1) * U(0, i) * U(1, j) +
                      d_screen_cov(1, 0) * U(1, i) * U(0, j) + d_screen_cov(1, 1) * U(1, i) * U(1, j);
    return d;
}

template <typename T> struct ScaleRotationGrad {
    Vec3<T> log_scale = Vec3<T>::Zero();
    Vec4<T> rotation = Vec4<T>::Zero();
    Vec3<T> scale = Vec3<T>::Zero(); // before the exp activation
};

/// Pulls a symmetric dL/dSigma back to the log-scale and raw quaternion.
template <typename T>
ScaleRotationGrad<T> backward_cov3d_to_scale_rotation(const Mat3<T> &d_sigma, const Vec4<T> &rotation,
                                                      const Vec3<T> &log_scale) {
    const T qnorm = rotation.norm();
    if (!(qnorm > T(0))) throw InvalidPrimitive("rotation quaternion has zero norm");
    const Vec4<T> q = rotation / qnorm;
    const Vec3<T> s = log_scale.array().exp().matrix();
    const Mat3<T> R = quaternion_to_rotation(q);
    const Mat3<T> M = R * s.asDiagonal();

    // Sigma = M M^T with symmetric dSigma gives dM = 2 dSigma M.
    const Mat3<T> dM = T(2) * d_sigma * M;

    ScaleRotationGrad<T> out;
    for (int k = 0; k < 3; ++k) out.scale[k] = R.col(k).dot(dM.col(k));
    out.log_scale = out.scale.cwiseProduct(s);

    const T qr = q[0], qi = q[1], qj = q[2], qk = q[3];
    const T sx = s[0], sy = s[1], sz = s[2];
    Mat3<T> dMdqr, dMdqi, dMdqj, dMdqk;
    dMdqr << T(0), -sy * qk, sz * qj, sx * qk, T(0), -sz * qi, -sx * qj, sy * qi, T(0);
    dMdqi << T(0), sy * qj, sz * qk, sx * qj, T(-2) * sy * qi, -sz * qr, sx * qk, sy * qr, T(-2) * sz * qi;
    dMdqj << T(-2) * sx * qj, sy * qi, sz * qr, sx * qi, T(0), sz * qk, -sx * qr, sy * qk, T(-2) * sz * qj;
    dMdqk << T(-2) * sx * qk, -sy * qr, sz * qi, sx * qr, T(-2) * sy * qk, sz * qj, sx * qi, sy * qj, T(0);
    const Vec4<T> dq_unit(T(2) * dM.cwiseProduct(dMdqr).sum(), T(2) * dM.cwiseProduct(dMdqi).sum(),
                          T(2) * dM.cwiseProduct(dMdqj).sum(), T(2) * dM.cwiseProduct(dMdqk).sum());

    // q_unit = q / |q|: project out the radial component.
    out.rotation = (dq_unit - q * q.dot(dq_unit)) / qnorm;
    return out;
}

} // namespace splatlab
