// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "splatlab/core/gaussian.hpp"

#include <algorithm>
#include <array>

namespace splatlab {

// Real spherical harmonics, degrees 0..3.
namespace sh_constants {
inline constexpr double C0 = 0.28209479177387814;
inline constexpr double C1 = 0.4886025119029199;
inline constexpr double C2[] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                                -1.0925484305920792, 0.5462742152960396};
inline constexpr double C3[] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
                                0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                                -0.5900435899266435};
} // namespace sh_constants

/// Offset added to the SH dot product so a zero model renders mid-grey.
inline constexpr double kShColorOffset = 0.5;

/// Basis values Y_k(dir); entries above `degree` are zero.
template <typename T> std::array<T, kShCoeffs> sh_basis(int degree, const Vec3<T> &dir) {
    using namespace sh_constants;
    std::array<T, kShCoeffs> b{};
    const T x = dir.x(), y = dir.y(), z = dir.z();
    b[0] = T(C0);
    if (degree < 1) return b;
    b[1] = -T(C1) * y;
    b[2] = T(C1) * z;
    b[3] = -T(C1) * x;
    if (degree < 2) return b;
    const T xx = x * x, yy = y * y, zz = z * z;
    b[4] = T(C2[0]) * x * y;
    b[5] = T(C2[1]) * y * z;
    b[6] = T(C2[2]) * (T(2) * zz - xx - yy);
    b[7] = T(C2[3]) * x * z;
    b[8] = T(C2[4]) * (xx - yy);
    if (degree < 3) return b;
    b[9] = T(C3[0]) * y * (T(3) * xx - yy);
    b[10] = T(C3[1]) * x * y * z;
    b[11] = T(C3[2]) * y * (T(4) * zz - xx - yy);
    b[12] = T(C3[3]) * z * (T(2) * zz - T(3) * xx - T(3) * yy);
    b[13] = T(C3[4]) * x * (T(4) * zz - xx - yy);
    b[14] = T(C3[5]) * z * (xx - yy);
    b[15] = T(C3[6]) * x * (xx - T(3) * yy);
    return b;
}

/// d Y_k / d dir, treating the components of `dir` as independent.
template <typename T> std::array<Vec3<T>, kShCoeffs> sh_basis_gradient(int degree, const Vec3<T> &dir) {
    using namespace sh_constants;
    std::array<Vec3<T>, kShCoeffs> g;
    g.fill(Vec3<T>::Zero());
    if (degree < 1) return g;
    const T x = dir.x(), y = dir.y(), z = dir.z();
    g[1] = Vec3<T>(T(0), -T(C1), T(0));
    g[2] = Vec3<T>(T(0), T(0), T(C1));
    g[3] = Vec3<T>(-T(C1), T(0), T(0));
    if (degree < 2) return g;
    const T xx = x * x, yy = y * y, zz = z * z;
    g[4] = T(C2[0]) * Vec3<T>(y, x, T(0));
    g[5] = T(C2[1]) * Vec3<T>(T(0), z, y);
    g[6] = T(C2[2]) * Vec3<T>(T(-2) * x, T(-2) * y, T(4) * z);
    g[7] = T(C2[3]) * Vec3<T>(z, T(0), x);
    g[8] = T(C2[4]) * Vec3<T>(T(2) * x, T(-2) * y, T(0));
    if (degree < 3) return g;
    g[9] = T(C3[0]) * Vec3<T>(T(6) * x * y, T(3) * xx - T(3) * yy, T(0));
    g[10] = T(C3[1]) * Vec3<T>(y * z, x * z, x * y);
    g[11] = T(C3[2]) * Vec3<T>(T(-2) * x * y, T(4) * zz - xx - T(3) * yy, T(8) * y * z);
    g[12] = T(C3[3]) * Vec3<T>(T(-6) * x * z, T(-6) * y * z, T(6) * zz - T(3) * xx - T(3) * yy);
    g[13] = T(C3[4]) * Vec3<T>(T(4) * zz - T(3) * xx - yy, T(-2) * x * y, T(8) * x * z);
    g[14] = T(C3[5]) * Vec3<T>(T(2) * x * z, T(-2) * y * z, xx - yy);
    g[15] = T(C3[6]) * Vec3<T>(T(3) * xx - T(3) * yy, T(-6) * x * y, T(0));
    return g;
}

/// SH dot product before the offset and clamp.
template <typename T>
Vec3<T> sh_raw(const std::array<Vec3<T>, kShCoeffs> &sh, int active_degree, const Vec3<T> &dir) {
    const auto basis = sh_basis(active_degree, dir);
    Vec3<T> c = Vec3<T>::Zero();
    const int n = sh_coeff_count(active_degree);
    for (int k = 0; k < n; ++k) c += basis[k] * sh[k];
    return c;
}

/// RGB colour of a Gaussian seen along `dir` (unit vector, camera to mean).
template <typename T>
Vec3<T> evaluate_sh(const std::array<Vec3<T>, kShCoeffs> &sh, int active_degree, const Vec3<T> &dir) {
    active_degree = std::clamp(active_degree, 0, kMaxShDegree);
    const Vec3<T> raw = sh_raw(sh, active_degree, dir);
    return (raw.array() + T(kShColorOffset)).max(T(0)).matrix();
}

/// Degree-0 coefficient that reproduces `rgb` exactly.
template <typename T> Vec3<T> rgb_to_sh_dc(const Vec3<T> &rgb) {
    return (rgb.array() - T(kShColorOffset)).matrix() / T(sh_constants::C0);
}

} // namespace splatlab
