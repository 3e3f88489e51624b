// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
// Structural similarity with an 11x11 Gaussian window (sigma 1.5), computed
// per channel with zero padding and averaged over every pixel and channel.
//
#pragma once

#include "splatlab/core/image.hpp"

#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace splatlab {

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

template <typename T> std::array<T, kSsimWindow> ssim_kernel() {
    std::array<double, kSsimWindow> k{};
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - kSsimWindow / 2;
        k[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
        sum += k[i];
    }
    std::array<T, kSsimWindow> out{};
    for (int i = 0; i < kSsimWindow; ++i) out[i] = static_cast<T>(k[i] / sum);
    return out;
}

namespace detail {

/// Separable Gaussian filter of one channel plane, zero outside the image.
template <typename T> std::vector<T> filter_plane(const std::vector<T> &src, int w, int h) {
    const auto k = ssim_kernel<T>();
    constexpr int r = kSsimWindow / 2;
    std::vector<T> tmp(src.size(), T(0)), dst(src.size(), T(0));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            T acc = T(0);
            for (int i = -r; i <= r; ++i) {
                const int sx = x + i;
                if (sx >= 0 && sx < w) acc += k[i + r] * src[std::size_t(y) * w + sx];
            }
            tmp[std::size_t(y) * w + x] = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            T acc = T(0);
            for (int i = -r; i <= r; ++i) {
                const int sy = y + i;
                if (sy >= 0 && sy < h) acc += k[i + r] * tmp[std::size_t(sy) * w + x];
            }
            dst[std::size_t(y) * w + x] = acc;
        }
    return dst;
}

template <typename T> std::vector<T> channel_plane(const Image<T> &img, int c) {
    std::vector<T> p(img.pixel_count());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = img.data[3 * i + c];
    return p;
}

template <typename T> void require_same_shape(const Image<T> &a, const Image<T> &b) {
    if (a.width != b.width || a.height != b.height || a.data.size() != b.data.size())
        throw InvalidArgument("image resolution mismatch: " + std::to_string(a.width) + "x" +
                              std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                              std::to_string(b.height));
}

} // namespace detail

template <typename T> struct SsimResult {
    T value = T(0);
    Image<T> grad; // d value / d first image; empty unless requested
};

template <typename T> SsimResult<T> ssim_with_grad(const Image<T> &x_img, const Image<T> &y_img, bool want_grad) {
    detail::require_same_shape(x_img, y_img);
    const int w = x_img.width, h = x_img.height;
    const std::size_t n = x_img.pixel_count();
    SsimResult<T> out;
    if (n == 0) {
        out.value = T(1);
        if (want_grad) out.grad = Image<T>(w, h);
        return out;
    }
    if (want_grad) out.grad = Image<T>(w, h);
    const T c1 = T(kSsimC1), c2 = T(kSsimC2);
    const T inv_count = T(1) / T(3 * n);
    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        const auto x = detail::channel_plane(x_img, c), y = detail::channel_plane(y_img, c);
        std::vector<T> xx(n), yy(n), xy(n);
        for (std::size_t i = 0; i < n; ++i) {
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        const auto mx = detail::filter_plane(x, w, h), my = detail::filter_plane(y, w, h);
        const auto exx = detail::filter_plane(xx, w, h), eyy = detail::filter_plane(yy, w, h);
        const auto exy = detail::filter_plane(xy, w, h);
        std::vector<T> d_mx, d_exx2, d_exy;
        if (want_grad) {
            d_mx.resize(n);
            d_exx2.resize(n);
            d_exy.resize(n);
        }
        for (std::size_t i = 0; i < n; ++i) {
            // Identical inputs give a1 == b1, a2 == b2 and a zero gradient.
            const T a1 = T(2) * (mx[i] * my[i]) + c1;
            const T a2 = T(2) * (exy[i] - mx[i] * my[i]) + c2;
            const T b1 = mx[i] * mx[i] + my[i] * my[i] + c1;
            const T b2 = (exx[i] - mx[i] * mx[i]) + (eyy[i] - my[i] * my[i]) + c2;
            const T r1 = a1 / b1, r2 = a2 / b2;
            const T s = r1 * r2;
            total += static_cast<double>(s);
            if (want_grad) {
                const T k = inv_count / b2;
                d_mx[i] = inv_count * T(2) * (my[i] * (a2 - a1) - s * mx[i] * (b2 - b1)) / (b1 * b2);
                d_exx2[i] = -T(2) * s * k;
                d_exy[i] = T(2) * r1 * k;
            }
        }
        if (want_grad) {
            // The zero-padded symmetric filter is self-adjoint.
            const auto f_mx = detail::filter_plane(d_mx, w, h);
            const auto f_exx2 = detail::filter_plane(d_exx2, w, h);
            const auto f_exy = detail::filter_plane(d_exy, w, h);
            for (std::size_t i = 0; i < n; ++i)
                out.grad.data[3 * i + c] = f_mx[i] + x[i] * f_exx2[i] + y[i] * f_exy[i];
        }
    }
    out.value = static_cast<T>(total / double(3 * n));
    return out;
}

template <typename T> T ssim(const Image<T> &a, const Image<T> &b) { return ssim_with_grad(a, b, false).value; }

} // namespace splatlab
