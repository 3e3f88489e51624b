// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "splatlab/optim/ssim.hpp"

#include <cmath>
#include <limits>

namespace splatlab {

template <typename T> struct LossResult {
    T value = T(0);
    T l1 = T(0);
    T dssim = T(0);
    Image<T> grad; // d value / d render
};

/// (1 - lambda) * mean|render - truth| + lambda * (1 - SSIM) / 2.
template <typename T> LossResult<T> training_loss(const Image<T> &render, const Image<T> &truth, T lambda) {
    detail::require_same_shape(render, truth);
    LossResult<T> out;
    out.grad = Image<T>(render.width, render.height);
    const std::size_t n = render.data.size();
    if (n == 0) return out;
    const T inv = T(1) / T(n);
    double l1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const T d = render.data[i] - truth.data[i];
        l1 += std::abs(static_cast<double>(d));
        const T sign = d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0));
        out.grad.data[i] = (T(1) - lambda) * sign * inv;
    }
    out.l1 = static_cast<T>(l1 / double(n));
    if (lambda != T(0)) {
        const auto s = ssim_with_grad(render, truth, true);
        out.dssim = (T(1) - s.value) / T(2);
        for (std::size_t i = 0; i < n; ++i) out.grad.data[i] -= lambda * T(0.5) * s.grad.data[i];
    } else {
        out.dssim = (T(1) - ssim(render, truth)) / T(2);
    }
    out.value = (T(1) - lambda) * out.l1 + lambda * out.dssim;
    return out;
}

template <typename T> double mean_squared_error(const Image<T> &a, const Image<T> &b) {
    detail::require_same_shape(a, b);
    if (a.data.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = double(a.data[i]) - double(b.data[i]);
        acc += d * d;
    }
    return acc / double(a.data.size());
}

/// Peak signal-to-noise ratio for [0,1] images; +infinity when identical.
template <typename T> double psnr(const Image<T> &a, const Image<T> &b) {
    const double mse = mean_squared_error(a, b);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

struct ImageMetrics {
    double psnr = 0.0;
    double ssim = 0.0;
};

template <typename T> ImageMetrics compute_metrics(const Image<T> &render, const Image<T> &truth) {
    ImageMetrics m;
    m.psnr = psnr(render, truth);
    m.ssim = double(ssim(render.template cast<double>(), truth.template cast<double>()));
    return m;
}

} // namespace splatlab
