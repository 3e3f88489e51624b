// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "splatlab/gradients/grads.hpp"
#include "splatlab/optim/config.hpp"

#include <cmath>
#include <vector>

namespace splatlab {

/// Learning rate per parameter group for one step.
struct StepRates {
    double position = 0.0;
    double sh_dc = 0.0;
    double sh_rest = 0.0;
    double opacity = 0.0;
    double scale = 0.0;
    double rotation = 0.0;
};

/// First and second Adam moments, stored with the same shape as the model so
/// they stay index-aligned with it.
template <typename T> struct AdamMoments {
    std::vector<Gaussian<T>> first;
    std::vector<Gaussian<T>> second;

    static Gaussian<T> zero() {
        Gaussian<T> g;
        g.rotation.setZero();
        return g;
    }

    std::size_t size() const { return first.size(); }
    void resize(std::size_t n) {
        first.resize(n, zero());
        second.resize(n, zero());
    }
    void push_zero() {
        first.push_back(zero());
        second.push_back(zero());
    }
    void reset_opacity() {
        for (auto &m : first) m.opacity_logit = T(0);
        for (auto &v : second) v.opacity_logit = T(0);
    }
};

namespace detail {

template <typename T> struct AdamScalar {
    T c1, c2, b1, b2, eps;

    void apply(T &p, T &m, T &v, T g, T lr) const {
        m = b1 * m + (T(1) - b1) * g;
        v = b2 * v + (T(1) - b2) * g * g;
        const T m_hat = m / c1, v_hat = v / c2;
        p -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
};

} // namespace detail

/// One Adam update of every parameter; `step` counts from 1.
template <typename T>
void adam_step(std::vector<Gaussian<T>> &params, AdamMoments<T> &moments, const std::vector<GaussianGrads<T>> &grads,
               const StepRates &rates, const AdamParams &adam, long step) {
    if (moments.size() != params.size() || grads.size() != params.size())
        throw InvalidArgument("adam_step: parameter, moment and gradient counts differ");
    if (step < 1) throw InvalidArgument("adam_step: step counts from 1");
    const detail::AdamScalar<T> a{T(1 - std::pow(adam.beta1, double(step))),
                                  T(1 - std::pow(adam.beta2, double(step))), T(adam.beta1), T(adam.beta2),
                                  T(adam.eps)};
    const T lr_pos = T(rates.position), lr_dc = T(rates.sh_dc), lr_rest = T(rates.sh_rest);
    const T lr_op = T(rates.opacity), lr_scale = T(rates.scale), lr_rot = T(rates.rotation);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Gaussian<T> &p = params[i];
        Gaussian<T> &m = moments.first[i];
        Gaussian<T> &v = moments.second[i];
        const GaussianGrads<T> &g = grads[i];
        for (int k = 0; k < 3; ++k) {
            a.apply(p.mean[k], m.mean[k], v.mean[k], g.mean[k], lr_pos);
            a.apply(p.log_scale[k], m.log_scale[k], v.log_scale[k], g.log_scale[k], lr_scale);
        }
        for (int k = 0; k < 4; ++k) a.apply(p.rotation[k], m.rotation[k], v.rotation[k], g.rotation[k], lr_rot);
        a.apply(p.opacity_logit, m.opacity_logit, v.opacity_logit, g.opacity_logit, lr_op);
        for (int b = 0; b < kShCoeffs; ++b)
            for (int c = 0; c < 3; ++c)
                a.apply(p.sh[b][c], m.sh[b][c], v.sh[b][c], g.sh[b][c], b == 0 ? lr_dc : lr_rest);
    }
}

} // namespace splatlab
