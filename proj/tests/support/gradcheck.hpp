// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end finite-difference check of backward_frame.
//
// The rendered image is piecewise smooth: the 1/255 skip, the 0.99 clamp, the
// saturation stop, culling and integer radii all introduce jumps. A central
// difference is only a valid oracle when both probes stay on the branch of
// the unperturbed point, so each probe's branch signature (per-pixel blend
// events from the reference renderer plus the visible set and radii) is
// compared with the base signature. If a probe crosses a branch the step is
// shrunk; if it still crosses at the smallest step the parameter sits on a
// discontinuity and is reported as non-smooth instead of compared.
//
#pragma once

#include "splatlab/raster/renderer.hpp"
#include "support/oracles.hpp"

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

namespace splatlab::testing {

inline constexpr int kParamsPerGaussian = 3 + 4 + 3 + 1 + 3 * kShCoeffs;

inline double &param_ref(Gaussian<double> &g, int p) {
    if (p < 3) return g.mean[p];
    if (p < 7) return g.rotation[p - 3];
    if (p < 10) return g.log_scale[p - 7];
    if (p == 10) return g.opacity_logit;
    const int k = (p - 11) / 3, c = (p - 11) % 3;
    return g.sh[k][c];
}

inline double grad_value(const GaussianGrads<double> &g, int p) {
    if (p < 3) return g.mean[p];
    if (p < 7) return g.rotation[p - 3];
    if (p < 10) return g.log_scale[p - 7];
    if (p == 10) return g.opacity_logit;
    const int k = (p - 11) / 3, c = (p - 11) % 3;
    return g.sh[k][c];
}

inline const char *param_name(int p) {
    static const char *names[] = {"mean.x", "mean.y", "mean.z", "rot.r", "rot.i", "rot.j", "rot.k",
                                  "log_scale.x", "log_scale.y", "log_scale.z", "opacity_logit"};
    return p < 11 ? names[p] : "sh";
}

struct GradCheckReport {
    long checked = 0;
    long failed = 0;
    long nonsmooth = 0;
    double max_rel_error = 0.0; // over compared entries above the absolute floor
    double max_abs_error = 0.0;
    std::string first_failure;

    GradCheckReport &operator+=(const GradCheckReport &o) {
        checked += o.checked;
        failed += o.failed;
        nonsmooth += o.nonsmooth;
        max_rel_error = std::max(max_rel_error, o.max_rel_error);
        max_abs_error = std::max(max_abs_error, o.max_abs_error);
        if (first_failure.empty()) first_failure = o.first_failure;
        return *this;
    }
};

struct GradCheckOptions {
    double step = 1e-5;
    double rel_tol = 1e-4;
    double abs_tol = 1e-7;
    int shrink_attempts = 1; // step, step/10
};

class SceneGradChecker {
public:
    SceneGradChecker(std::vector<Gaussian<double>> gaussians, Camera cam, RenderSettings settings,
                     Image<double> weights)
        : gaussians_(std::move(gaussians)), cam_(std::move(cam)), settings_(settings), weights_(std::move(weights)) {
        settings_.training = true;
        settings_.deterministic = true;
    }

    /// Linear loss sum(weights * image).
    double loss(const std::vector<Gaussian<double>> &gs) const {
        const auto f = render_frame(gs, cam_, settings_);
        double l = 0.0;
        for (std::size_t i = 0; i < f.image().data.size(); ++i) l += weights_.data[i] * f.image().data[i];
        return l;
    }

    std::uint64_t signature(const std::vector<Gaussian<double>> &gs) const {
        RenderSettings s = settings_;
        s.training = false;
        const auto f = render_frame(gs, cam_, s);
        const auto ref = oracle_render(f.splats, cam_.width, cam_.height, f.background);
        std::uint64_t h = 1469598103934665603ull;
        auto mix = [&](std::uint64_t v) { h = (h ^ v) * 1099511628211ull; };
        for (const auto &sp : f.splats) {
            mix(sp.source);
            mix(static_cast<std::uint64_t>(sp.radius));
        }
        for (const auto &px : ref.events) {
            mix(0xFFFFFFFFull);
            for (const auto &[id, ev] : px) mix((std::uint64_t(id) << 8) | std::uint64_t(ev));
        }
        return h;
    }

    std::vector<GaussianGrads<double>> analytic() const {
        const auto f = render_frame(gaussians_, cam_, settings_);
        return backward_frame(f, gaussians_, weights_);
    }

    GradCheckReport run(const GradCheckOptions &opt = {}) const {
        GradCheckReport rep;
        const auto grads = analytic();
        const std::uint64_t base_sig = signature(gaussians_);
        std::vector<Gaussian<double>> probe = gaussians_;
        for (std::size_t gi = 0; gi < gaussians_.size(); ++gi) {
            for (int p = 0; p < kParamsPerGaussian; ++p) {
                const double a = grad_value(grads[gi], p);
                double h = opt.step;
                bool smooth = false;
                double numeric = 0.0;
                for (int attempt = 0; attempt <= opt.shrink_attempts; ++attempt, h *= 0.1) {
                    double &x = param_ref(probe[gi], p);
                    const double x0 = x;
                    x = x0 + h;
                    const std::uint64_t sig_hi = signature(probe);
                    const double l_hi = loss(probe);
                    x = x0 - h;
                    const std::uint64_t sig_lo = signature(probe);
                    const double l_lo = loss(probe);
                    x = x0;
                    if (sig_hi == base_sig && sig_lo == base_sig) {
                        smooth = true;
                        numeric = (l_hi - l_lo) / (2.0 * h);
                        break;
                    }
                }
                if (!smooth) {
                    ++rep.nonsmooth;
                    continue;
                }
                ++rep.checked;
                const double diff = std::abs(a - numeric);
                rep.max_abs_error = std::max(rep.max_abs_error, diff);
                if (diff > opt.abs_tol)
                    rep.max_rel_error =
                        std::max(rep.max_rel_error, diff / std::max(std::abs(a), std::abs(numeric)));
                if (!grad_close(a, numeric, opt.rel_tol, opt.abs_tol)) {
                    ++rep.failed;
                    if (rep.first_failure.empty()) {
                        std::ostringstream os;
                        os << "gaussian " << gi << " param " << p << " (" << param_name(p) << "): analytic " << a
                           << " numeric " << numeric;
                        rep.first_failure = os.str();
                    }
                }
            }
        }
        return rep;
    }

private:
    std::vector<Gaussian<double>> gaussians_;
    Camera cam_;
    RenderSettings settings_;
    Image<double> weights_;
};

} // namespace splatlab::testing
