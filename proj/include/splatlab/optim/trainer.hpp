// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "splatlab/optim/densify.hpp"
#include "splatlab/optim/loss.hpp"
#include "splatlab/optim/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace splatlab {

template <typename T> struct TrainView {
    Camera camera;
    Image<T> image; // linear RGB at the camera's resolution
};

struct StepReport {
    long iteration = 0;
    double loss = 0.0;
    long gaussians = 0;
    int sh_degree = 0;
    int resolution_factor = 1;
    std::size_t view = 0;
    std::optional<DensifyReport> densify;
    bool opacity_reset = false;
};

template <typename T>
Image<T> render_image(const std::vector<Gaussian<T>> &gaussians, const Camera &cam, int sh_degree,
                      const Vec3<double> &background, bool deterministic) {
    RenderSettings s;
    s.sh_degree = sh_degree;
    s.background = background;
    s.deterministic = deterministic;
    return render_frame(gaussians, cam, s).output.image;
}

template <typename T> class Trainer {
public:
    Trainer(std::vector<Gaussian<T>> init, std::vector<TrainView<T>> views, double scene_extent, TrainConfig cfg,
            std::uint64_t seed)
        : cfg_(std::move(cfg)), views_(std::move(views)), extent_(scene_extent), gaussians_(std::move(init)),
          rng_(seed) {
        cfg_.validate();
        if (views_.empty()) throw InvalidArgument("trainer: no training views");
        if (!(extent_ > 0.0) || !std::isfinite(extent_)) throw InvalidArgument("trainer: scene extent must be positive");
        for (const auto &v : views_) {
            v.camera.validate();
            if (v.image.width != v.camera.width || v.image.height != v.camera.height)
                throw InvalidArgument("trainer: image size of view '" + v.camera.name +
                                      "' does not match its camera");
            max_height_ = std::max(max_height_, v.camera.height);
        }
        for (const auto &g : gaussians_) normalized_rotation(g.rotation);
        moments_.resize(gaussians_.size());
        stats_.reset(gaussians_.size());
        order_.resize(views_.size());
        std::iota(order_.begin(), order_.end(), std::size_t(0));
        cursor_ = order_.size();
        if (cfg_.resolution_warmup)
            for (const auto &v : views_) {
                half_.push_back(downsample(v.image, 2));
                quarter_.push_back(downsample(v.image, 4));
            }
    }

    StepReport step() {
        const long i = iteration_ + 1;
        if (i % cfg_.sh_band_interval == 0 && sh_degree_ < cfg_.max_sh_degree) ++sh_degree_;

        StepReport rep;
        rep.iteration = i;
        rep.sh_degree = sh_degree_;
        rep.view = next_view();
        rep.resolution_factor = resolution_factor_at(cfg_, i);
        const TrainView<T> &view = views_[rep.view];
        const Camera cam = view.camera.downscaled(rep.resolution_factor);
        const Image<T> &target = rep.resolution_factor == 4   ? quarter_[rep.view]
                                 : rep.resolution_factor == 2 ? half_[rep.view]
                                                              : view.image;

        RenderSettings settings;
        settings.sh_degree = sh_degree_;
        settings.background = cfg_.background;
        settings.training = true;
        settings.deterministic = cfg_.deterministic;
        const Frame<T> frame = render_frame(gaussians_, cam, settings);
        const LossResult<T> loss = training_loss(frame.image(), target, T(cfg_.lambda_dssim));
        rep.loss = double(loss.value);
        if (!std::isfinite(rep.loss))
            throw TrainingDiverged("non-finite loss at iteration " + std::to_string(i) + " (view '" +
                                   view.camera.name + "', " + std::to_string(gaussians_.size()) + " gaussians)");

        const auto grads = backward_frame(frame, gaussians_, loss.grad);
        if (accumulates_stats_at(cfg_, i)) stats_.accumulate(frame, grads);
        adam_step(gaussians_, moments_, grads, step_rates(cfg_, i, extent_), cfg_.adam, i);

        if (is_densify_iteration(cfg_, i)) {
            const auto limits = densify_limits(cfg_, extent_, max_height_, prunes_size_at(cfg_, i));
            rep.densify = densify_and_prune(gaussians_, moments_, stats_, limits, rng_);
        }
        if (is_opacity_reset_iteration(cfg_, i)) {
            reset_opacity(gaussians_, moments_, cfg_.opacity_reset_value);
            rep.opacity_reset = true;
        }
        iteration_ = i;
        rep.gaussians = long(gaussians_.size());
        return rep;
    }

    /// Resume from saved state; moments must be aligned with the model.
    void restore(std::vector<Gaussian<T>> gaussians, AdamMoments<T> moments, long iteration, int sh_degree) {
        if (moments.size() != gaussians.size())
            throw InvalidArgument("trainer: restored moments are not aligned with the model");
        if (iteration < 0 || sh_degree < 0 || sh_degree > kMaxShDegree)
            throw InvalidArgument("trainer: invalid restored iteration or SH degree");
        gaussians_ = std::move(gaussians);
        moments_ = std::move(moments);
        stats_.reset(gaussians_.size());
        iteration_ = iteration;
        sh_degree_ = sh_degree;
    }

    Image<T> render(const Camera &cam) const {
        return render_image(gaussians_, cam, sh_degree_, cfg_.background, cfg_.deterministic);
    }

    const std::vector<Gaussian<T>> &gaussians() const { return gaussians_; }
    const AdamMoments<T> &moments() const { return moments_; }
    const DensityStats &stats() const { return stats_; }
    const TrainConfig &config() const { return cfg_; }
    const std::vector<TrainView<T>> &views() const { return views_; }
    double scene_extent() const { return extent_; }
    long iteration() const { return iteration_; }
    int active_sh_degree() const { return sh_degree_; }

private:
    std::size_t next_view() {
        if (cursor_ >= order_.size()) {
            std::shuffle(order_.begin(), order_.end(), rng_);
            cursor_ = 0;
        }
        return order_[cursor_++];
    }

    TrainConfig cfg_;
    std::vector<TrainView<T>> views_;
    std::vector<Image<T>> half_, quarter_;
    double extent_ = 1.0;
    int max_height_ = 0;
    std::vector<Gaussian<T>> gaussians_;
    AdamMoments<T> moments_;
    DensityStats stats_;
    std::mt19937_64 rng_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
    long iteration_ = 0;
    int sh_degree_ = 0;
};

} // namespace splatlab
