// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
// Full differentiable pipeline: project -> bin/sort -> blend, and back.
//
#pragma once

#include "splatlab/gradients/projection_backward.hpp"
#include "splatlab/raster/backward.hpp"
#include "splatlab/raster/binning.hpp"
#include "splatlab/raster/forward.hpp"

#include <optional>
#include <span>
#include <vector>

namespace splatlab {

struct RenderSettings {
    int sh_degree = kMaxShDegree;
    Vec3<double> background = Vec3<double>::Zero();
    /// Record per-pixel state for a later backward pass.
    bool training = false;
    /// Single worker; bit-identical results across runs.
    bool deterministic = false;
};

/// Everything one render produces, kept for the backward pass.
template <typename T> struct Frame {
    Camera camera;
    Vec3<T> background = Vec3<T>::Zero();
    int workers = 1;
    std::vector<ProjectedSplat<T>> splats; // visible Gaussians only
    std::vector<ProjectionCache<T>> caches; // parallel to `splats`
    TileBinning binning;
    RenderOutput<T> output;

    const Image<T> &image() const { return output.image; }
};

template <typename T>
void project_all(std::span<const Gaussian<T>> gaussians, const Camera &cam, int sh_degree, int workers,
                 std::vector<ProjectedSplat<T>> &splats, std::vector<ProjectionCache<T>> &caches) {
    std::vector<std::optional<Projection<T>>> slots(gaussians.size());
    parallel_for(gaussians.size(), workers,
                 [&](std::size_t i, int) { slots[i] = project_gaussian(gaussians[i], cam, sh_degree); });
    splats.clear();
    caches.clear();
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (!slots[i]) continue;
        slots[i]->splat.source = static_cast<std::uint32_t>(i);
        splats.push_back(slots[i]->splat);
        caches.push_back(slots[i]->cache);
    }
}

template <typename T>
Frame<T> render_frame(std::span<const Gaussian<T>> gaussians, const Camera &cam, const RenderSettings &settings) {
    cam.validate();
    Frame<T> f;
    f.camera = cam;
    f.background = settings.background.cast<T>();
    f.workers = worker_count(settings.deterministic);
    project_all(gaussians, cam, settings.sh_degree, f.workers, f.splats, f.caches);
    f.binning = bin_and_sort(std::span<const ProjectedSplat<T>>(f.splats), cam.width, cam.height);
    f.output = render_forward(f.binning, std::span<const ProjectedSplat<T>>(f.splats), f.background,
                              settings.training, f.workers);
    return f;
}

template <typename T>
Frame<T> render_frame(const std::vector<Gaussian<T>> &gaussians, const Camera &cam, const RenderSettings &settings) {
    return render_frame(std::span<const Gaussian<T>>(gaussians), cam, settings);
}

/// Gradients of every Gaussian given d loss / d image for a training-mode
/// frame. Culled Gaussians receive exactly zero.
template <typename T>
std::vector<GaussianGrads<T>> backward_frame(const Frame<T> &f, std::span<const Gaussian<T>> gaussians,
                                             const Image<T> &d_image) {
    const std::span<const ProjectedSplat<T>> splats(f.splats);
    const auto splat_grads = render_backward(d_image, f.output, f.binning, splats, f.background, f.workers);
    std::vector<GaussianGrads<T>> grads(gaussians.size());
    const T half_w = T(0.5) * T(f.camera.width), half_h = T(0.5) * T(f.camera.height);
    parallel_for(splats.size(), f.workers, [&](std::size_t i, int) {
        const std::uint32_t src = splats[i].source;
        grads[src] = backward_project(gaussians[src], f.camera, Projection<T>{splats[i], f.caches[i]}, splat_grads[i]);
        const Vec2<T> ndc(splat_grads[i].mean2d.x() * half_w, splat_grads[i].mean2d.y() * half_h);
        grads[src].view_pos_grad_norm = ndc.norm();
    });
    return grads;
}

template <typename T>
std::vector<GaussianGrads<T>> backward_frame(const Frame<T> &f, const std::vector<Gaussian<T>> &gaussians,
                                             const Image<T> &d_image) {
    return backward_frame(f, std::span<const Gaussian<T>>(gaussians), d_image);
}

} // namespace splatlab
