// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
// Random scenes and cameras shared by the unit and acceptance suites.
//
#pragma once

#include "splatlab/core/camera.hpp"
#include "splatlab/core/gaussian.hpp"
#include "splatlab/core/projection.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace splatlab::testing {

inline Camera square_camera(int size, double focal) {
    Camera c;
    c.width = c.height = size;
    c.fx = c.fy = focal;
    c.cx = c.cy = size * 0.5;
    return c;
}

/// A camera with a random orientation close to identity and a small offset.
inline Camera jittered_camera(std::mt19937_64 &rng, int size, double focal) {
    std::normal_distribution<double> n(0.0, 1.0);
    Camera c = square_camera(size, focal);
    const Vec3<double> axis(n(rng), n(rng), n(rng));
    c.rotation = Eigen::AngleAxisd(0.1 * n(rng), axis.normalized()).toRotationMatrix();
    c.translation = Vec3<double>(0.1 * n(rng), 0.1 * n(rng), 0.1 * n(rng));
    return c;
}

struct SceneOptions {
    int count = 16;
    int sh_degree = 3;
    double min_depth = 2.0, max_depth = 8.0;
    double min_log_scale = std::log(0.05), max_log_scale = std::log(0.4);
    double min_logit = -2.0, max_logit = 3.0;
    double sh_spread = 0.25;
};

/// Gaussians scattered through the view frustum of `cam`.
template <typename T>
std::vector<Gaussian<T>> random_gaussians(std::mt19937_64 &rng, const Camera &cam, const SceneOptions &opt = {}) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<Gaussian<T>> out;
    const double half_x = 0.5 * cam.width / cam.fx, half_y = 0.5 * cam.height / cam.fy;
    for (int i = 0; i < opt.count; ++i) {
        Gaussian<T> g;
        const double z = opt.min_depth + (opt.max_depth - opt.min_depth) * u(rng);
        const Vec3<double> view(z * half_x * (2 * u(rng) - 1) * 0.9, z * half_y * (2 * u(rng) - 1) * 0.9, z);
        const Vec3<double> world = cam.rotation.transpose() * (view - cam.translation);
        g.mean = world.cast<T>();
        Vec4<double> q(n(rng), n(rng), n(rng), n(rng));
        g.rotation = (q.normalized() * (0.5 + u(rng))).cast<T>();
        for (int k = 0; k < 3; ++k)
            g.log_scale[k] = T(opt.min_log_scale + (opt.max_log_scale - opt.min_log_scale) * u(rng));
        g.opacity_logit = T(opt.min_logit + (opt.max_logit - opt.min_logit) * u(rng));
        for (int k = 0; k < sh_coeff_count(opt.sh_degree); ++k)
            for (int c = 0; c < 3; ++c) g.sh[k][c] = T((k == 0 ? 2.0 : 1.0) * opt.sh_spread * (2 * u(rng) - 1));
        out.push_back(g);
    }
    return out;
}

/// Screen-space splats with random footprints, for tests that bypass projection.
template <typename T>
std::vector<ProjectedSplat<T>> random_splats(std::mt19937_64 &rng, int count, int width, int height,
                                             int max_radius = 24, bool quantised_depth = false) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<ProjectedSplat<T>> out;
    for (int i = 0; i < count; ++i) {
        ProjectedSplat<T> s;
        s.mean2d = Vec2<T>(T(width * (1.4 * u(rng) - 0.2)), T(height * (1.4 * u(rng) - 0.2)));
        const double sx = 0.5 + max_radius / 3.0 * u(rng), sy = 0.5 + max_radius / 3.0 * u(rng);
        const double rho = 0.9 * (2 * u(rng) - 1);
        const double a = sx * sx, c = sy * sy, b = rho * sx * sy;
        const double det = a * c - b * b;
        s.conic = Vec3<T>(T(c / det), T(-b / det), T(a / det));
        const double mid = 0.5 * (a + c);
        s.radius = static_cast<int>(std::ceil(3.0 * std::sqrt(mid + std::sqrt(std::max(0.0, mid * mid - det)))));
        s.depth = quantised_depth ? T(1 + static_cast<int>(8 * u(rng))) : T(0.2 + 20 * u(rng));
        s.color = Vec3<T>(T(u(rng)), T(u(rng)), T(u(rng)));
        s.alpha = T(0.05 + 0.94 * u(rng));
        s.source = static_cast<std::uint32_t>(i);
        out.push_back(s);
    }
    return out;
}

} // namespace splatlab::testing
