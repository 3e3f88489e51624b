// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
// Procedural toy scene: a few ground-truth Gaussians seen from a ring of
// cameras, rendered with the engine itself.
//
#pragma once

#include "splatlab/io/colmap.hpp"
#include "splatlab/io/image_io.hpp"
#include "splatlab/io/init.hpp"
#include "splatlab/optim/trainer.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

namespace splatlab {

struct ToySceneOptions {
    int gaussians = 8;
    int train_views = 24;
    int test_views = 3;
    int size = 128;
    double camera_distance = 4.0;
    double focal_factor = 1.6;     // focal length in units of image size
    double object_half_size = 0.6; // ground-truth means lie in this cube
    std::uint64_t seed = 7;
};

struct ToyScene {
    std::vector<Gaussian<double>> truth;
    std::vector<Camera> train;
    std::vector<Camera> test;
    Bounds object_bounds;
};

inline Vec4<double> random_unit_quaternion(std::mt19937_64 &rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Vec4<double> q;
    do {
        q = Vec4<double>(n(rng), n(rng), n(rng), n(rng));
    } while (q.norm() < 1e-6);
    q.normalize();
    if (q[0] < 0) q = -q;
    return q;
}

inline ToyScene make_toy_scene(const ToySceneOptions &opt = {}) {
    if (opt.gaussians < 0 || opt.train_views < 1 || opt.test_views < 0 || opt.size < 1)
        throw InvalidArgument("invalid toy scene options");
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ToyScene s;
    const double h = opt.object_half_size;
    s.object_bounds = Bounds{Vec3<double>::Constant(-h), Vec3<double>::Constant(h)};
    for (int i = 0; i < opt.gaussians; ++i) {
        Gaussian<double> g;
        for (int a = 0; a < 3; ++a) g.mean[a] = -h + 2 * h * u(rng);
        for (int a = 0; a < 3; ++a) g.log_scale[a] = std::log(0.08 + 0.22 * u(rng));
        g.rotation = random_unit_quaternion(rng);
        g.opacity_logit = logit(0.55 + 0.4 * u(rng));
        const Vec3<double> rgb(0.1 + 0.8 * u(rng), 0.1 + 0.8 * u(rng), 0.1 + 0.8 * u(rng));
        g.sh[0] = rgb_to_sh_dc(rgb);
        s.truth.push_back(g);
    }
    const double focal = opt.focal_factor * opt.size;
    const Vec3<double> up(0, 0, 1);
    auto ring_camera = [&](double azimuth, double elevation, const std::string &name) {
        const Vec3<double> eye = opt.camera_distance * Vec3<double>(std::cos(elevation) * std::cos(azimuth),
                                                                    std::cos(elevation) * std::sin(azimuth),
                                                                    std::sin(elevation));
        Camera c = Camera::look_at(eye, Vec3<double>::Zero(), up, opt.size, opt.size, focal);
        c.name = name;
        return c;
    };
    auto name = [](const char *prefix, int i) {
        std::ostringstream os;
        os << prefix << std::setw(3) << std::setfill('0') << i << ".png";
        return os.str();
    };
    const double two_pi = 2.0 * std::numbers::pi;
    for (int i = 0; i < opt.train_views; ++i) {
        const double elevation = (i % 3 - 1) * 0.5; // -0.5, 0, 0.5 rad
        s.train.push_back(ring_camera(two_pi * i / opt.train_views, elevation, name("train_", i)));
    }
    for (int i = 0; i < opt.test_views; ++i)
        s.test.push_back(ring_camera(two_pi * (i + 0.37) / std::max(1, opt.test_views), 0.25 * (i % 2 ? -1 : 1),
                                     name("test_", i)));
    return s;
}

template <typename T>
std::vector<TrainView<T>> render_views(const std::vector<Gaussian<double>> &truth, const std::vector<Camera> &cams,
                                       const Vec3<double> &background = Vec3<double>::Zero()) {
    std::vector<TrainView<T>> views;
    for (const auto &c : cams) {
        const Image<double> img = render_image(truth, c, kMaxShDegree, background, true);
        views.push_back(TrainView<T>{c, img.template cast<T>()});
    }
    return views;
}

/// Surface-like samples of the ground truth used as a stand-in SfM cloud.
inline std::vector<ColmapPoint> sample_toy_points(const ToyScene &s, int per_gaussian, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<ColmapPoint> pts;
    for (const auto &g : s.truth) {
        const Mat3<double> R = quaternion_to_rotation(normalized_rotation(g.rotation));
        const Vec3<double> rgb = evaluate_sh(g.sh, 0, Vec3<double>(0, 0, 1));
        for (int k = 0; k < per_gaussian; ++k) {
            ColmapPoint p;
            p.id = pts.size() + 1;
            p.position = g.mean + R * g.scale().cwiseProduct(Vec3<double>(n(rng), n(rng), n(rng)));
            p.color = rgb;
            pts.push_back(p);
        }
    }
    return pts;
}

/// Write the toy scene as a COLMAP text dataset with sRGB PNG images.
inline void write_toy_dataset(const std::filesystem::path &dir, const ToyScene &s, int points_per_gaussian = 16,
                              std::uint64_t seed = 1) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "images");
    std::vector<Camera> all = s.train;
    all.insert(all.end(), s.test.begin(), s.test.end());
    for (const auto &c : all)
        write_png(dir / "images" / c.name, render_image(s.truth, c, kMaxShDegree, Vec3<double>::Zero(), true));
    write_colmap_text(dir / "sparse" / "0", all, sample_toy_points(s, points_per_gaussian, seed));
}

} // namespace splatlab
