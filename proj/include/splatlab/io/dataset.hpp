// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
// Posed-image datasets: a COLMAP reconstruction plus an images/ directory.
//
#pragma once

#include "splatlab/io/colmap.hpp"
#include "splatlab/io/image_io.hpp"
#include "splatlab/io/init.hpp"
#include "splatlab/optim/trainer.hpp"
#include "splatlab/raster/parallel.hpp"

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

namespace splatlab {

inline constexpr int kTestEvery = 8;

struct SfmScene {
    std::vector<Camera> cameras; // one per image, sorted by image name
    std::vector<std::filesystem::path> image_paths;
    std::vector<Vec3<double>> points;
    std::vector<Vec3<double>> colors;
    double extent = 1.0;
};

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Every 8th image in name order, starting with the first, is held out.
inline Split split_every_nth(std::size_t count, int every = kTestEvery) {
    Split s;
    for (std::size_t i = 0; i < count; ++i) (i % std::size_t(every) == 0 ? s.test : s.train).push_back(i);
    return s;
}

/// Reconstruction plus image paths; pixels are not read.
inline SfmScene load_scene(const std::filesystem::path &dir) {
    const ColmapReconstruction rec = load_colmap(dir);
    std::vector<const ColmapImage *> order;
    for (const auto &img : rec.images) order.push_back(&img);
    std::sort(order.begin(), order.end(), [](const ColmapImage *a, const ColmapImage *b) { return a->name < b->name; });
    SfmScene scene;
    const std::filesystem::path image_dir = dir / "images";
    for (const ColmapImage *img : order) {
        scene.cameras.push_back(rec.camera_for(*img));
        scene.image_paths.push_back(image_dir / img->name);
    }
    for (const auto &p : rec.points) {
        scene.points.push_back(p.position);
        scene.colors.push_back(p.color);
    }
    scene.extent = scene_extent(scene.cameras);
    return scene;
}

/// Decode every image of `scene`, downsampled by `scale`, with matching cameras.
template <typename T>
std::vector<TrainView<T>> load_views(const SfmScene &scene, int scale = 1, int workers = 1) {
    if (scale < 1) throw InvalidArgument("resolution scale must be >= 1");
    std::vector<TrainView<T>> views(scene.cameras.size());
    parallel_for(views.size(), workers, [&](std::size_t i, int) {
        const auto &path = scene.image_paths[i];
        if (!std::filesystem::exists(path)) throw ResourceError("missing image '" + path.string() + "'");
        Image<T> img = read_image<T>(path);
        const Camera &cam = scene.cameras[i];
        if (img.width != cam.width || img.height != cam.height)
            throw FormatError("image '" + path.string() + "' is " + std::to_string(img.width) + "x" +
                              std::to_string(img.height) + " but its camera is " + std::to_string(cam.width) + "x" +
                              std::to_string(cam.height));
        views[i].camera = cam.downscaled(scale);
        views[i].image = downsample(img, scale);
    });
    return views;
}

} // namespace splatlab
