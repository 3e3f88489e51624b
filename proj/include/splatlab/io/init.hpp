// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
// Gaussian initialisation from a point cloud or from uniform samples.
//
#pragma once

#include "splatlab/core/camera.hpp"
#include "splatlab/core/gaussian.hpp"
#include "splatlab/core/sh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <random>
#include <unordered_map>
#include <vector>

namespace splatlab {

inline constexpr double kInitialOpacity = 0.1;
inline constexpr int kInitNeighbors = 3;
/// Floor on neighbour distances so coincident points get a finite log-scale.
inline constexpr double kMinNeighborDistance = 1e-7;

struct Bounds {
    Vec3<double> lo = Vec3<double>::Zero();
    Vec3<double> hi = Vec3<double>::Zero();

    Vec3<double> center() const { return 0.5 * (lo + hi); }
    Vec3<double> size() const { return hi - lo; }
    bool contains(const Vec3<double> &p) const {
        return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
    }
};

/// Radius of the smallest centroid-centred sphere holding every camera centre;
/// 1 when all centres coincide.
inline double scene_extent(const std::vector<Camera> &cams) {
    if (cams.empty()) return 1.0;
    Vec3<double> centroid = Vec3<double>::Zero();
    for (const auto &c : cams) centroid += c.center();
    centroid /= double(cams.size());
    double r = 0.0;
    for (const auto &c : cams) r = std::max(r, (c.center() - centroid).norm());
    return r > 1e-12 ? r : 1.0;
}

/// Cube three times the largest side of the camera-centre bounding box.
inline Bounds random_init_bounds(const std::vector<Camera> &cams) {
    if (cams.empty()) throw InvalidArgument("random init needs at least one camera");
    Bounds b{cams[0].center(), cams[0].center()};
    for (const auto &c : cams) {
        b.lo = b.lo.cwiseMin(c.center());
        b.hi = b.hi.cwiseMax(c.center());
    }
    double side = 3.0 * b.size().maxCoeff();
    if (!(side > 1e-12)) side = 3.0 * scene_extent(cams);
    const Vec3<double> half = Vec3<double>::Constant(0.5 * side);
    return Bounds{b.center() - half, b.center() + half};
}

/// Mean distance from each point to its `k` nearest other points; exact.
inline std::vector<double> mean_neighbor_distance(const std::vector<Vec3<double>> &pts, int k = kInitNeighbors) {
    const std::size_t n = pts.size();
    std::vector<double> out(n, 0.0);
    if (n < 2) return out;
    k = std::min<int>(k, int(n - 1));

    Bounds b{pts[0], pts[0]};
    for (const auto &p : pts) {
        b.lo = b.lo.cwiseMin(p);
        b.hi = b.hi.cwiseMax(p);
    }
    const Vec3<double> size = b.size().cwiseMax(1e-9);
    double cell = std::cbrt(size.prod() / double(n)) * 2.0;
    cell = std::max(cell, size.maxCoeff() / 1024.0);
    Eigen::Vector3i dims;
    for (int a = 0; a < 3; ++a) dims[a] = std::max(1, int(std::ceil(size[a] / cell)));

    auto cell_of = [&](const Vec3<double> &p) {
        Eigen::Vector3i c;
        for (int a = 0; a < 3; ++a) c[a] = std::clamp(int((p[a] - b.lo[a]) / cell), 0, dims[a] - 1);
        return c;
    };
    auto key = [&](const Eigen::Vector3i &c) {
        return (std::int64_t(c.x()) * dims.y() + c.y()) * std::int64_t(dims.z()) + c.z();
    };
    std::unordered_map<std::int64_t, std::vector<std::uint32_t>> grid;
    for (std::size_t i = 0; i < n; ++i) grid[key(cell_of(pts[i]))].push_back(std::uint32_t(i));
    const int max_ring = dims.maxCoeff();

    std::vector<double> best;
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3i c = cell_of(pts[i]);
        best.clear();
        auto visit = [&](const Eigen::Vector3i &q) {
            for (int a = 0; a < 3; ++a)
                if (q[a] < 0 || q[a] >= dims[a]) return;
            const auto it = grid.find(key(q));
            if (it == grid.end()) return;
            for (const std::uint32_t j : it->second) {
                if (j == i) continue;
                const double d = (pts[j] - pts[i]).norm();
                if (int(best.size()) < k) {
                    best.push_back(d);
                    std::push_heap(best.begin(), best.end());
                } else if (d < best.front()) {
                    std::pop_heap(best.begin(), best.end());
                    best.back() = d;
                    std::push_heap(best.begin(), best.end());
                }
            }
        };
        for (int r = 0; r <= max_ring; ++r) {
            for (int dx = -r; dx <= r; ++dx)
                for (int dy = -r; dy <= r; ++dy)
                    for (int dz = -r; dz <= r; ++dz) {
                        if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != r) continue;
                        visit(c + Eigen::Vector3i(dx, dy, dz));
                    }
            // Every point in ring r + 1 or beyond is at least r cells away.
            if (int(best.size()) == k && best.front() <= double(r) * cell) break;
        }
        std::sort(best.begin(), best.end());
        double sum = 0.0;
        for (const double d : best) sum += std::max(d, kMinNeighborDistance);
        out[i] = sum / double(best.size());
    }
    return out;
}

template <typename T>
Gaussian<T> make_initial_gaussian(const Vec3<double> &pos, const Vec3<double> &rgb, double scale) {
    Gaussian<T> g;
    g.mean = pos.cast<T>();
    g.log_scale = Vec3<T>::Constant(T(std::log(scale)));
    g.opacity_logit = T(logit(kInitialOpacity));
    g.sh[0] = rgb_to_sh_dc(rgb).cast<T>();
    return g;
}

/// Uniform samples in `bounds` with random colours and nearest-neighbour scales.
template <typename T> std::vector<Gaussian<T>> init_random(const Bounds &bounds, std::size_t count, std::uint64_t seed) {
    if (!bounds.lo.allFinite() || !bounds.hi.allFinite() || (bounds.hi.array() < bounds.lo.array()).any())
        throw InvalidArgument("init_random: invalid bounds");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Vec3<double>> pos(count), rgb(count);
    for (std::size_t i = 0; i < count; ++i) {
        for (int a = 0; a < 3; ++a) pos[i][a] = bounds.lo[a] + u(rng) * (bounds.hi[a] - bounds.lo[a]);
        for (int a = 0; a < 3; ++a) rgb[i][a] = u(rng);
    }
    std::vector<double> scale = mean_neighbor_distance(pos);
    if (count == 1) scale[0] = std::max(0.1 * bounds.size().maxCoeff(), kMinNeighborDistance);
    std::vector<Gaussian<T>> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(make_initial_gaussian<T>(pos[i], rgb[i], scale[i]));
    return out;
}

/// One isotropic Gaussian per point. Fewer than four points fall back to
/// `fallback_count` random Gaussians inside `fallback_bounds`, with a warning.
template <typename T>
std::vector<Gaussian<T>> init_from_points(const std::vector<Vec3<double>> &points, const std::vector<Vec3<double>> &colors,
                                          const Bounds &fallback_bounds, std::size_t fallback_count, std::uint64_t seed,
                                          std::ostream *log = &std::cerr) {
    if (points.size() != colors.size()) throw InvalidArgument("init_from_points: point and colour counts differ");
    if (points.size() < 4) {
        if (log)
            *log << "splatlab: warning: " << points.size() << " SfM points (< 4); using " << fallback_count
                 << " random gaussians\n";
        return init_random<T>(fallback_bounds, fallback_count, seed);
    }
    const auto scale = mean_neighbor_distance(points);
    std::vector<Gaussian<T>> out;
    out.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) out.push_back(make_initial_gaussian<T>(points[i], colors[i], scale[i]));
    return out;
}

} // namespace splatlab
