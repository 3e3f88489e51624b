// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "splatlab/core/projection.hpp"
#include "splatlab/raster/sort_key.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace splatlab {

inline constexpr int kTileSize = 16;

struct TileRange {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::uint32_t size() const { return end - begin; }
    bool empty() const { return begin == end; }
};

/// Inclusive tile rectangle; empty when x0 > x1 or y0 > y1.
struct TileRect {
    int x0 = 0, y0 = 0, x1 = -1, y1 = -1;
    bool empty() const { return x0 > x1 || y0 > y1; }
    std::uint64_t count() const { return empty() ? 0 : std::uint64_t(x1 - x0 + 1) * std::uint64_t(y1 - y0 + 1); }
};

struct TileGrid {
    int width = 0, height = 0;
    int tiles_x = 0, tiles_y = 0;

    TileGrid() = default;
    TileGrid(int w, int h)
        : width(w), height(h), tiles_x((w + kTileSize - 1) / kTileSize), tiles_y((h + kTileSize - 1) / kTileSize) {}

    std::uint64_t tile_count() const { return std::uint64_t(tiles_x) * std::uint64_t(tiles_y); }
    std::uint32_t tile_index(int tx, int ty) const { return std::uint32_t(ty) * std::uint32_t(tiles_x) + std::uint32_t(tx); }

    /// Tiles touched by the square [mean - radius, mean + radius] in
    /// pixel-index coordinates.
    template <typename T> TileRect rect(const ProjectedSplat<T> &s) const {
        TileRect r;
        const double mx = static_cast<double>(s.mean2d.x()), my = static_cast<double>(s.mean2d.y());
        const double lo_x = std::floor((mx - s.radius) / kTileSize), hi_x = std::floor((mx + s.radius) / kTileSize);
        const double lo_y = std::floor((my - s.radius) / kTileSize), hi_y = std::floor((my + s.radius) / kTileSize);
        if (!(hi_x >= 0 && hi_y >= 0 && lo_x < tiles_x && lo_y < tiles_y)) return r;
        r.x0 = static_cast<int>(std::max(0.0, lo_x));
        r.y0 = static_cast<int>(std::max(0.0, lo_y));
        r.x1 = static_cast<int>(std::min<double>(tiles_x - 1, hi_x));
        r.y1 = static_cast<int>(std::min<double>(tiles_y - 1, hi_y));
        return r;
    }
};

/// Splat instances sorted by (tile, depth, splat index), with the range of
/// each tile in the sorted arrays.
struct TileBinning {
    TileGrid grid;
    std::vector<SortKey> keys;
    std::vector<std::uint32_t> splat_ids;
    std::vector<TileRange> ranges;

    std::span<const std::uint32_t> tile_ids(std::uint32_t tile) const {
        const TileRange r = ranges[tile];
        return std::span<const std::uint32_t>(splat_ids).subspan(r.begin, r.size());
    }
};

/// Duplicates each splat into every tile its radius square overlaps, sorts
/// the instances once by key and identifies the per-tile ranges.
template <typename T> TileBinning bin_and_sort(std::span<const ProjectedSplat<T>> splats, int width, int height) {
    if (width <= 0 || height <= 0) throw InvalidArgument("bin_and_sort: resolution must be positive");
    TileBinning out;
    out.grid = TileGrid(width, height);
    const std::uint64_t num_tiles = out.grid.tile_count();
    const int tile_bits = tile_index_bits(num_tiles);
    if (splats.size() > std::numeric_limits<std::uint32_t>::max())
        throw ResourceError("bin_and_sort: too many splats");

    std::uint64_t instances = 0;
    for (const auto &s : splats) instances += out.grid.rect(s).count();
    if (instances > std::numeric_limits<std::uint32_t>::max())
        throw ResourceError("bin_and_sort: instance count " + std::to_string(instances) + " exceeds 2^32 - 1");

    out.keys.reserve(instances);
    out.splat_ids.reserve(instances);
    for (std::uint32_t i = 0; i < splats.size(); ++i) {
        const TileRect r = out.grid.rect(splats[i]);
        const float depth = static_cast<float>(splats[i].depth);
        for (int ty = r.y0; ty <= r.y1; ++ty)
            for (int tx = r.x0; tx <= r.x1; ++tx) {
                out.keys.push_back(make_sort_key(out.grid.tile_index(tx, ty), depth));
                out.splat_ids.push_back(i);
            }
    }
    radix_sort_pairs(out.keys, out.splat_ids, 32 + tile_bits);

    out.ranges.assign(num_tiles, TileRange{});
    const std::size_t n = out.keys.size();
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t tile = key_tile(out.keys[i]);
        if (i == 0 || key_tile(out.keys[i - 1]) != tile) out.ranges[tile].begin = static_cast<std::uint32_t>(i);
        if (i + 1 == n || key_tile(out.keys[i + 1]) != tile) out.ranges[tile].end = static_cast<std::uint32_t>(i + 1);
    }
    return out;
}

template <typename T> TileBinning bin_and_sort(const std::vector<ProjectedSplat<T>> &splats, int width, int height) {
    return bin_and_sort(std::span<const ProjectedSplat<T>>(splats), width, height);
}

} // namespace splatlab
