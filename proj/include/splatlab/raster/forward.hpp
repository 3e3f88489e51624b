// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "splatlab/core/blend.hpp"
#include "splatlab/core/image.hpp"
#include "splatlab/raster/binning.hpp"
#include "splatlab/raster/parallel.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace splatlab {

template <typename T> struct RenderOutput {
    Image<T> image;
    /// Per pixel, row-major. Only filled in training mode.
    std::vector<T> final_transmittance;
    /// Per pixel: how many entries of its tile list the forward pass walked
    /// up to and including the last splat it blended (0 = none).
    std::vector<std::uint32_t> last_contributor;
    bool training = false;
};

/// Splats are visited in batches of this size; a tile stops early once all of
/// its pixels have saturated.
inline constexpr std::size_t kBlendBatch = 256;

/// Front-to-back saturating alpha blend of every tile's sorted list.
template <typename T>
RenderOutput<T> render_forward(const TileBinning &binning, std::span<const ProjectedSplat<T>> splats,
                               const Vec3<T> &background, bool training, int workers = 1) {
    const TileGrid &grid = binning.grid;
    RenderOutput<T> out;
    out.training = training;
    out.image = Image<T>(grid.width, grid.height);
    if (training) {
        out.final_transmittance.assign(out.image.pixel_count(), T(1));
        out.last_contributor.assign(out.image.pixel_count(), 0);
    }

    parallel_for(grid.tile_count(), workers, [&](std::size_t tile, int) {
        const int tx = static_cast<int>(tile % grid.tiles_x), ty = static_cast<int>(tile / grid.tiles_x);
        const int x0 = tx * kTileSize, y0 = ty * kTileSize;
        const int x1 = std::min(x0 + kTileSize, grid.width), y1 = std::min(y0 + kTileSize, grid.height);
        const int tw = x1 - x0, npix = tw * (y1 - y0);

        std::array<T, kTileSize * kTileSize> trans;
        std::array<Vec3<T>, kTileSize * kTileSize> color;
        std::array<std::uint32_t, kTileSize * kTileSize> contributor{};
        std::array<bool, kTileSize * kTileSize> done{};
        trans.fill(T(1));
        color.fill(Vec3<T>::Zero());
        int remaining = npix;

        const auto ids = binning.tile_ids(static_cast<std::uint32_t>(tile));
        std::vector<ProjectedSplat<T>> batch;
        batch.reserve(std::min(ids.size(), kBlendBatch));
        for (std::size_t start = 0; start < ids.size() && remaining > 0; start += kBlendBatch) {
            const std::size_t stop = std::min(ids.size(), start + kBlendBatch);
            batch.clear();
            for (std::size_t n = start; n < stop; ++n) batch.push_back(splats[ids[n]]);

            for (int p = 0; p < npix; ++p) {
                if (done[p]) continue;
                const int px = x0 + p % tw, py = y0 + p / tw;
                T t = trans[p];
                for (std::size_t n = 0; n < batch.size(); ++n) {
                    const BlendSample<T> b = blend_sample(batch[n], px, py);
                    if (b.skipped) continue;
                    const T next = t * (T(1) - b.weight);
                    if (next < T(kMinTransmittance)) {
                        done[p] = true;
                        --remaining;
                        break;
                    }
                    color[p] += (b.weight * t) * batch[n].color;
                    t = next;
                    contributor[p] = static_cast<std::uint32_t>(start + n + 1);
                }
                trans[p] = t;
            }
        }

        for (int p = 0; p < npix; ++p) {
            const int px = x0 + p % tw, py = y0 + p / tw;
            out.image.set_pixel(px, py, color[p] + trans[p] * background);
            if (training) {
                const std::size_t idx = std::size_t(py) * grid.width + px;
                out.final_transmittance[idx] = trans[p];
                out.last_contributor[idx] = contributor[p];
            }
        }
    });
    return out;
}

} // namespace splatlab
