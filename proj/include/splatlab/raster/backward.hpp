// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "splatlab/gradients/blend_backward.hpp"
#include "splatlab/raster/forward.hpp"

#include <span>
#include <vector>

namespace splatlab {

/// Per-splat gradients of a loss given d loss / d image. Re-traverses each
/// tile's sorted list back-to-front, starting at every pixel's last
/// contributor. Each worker accumulates into its own buffer; buffers are
/// summed in worker order, so results depend on the tile-to-worker schedule
/// only through floating-point summation order.
template <typename T>
std::vector<SplatGrad<T>> render_backward(const Image<T> &d_image, const RenderOutput<T> &fwd,
                                          const TileBinning &binning, std::span<const ProjectedSplat<T>> splats,
                                          const Vec3<T> &background, int workers = 1) {
    if (!fwd.training) throw InvalidArgument("render_backward needs a training-mode forward pass");
    const TileGrid &grid = binning.grid;
    if (d_image.width != grid.width || d_image.height != grid.height)
        throw InvalidArgument("render_backward: gradient image resolution mismatch");

    workers = std::max(1, std::min<int>(workers, static_cast<int>(grid.tile_count())));
    std::vector<std::vector<SplatGrad<T>>> partial(workers, std::vector<SplatGrad<T>>(splats.size()));
    parallel_for(grid.tile_count(), workers, [&](std::size_t tile, int worker) {
        const auto ids = binning.tile_ids(static_cast<std::uint32_t>(tile));
        if (ids.empty()) return;
        const int tx = static_cast<int>(tile % grid.tiles_x), ty = static_cast<int>(tile / grid.tiles_x);
        const int x0 = tx * kTileSize, y0 = ty * kTileSize;
        const int x1 = std::min(x0 + kTileSize, grid.width), y1 = std::min(y0 + kTileSize, grid.height);
        std::span<SplatGrad<T>> grads(partial[worker]);
        for (int py = y0; py < y1; ++py)
            for (int px = x0; px < x1; ++px) {
                const std::size_t idx = std::size_t(py) * grid.width + px;
                if (fwd.last_contributor[idx] == 0) continue;
                backward_blend(px, py, ids, fwd.last_contributor[idx], fwd.final_transmittance[idx], background,
                               d_image.pixel(px, py), splats, grads);
            }
    });
    for (int w = 1; w < workers; ++w)
        for (std::size_t i = 0; i < splats.size(); ++i) partial[0][i] += partial[w][i];
    return std::move(partial[0]);
}

} // namespace splatlab
