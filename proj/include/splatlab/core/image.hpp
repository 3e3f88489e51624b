// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "splatlab/core/types.hpp"

#include <algorithm>
#include <cstddef>
#include <vector>

namespace splatlab {

/// Interleaved H x W x 3 linear RGB image.
template <typename T> struct Image {
    int width = 0;
    int height = 0;
    std::vector<T> data;

    Image() = default;
    Image(int w, int h, T fill = T(0)) : width(w), height(h), data(std::size_t(w) * h * 3, fill) {}

    static Image filled(int w, int h, const Vec3<T> &rgb) {
        Image img(w, h);
        for (std::size_t i = 0; i < img.pixel_count(); ++i)
            for (int c = 0; c < 3; ++c) img.data[3 * i + c] = rgb[c];
        return img;
    }

    std::size_t pixel_count() const { return std::size_t(width) * height; }
    std::size_t size() const { return data.size(); }

    T &at(int x, int y, int c) { return data[(std::size_t(y) * width + x) * 3 + c]; }
    const T &at(int x, int y, int c) const { return data[(std::size_t(y) * width + x) * 3 + c]; }

    Vec3<T> pixel(int x, int y) const {
        const T *p = &data[(std::size_t(y) * width + x) * 3];
        return Vec3<T>(p[0], p[1], p[2]);
    }
    void set_pixel(int x, int y, const Vec3<T> &v) {
        T *p = &data[(std::size_t(y) * width + x) * 3];
        p[0] = v[0];
        p[1] = v[1];
        p[2] = v[2];
    }

    template <typename U> Image<U> cast() const {
        Image<U> out(width, height);
        std::transform(data.begin(), data.end(), out.data.begin(), [](T v) { return static_cast<U>(v); });
        return out;
    }

    bool operator==(const Image &o) const = default;
};

/// Box-filter downsample by an integer factor (partial edge blocks dropped).
template <typename T> Image<T> downsample(const Image<T> &src, int factor) {
    if (factor <= 1) return src;
    const int w = std::max(1, src.width / factor), h = std::max(1, src.height / factor);
    Image<T> out(w, h);
    const T inv = T(1) / T(factor * factor);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                T acc = T(0);
                for (int j = 0; j < factor; ++j)
                    for (int i = 0; i < factor; ++i) {
                        const int sx = std::min(src.width - 1, x * factor + i);
                        const int sy = std::min(src.height - 1, y * factor + j);
                        acc += src.at(sx, sy, c);
                    }
                out.at(x, y, c) = acc * inv;
            }
    return out;
}

} // namespace splatlab
