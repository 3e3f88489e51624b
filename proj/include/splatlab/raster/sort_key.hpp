// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
// 64-bit instance keys: tile index in the high bits, view depth in the low 32.
//
#pragma once

#include "splatlab/core/types.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <span>
#include <vector>

namespace splatlab {

using SortKey = std::uint64_t;

inline constexpr std::uint64_t kMaxTiles = 0xFFFFFFFFull;

/// Order-preserving 32-bit code of a non-negative depth: the IEEE-754 bit
/// pattern of a non-negative float increases with its value. -0 maps to +0.
inline std::uint32_t encode_depth(float depth) {
    if (depth == 0.0f) depth = 0.0f;
    if (!(depth >= 0.0f)) throw InvalidArgument("depth keys require non-negative depths");
    return std::bit_cast<std::uint32_t>(depth);
}

inline float decode_depth(std::uint32_t bits) { return std::bit_cast<float>(bits); }

inline SortKey make_sort_key(std::uint32_t tile, float depth) {
    return (static_cast<SortKey>(tile) << 32) | encode_depth(depth);
}

inline std::uint32_t key_tile(SortKey key) { return static_cast<std::uint32_t>(key >> 32); }
inline float key_depth(SortKey key) { return decode_depth(static_cast<std::uint32_t>(key)); }

/// Bits needed to hold tile indices [0, num_tiles).
inline int tile_index_bits(std::uint64_t num_tiles) {
    if (num_tiles > kMaxTiles) throw ResourceError("tile count exceeds 2^32 - 1");
    return num_tiles <= 1 ? 0 : std::bit_width(num_tiles - 1);
}

/// Stable LSD radix sort of (key, value) pairs on the low `key_bits` bits of
/// the keys, 8 bits per pass. Passes whose digit is constant are skipped.
template <typename V> void radix_sort_pairs(std::vector<SortKey> &keys, std::vector<V> &values, int key_bits = 64) {
    const std::size_t n = keys.size();
    if (values.size() != n) throw InvalidArgument("radix_sort_pairs: keys and values differ in length");
    if (n < 2) return;
    std::vector<SortKey> key_buf(n);
    std::vector<V> val_buf(n);
    for (int shift = 0; shift < key_bits; shift += 8) {
        std::array<std::size_t, 257> offsets{};
        for (SortKey k : keys) ++offsets[((k >> shift) & 0xFF) + 1];
        bool trivial = false;
        for (int d = 1; d <= 256; ++d)
            if (offsets[d] == n) trivial = true;
        if (trivial) continue;
        for (int d = 1; d <= 256; ++d) offsets[d] += offsets[d - 1];
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t dst = offsets[(keys[i] >> shift) & 0xFF]++;
            key_buf[dst] = keys[i];
            val_buf[dst] = values[i];
        }
        keys.swap(key_buf);
        values.swap(val_buf);
    }
}

} // namespace splatlab
