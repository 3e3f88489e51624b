// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
// PNG/JPEG decoding to linear RGB and PNG encoding from linear RGB.
//
#pragma once

#include "splatlab/core/image.hpp"

#include <png.h>
#include <jpeglib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace splatlab {

inline double srgb_to_linear(double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

inline double linear_to_srgb(double c) {
    c = std::clamp(c, 0.0, 1.0);
    return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

/// Linear values of the 256 sRGB byte codes.
inline const std::array<double, 256> &srgb_decode_table() {
    static const std::array<double, 256> table = [] {
        std::array<double, 256> t{};
        for (int i = 0; i < 256; ++i) t[i] = srgb_to_linear(i / 255.0);
        return t;
    }();
    return table;
}

inline std::uint8_t encode_srgb8(double linear) {
    return static_cast<std::uint8_t>(std::lround(linear_to_srgb(linear) * 255.0));
}

namespace detail {

using FilePtr = std::unique_ptr<std::FILE, int (*)(std::FILE *)>;

inline FilePtr open_file(const std::filesystem::path &path, const char *mode) {
    FilePtr f(std::fopen(path.string().c_str(), mode), &std::fclose);
    if (!f) throw ResourceError("cannot open '" + path.string() + "'");
    return f;
}

inline void png_error_handler(png_structp png, png_const_charp msg) {
    auto *err = static_cast<std::string *>(png_get_error_ptr(png));
    if (err) *err = msg;
    png_longjmp(png, 1);
}

inline void png_warning_handler(png_structp, png_const_charp) {}

/// 8-bit interleaved RGB pixels as stored in the file.
struct Rgb8 {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;
};

inline Rgb8 decode_png(const std::filesystem::path &path) {
    auto file = open_file(path, "rb");
    std::string err;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_handler, png_warning_handler);
    if (!png) throw ResourceError("libpng initialisation failed");
    png_infop info = png_create_info_struct(png);
    Rgb8 out;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("'" + path.string() + "': invalid PNG (" + err + ")");
    }
    png_init_io(png, file.get());
    png_read_info(png, info);
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    out.width = int(png_get_image_width(png, info));
    out.height = int(png_get_image_height(png, info));
    if (png_get_channels(png, info) != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("'" + path.string() + "': unsupported PNG channel layout");
    }
    out.data.resize(std::size_t(out.width) * out.height * 3);
    rows.resize(out.height);
    for (int y = 0; y < out.height; ++y) rows[y] = out.data.data() + std::size_t(y) * out.width * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

struct JpegError {
    jpeg_error_mgr mgr;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
    auto *e = reinterpret_cast<JpegError *>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, e->message);
    std::longjmp(e->jump, 1);
}

inline Rgb8 decode_jpeg(const std::filesystem::path &path) {
    auto file = open_file(path, "rb");
    jpeg_decompress_struct cinfo;
    JpegError jerr;
    cinfo.err = jpeg_std_error(&jerr.mgr);
    jerr.mgr.error_exit = jpeg_error_exit;
    Rgb8 out;
    if (setjmp(jerr.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw FormatError("'" + path.string() + "': invalid JPEG (" + jerr.message + ")");
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, file.get());
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    out.width = int(cinfo.output_width);
    out.height = int(cinfo.output_height);
    out.data.resize(std::size_t(out.width) * out.height * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = out.data.data() + std::size_t(cinfo.output_scanline) * out.width * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return out;
}

inline Rgb8 decode_any(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ResourceError("cannot open image '" + path.string() + "'");
    unsigned char magic[8] = {};
    in.read(reinterpret_cast<char *>(magic), 8);
    if (in.gcount() >= 8 && png_sig_cmp(magic, 0, 8) == 0) return decode_png(path);
    if (in.gcount() >= 3 && magic[0] == 0xFF && magic[1] == 0xD8 && magic[2] == 0xFF) return decode_jpeg(path);
    throw FormatError("'" + path.string() + "': not a PNG or JPEG image");
}

} // namespace detail

/// Decode a PNG or JPEG file into linear RGB in [0,1].
template <typename T = float> Image<T> read_image(const std::filesystem::path &path) {
    const auto raw = detail::decode_any(path);
    const auto &table = srgb_decode_table();
    Image<T> img(raw.width, raw.height);
    for (std::size_t i = 0; i < raw.data.size(); ++i) img.data[i] = static_cast<T>(table[raw.data[i]]);
    return img;
}

/// Quantise linear RGB to 8-bit sRGB.
template <typename T> std::vector<std::uint8_t> encode_srgb_bytes(const Image<T> &img) {
    std::vector<std::uint8_t> bytes(img.data.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = encode_srgb8(double(img.data[i]));
    return bytes;
}

/// Write linear RGB as an 8-bit sRGB PNG.
template <typename T> void write_png(const std::filesystem::path &path, const Image<T> &img) {
    if (img.width <= 0 || img.height <= 0) throw InvalidArgument("write_png: empty image");
    auto file = detail::open_file(path, "wb");
    std::string err;
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, detail::png_error_handler, detail::png_warning_handler);
    if (!png) throw ResourceError("libpng initialisation failed");
    png_infop info = png_create_info_struct(png);
    auto bytes = encode_srgb_bytes(img);
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y) rows[y] = bytes.data() + std::size_t(y) * img.width * 3;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw ResourceError("'" + path.string() + "': PNG write failed (" + err + ")");
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, png_uint_32(img.width), png_uint_32(img.height), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_sRGB(png, info, PNG_sRGB_INTENT_PERCEPTUAL);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

/// Round trip through 8-bit sRGB, as a written and re-read PNG would be.
template <typename T> Image<T> quantize_srgb8(const Image<T> &img) {
    const auto &table = srgb_decode_table();
    Image<T> out(img.width, img.height);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        out.data[i] = static_cast<T>(table[encode_srgb8(double(img.data[i]))]);
    return out;
}

} // namespace splatlab
