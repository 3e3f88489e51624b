// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
// Binary model format and PLY export.
//
// Model file (little-endian):
//   char[4]  magic "SPLT"
//   u32      version
//   u32      sh degree
//   u32      reserved, zero
//   u64      gaussian count
//   count x 236-byte records of f32:
//     mean[3] log_scale[3] rotation[4] (r,i,j,k) opacity_logit
//     sh[48]  channel-major: all 16 red coefficients, then green, then blue
//
#pragma once

#include "splatlab/core/gaussian.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace splatlab {

static_assert(std::endian::native == std::endian::little, "serialization assumes a little-endian host");

inline constexpr char kModelMagic[4] = {'S', 'P', 'L', 'T'};
inline constexpr std::uint32_t kModelVersion = 1;
inline constexpr std::size_t kModelHeaderBytes = 24;
inline constexpr int kRecordFloats = 3 + 3 + 4 + 1 + 3 * kShCoeffs;
inline constexpr std::size_t kRecordBytes = kRecordFloats * sizeof(float);
static_assert(kRecordBytes == 236);

struct SplatModel {
    int sh_degree = kMaxShDegree;
    std::vector<Gaussian<float>> gaussians;

    bool operator==(const SplatModel &) const = default;
};

namespace detail {

inline std::array<float, kRecordFloats> pack_record(const Gaussian<float> &g) {
    std::array<float, kRecordFloats> r{};
    int o = 0;
    for (int k = 0; k < 3; ++k) r[o++] = g.mean[k];
    for (int k = 0; k < 3; ++k) r[o++] = g.log_scale[k];
    for (int k = 0; k < 4; ++k) r[o++] = g.rotation[k];
    r[o++] = g.opacity_logit;
    for (int c = 0; c < 3; ++c)
        for (int k = 0; k < kShCoeffs; ++k) r[o++] = g.sh[k][c];
    return r;
}

inline Gaussian<float> unpack_record(const std::array<float, kRecordFloats> &r) {
    Gaussian<float> g;
    int o = 0;
    for (int k = 0; k < 3; ++k) g.mean[k] = r[o++];
    for (int k = 0; k < 3; ++k) g.log_scale[k] = r[o++];
    for (int k = 0; k < 4; ++k) g.rotation[k] = r[o++];
    g.opacity_logit = r[o++];
    for (int c = 0; c < 3; ++c)
        for (int k = 0; k < kShCoeffs; ++k) g.sh[k][c] = r[o++];
    return g;
}

template <typename V> void put(std::ostream &out, V v) { out.write(reinterpret_cast<const char *>(&v), sizeof(V)); }

template <typename V> V get(std::istream &in, const char *what) {
    V v{};
    in.read(reinterpret_cast<char *>(&v), sizeof(V));
    if (in.gcount() != std::streamsize(sizeof(V))) throw FormatError(std::string("truncated model: ") + what);
    return v;
}

} // namespace detail

inline void write_model(std::ostream &out, const SplatModel &model) {
    if (model.sh_degree < 0 || model.sh_degree > kMaxShDegree) throw InvalidArgument("model SH degree out of range");
    out.write(kModelMagic, 4);
    detail::put<std::uint32_t>(out, kModelVersion);
    detail::put<std::uint32_t>(out, std::uint32_t(model.sh_degree));
    detail::put<std::uint32_t>(out, 0);
    detail::put<std::uint64_t>(out, model.gaussians.size());
    for (const auto &g : model.gaussians) {
        const auto r = detail::pack_record(g);
        out.write(reinterpret_cast<const char *>(r.data()), kRecordBytes);
    }
    if (!out) throw ResourceError("model write failed");
}

/// Parse a model from `in`; `available` is the number of bytes the stream holds.
inline SplatModel read_model(std::istream &in, std::uint64_t available) {
    if (available < kModelHeaderBytes) throw FormatError("truncated model: header needs 24 bytes");
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, kModelMagic, 4) != 0) throw FormatError("not a splat model (bad magic)");
    const auto version = detail::get<std::uint32_t>(in, "version");
    if (version != kModelVersion)
        throw FormatError("unsupported model version " + std::to_string(version) + " (expected " +
                          std::to_string(kModelVersion) + ")");
    const auto degree = detail::get<std::uint32_t>(in, "sh degree");
    if (degree > std::uint32_t(kMaxShDegree)) throw FormatError("model SH degree " + std::to_string(degree) + " > 3");
    detail::get<std::uint32_t>(in, "reserved");
    const auto count = detail::get<std::uint64_t>(in, "count");
    const std::uint64_t body = available - kModelHeaderBytes;
    if (count > body / kRecordBytes || body != count * kRecordBytes)
        throw FormatError("truncated model: header declares " + std::to_string(count) + " gaussians (" +
                          std::to_string(count * kRecordBytes) + " bytes) but " + std::to_string(body) +
                          " bytes follow");
    SplatModel m;
    m.sh_degree = int(degree);
    m.gaussians.reserve(std::size_t(count));
    std::array<float, kRecordFloats> r{};
    for (std::uint64_t i = 0; i < count; ++i) {
        in.read(reinterpret_cast<char *>(r.data()), kRecordBytes);
        if (in.gcount() != std::streamsize(kRecordBytes)) throw FormatError("truncated model record");
        m.gaussians.push_back(detail::unpack_record(r));
    }
    return m;
}

inline void save_model(const std::filesystem::path &path, const SplatModel &model) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ResourceError("cannot write '" + path.string() + "'");
    write_model(out, model);
}

inline SplatModel load_model(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ResourceError("cannot open model '" + path.string() + "'");
    try {
        return read_model(in, std::filesystem::file_size(path));
    } catch (const FormatError &e) {
        throw FormatError("'" + path.string() + "': " + e.what());
    }
}

template <typename T> SplatModel to_model(const std::vector<Gaussian<T>> &gaussians, int sh_degree) {
    SplatModel m;
    m.sh_degree = sh_degree;
    m.gaussians.reserve(gaussians.size());
    for (const auto &g : gaussians) m.gaussians.push_back(g.template cast<float>());
    return m;
}

// PLY export in the property layout common splat viewers read.

inline std::vector<std::string> ply_property_names() {
    std::vector<std::string> names = {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"};
    for (int i = 0; i < 3 * (kShCoeffs - 1); ++i) names.push_back("f_rest_" + std::to_string(i));
    for (const char *n : {"opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"})
        names.push_back(n);
    return names;
}

namespace detail {

inline std::vector<float> ply_row(const Gaussian<float> &g) {
    std::vector<float> row;
    row.reserve(62);
    for (int k = 0; k < 3; ++k) row.push_back(g.mean[k]);
    for (int k = 0; k < 3; ++k) row.push_back(0.0f);
    for (int c = 0; c < 3; ++c) row.push_back(g.sh[0][c]);
    for (int c = 0; c < 3; ++c)
        for (int k = 1; k < kShCoeffs; ++k) row.push_back(g.sh[k][c]);
    row.push_back(g.opacity_logit);
    for (int k = 0; k < 3; ++k) row.push_back(g.log_scale[k]);
    for (int k = 0; k < 4; ++k) row.push_back(g.rotation[k]);
    return row;
}

} // namespace detail

inline void write_ply(std::ostream &out, const SplatModel &model) {
    const auto names = ply_property_names();
    out << "ply\nformat binary_little_endian 1.0\n";
    out << "comment sh_degree " << model.sh_degree << '\n';
    out << "element vertex " << model.gaussians.size() << '\n';
    for (const auto &n : names) out << "property float " << n << '\n';
    out << "end_header\n";
    for (const auto &g : model.gaussians) {
        const auto row = detail::ply_row(g);
        out.write(reinterpret_cast<const char *>(row.data()), std::streamsize(row.size() * sizeof(float)));
    }
    if (!out) throw ResourceError("PLY write failed");
}

inline void export_ply(const std::filesystem::path &path, const SplatModel &model) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ResourceError("cannot write '" + path.string() + "'");
    write_ply(out, model);
}

/// Read a binary little-endian PLY whose vertex properties are all floats and
/// include the exported splat attributes. Missing f_rest entries read as zero.
inline SplatModel read_ply(std::istream &in) {
    std::string line;
    if (!std::getline(in, line) || line != "ply") throw FormatError("not a PLY file");
    std::uint64_t count = 0;
    bool have_vertex = false, in_vertex = false;
    int sh_degree = kMaxShDegree;
    std::vector<std::string> props;
    while (true) {
        if (!std::getline(in, line)) throw FormatError("PLY header not terminated");
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line == "end_header") break;
        std::istringstream ss(line);
        std::string word;
        ss >> word;
        if (word == "format") {
            std::string fmt;
            ss >> fmt;
            if (fmt != "binary_little_endian") throw FormatError("unsupported PLY format '" + fmt + "'");
        } else if (word == "comment") {
            std::string key;
            int v = 0;
            if (ss >> key >> v && key == "sh_degree" && v >= 0 && v <= kMaxShDegree) sh_degree = v;
        } else if (word == "element") {
            std::string name;
            ss >> name;
            if (have_vertex) throw FormatError("PLY has elements after 'vertex'");
            if (name != "vertex") throw FormatError("unexpected PLY element '" + name + "'");
            if (!(ss >> count)) throw FormatError("malformed PLY element count");
            have_vertex = in_vertex = true;
        } else if (word == "property") {
            std::string type, name;
            ss >> type >> name;
            if (!in_vertex) throw FormatError("PLY property outside the vertex element");
            if (type != "float" && type != "float32") throw FormatError("PLY property '" + name + "' is not float");
            props.push_back(name);
        }
    }
    if (!have_vertex) throw FormatError("PLY has no vertex element");
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < props.size(); ++i) col[props[i]] = i;
    auto index = [&](const std::string &n) {
        const auto it = col.find(n);
        if (it == col.end()) throw FormatError("PLY is missing property '" + n + "'");
        return it->second;
    };
    std::array<std::size_t, 3> pos{index("x"), index("y"), index("z")};
    std::array<std::size_t, 3> dc{index("f_dc_0"), index("f_dc_1"), index("f_dc_2")};
    std::array<std::size_t, 3> scale{index("scale_0"), index("scale_1"), index("scale_2")};
    std::array<std::size_t, 4> rot{index("rot_0"), index("rot_1"), index("rot_2"), index("rot_3")};
    const std::size_t opacity = index("opacity");
    std::vector<long> rest(3 * (kShCoeffs - 1), -1);
    for (std::size_t i = 0; i < rest.size(); ++i)
        if (const auto it = col.find("f_rest_" + std::to_string(i)); it != col.end()) rest[i] = long(it->second);
    const int rest_per_channel = int(std::count_if(rest.begin(), rest.end(), [](long v) { return v >= 0; })) / 3;

    SplatModel m;
    m.sh_degree = sh_degree;
    std::vector<float> row(props.size());
    for (std::uint64_t v = 0; v < count; ++v) {
        in.read(reinterpret_cast<char *>(row.data()), std::streamsize(row.size() * sizeof(float)));
        if (in.gcount() != std::streamsize(row.size() * sizeof(float)))
            throw FormatError("truncated PLY: vertex " + std::to_string(v) + " of " + std::to_string(count));
        Gaussian<float> g;
        for (int k = 0; k < 3; ++k) {
            g.mean[k] = row[pos[k]];
            g.log_scale[k] = row[scale[k]];
            g.sh[0][k] = row[dc[k]];
        }
        for (int k = 0; k < 4; ++k) g.rotation[k] = row[rot[k]];
        g.opacity_logit = row[opacity];
        for (int c = 0; c < 3; ++c)
            for (int k = 1; k <= rest_per_channel && k < kShCoeffs; ++k) {
                const long idx = rest[std::size_t(c * rest_per_channel + k - 1)];
                if (idx >= 0) g.sh[k][c] = row[std::size_t(idx)];
            }
        m.gaussians.push_back(g);
    }
    return m;
}

inline SplatModel import_ply(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ResourceError("cannot open '" + path.string() + "'");
    try {
        return read_ply(in);
    } catch (const FormatError &e) {
        throw FormatError("'" + path.string() + "': " + e.what());
    }
}

} // namespace splatlab
