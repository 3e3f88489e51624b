// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
// COLMAP sparse reconstruction reader (text and binary) and text writer.
//
#pragma once

#include "splatlab/core/camera.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace splatlab {

struct ColmapCamera {
    std::uint32_t id = 0;
    std::string model;
    int width = 0;
    int height = 0;
    std::vector<double> params;
};

struct ColmapImage {
    std::uint32_t id = 0;
    Vec4<double> qvec = Vec4<double>(1, 0, 0, 0); // w, x, y, z; world to camera
    Vec3<double> tvec = Vec3<double>::Zero();
    std::uint32_t camera_id = 0;
    std::string name;
};

struct ColmapPoint {
    std::uint64_t id = 0;
    Vec3<double> position = Vec3<double>::Zero();
    Vec3<double> color = Vec3<double>::Zero(); // [0,1]
};

struct ColmapReconstruction {
    std::map<std::uint32_t, ColmapCamera> cameras;
    std::vector<ColmapImage> images;
    std::vector<ColmapPoint> points;

    /// Pinhole camera for one image; throws for unsupported models.
    Camera camera_for(const ColmapImage &img) const;
};

namespace colmap {

/// Parameter counts of COLMAP's camera models, indexed by model id.
struct ModelInfo {
    int id;
    const char *name;
    int num_params;
};

inline constexpr ModelInfo kModels[] = {
    {0, "SIMPLE_PINHOLE", 3}, {1, "PINHOLE", 4},        {2, "SIMPLE_RADIAL", 4},
    {3, "RADIAL", 5},         {4, "OPENCV", 8},         {5, "OPENCV_FISHEYE", 8},
    {6, "FULL_OPENCV", 12},   {7, "FOV", 5},            {8, "SIMPLE_RADIAL_FISHEYE", 4},
    {9, "RADIAL_FISHEYE", 5}, {10, "THIN_PRISM_FISHEYE", 12}, {11, "RAD_TAN_THIN_PRISM_FISHEYE", 16},
};

inline const ModelInfo *model_by_name(const std::string &name) {
    for (const auto &m : kModels)
        if (name == m.name) return &m;
    return nullptr;
}

inline const ModelInfo *model_by_id(int id) {
    for (const auto &m : kModels)
        if (id == m.id) return &m;
    return nullptr;
}

inline bool is_supported_model(const std::string &name) { return name == "PINHOLE" || name == "SIMPLE_PINHOLE"; }

inline Mat3<double> qvec_to_rotation(const Vec4<double> &q) {
    const Vec4<double> n = q.normalized();
    const double w = n[0], x = n[1], y = n[2], z = n[3];
    Mat3<double> R;
    R << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y), 2 * (x * y + w * z),
        1 - 2 * (x * x + z * z), 2 * (y * z - w * x), 2 * (x * z - w * y), 2 * (y * z + w * x),
        1 - 2 * (x * x + y * y);
    return R;
}

inline Vec4<double> rotation_to_qvec(const Mat3<double> &R) {
    Eigen::Quaterniond q(R);
    q.normalize();
    Vec4<double> v(q.w(), q.x(), q.y(), q.z());
    if (v[0] < 0) v = -v;
    return v;
}

namespace detail {

inline std::string where(const std::filesystem::path &p, std::size_t line) {
    return p.string() + ":" + std::to_string(line);
}

/// Non-comment lines with their 1-based numbers; blank lines are kept.
inline std::vector<std::pair<std::size_t, std::string>> data_lines(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw ResourceError("cannot open '" + path.string() + "'");
    std::vector<std::pair<std::size_t, std::string>> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first != std::string::npos && line[first] == '#') continue;
        out.emplace_back(n, line);
    }
    return out;
}

inline bool blank(const std::string &s) { return s.find_first_not_of(" \t") == std::string::npos; }

class BinaryReader {
public:
    explicit BinaryReader(const std::filesystem::path &path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw ResourceError("cannot open '" + path.string() + "'");
    }

    template <typename V> V read() {
        V v{};
        in_.read(reinterpret_cast<char *>(&v), sizeof(V));
        if (in_.gcount() != std::streamsize(sizeof(V)))
            throw FormatError("'" + path_.string() + "': truncated record");
        return v;
    }

    std::string read_cstring() {
        std::string s;
        char c = 0;
        while (true) {
            in_.read(&c, 1);
            if (in_.gcount() != 1) throw FormatError("'" + path_.string() + "': truncated image name");
            if (c == '\0') break;
            s.push_back(c);
        }
        return s;
    }

    void skip(std::uint64_t bytes) {
        const auto pos = std::uint64_t(in_.tellg());
        if (bytes > std::filesystem::file_size(path_) - pos)
            throw FormatError("'" + path_.string() + "': truncated record");
        in_.seekg(std::streamoff(bytes), std::ios::cur);
        if (!in_) throw FormatError("'" + path_.string() + "': truncated record");
    }

    const std::filesystem::path &path() const { return path_; }

private:
    std::filesystem::path path_;
    std::ifstream in_;
};

/// Sanity bound on element counts read from binary headers.
inline void check_count(std::uint64_t n, const std::filesystem::path &path) {
    const auto size = std::filesystem::file_size(path);
    if (n > size) throw FormatError("'" + path.string() + "': element count exceeds file size");
}

} // namespace detail

inline std::map<std::uint32_t, ColmapCamera> read_cameras_text(const std::filesystem::path &path) {
    std::map<std::uint32_t, ColmapCamera> cams;
    for (const auto &[n, line] : detail::data_lines(path)) {
        if (detail::blank(line)) continue;
        std::istringstream ss(line);
        ColmapCamera c;
        long long id = 0, w = 0, h = 0;
        if (!(ss >> id >> c.model >> w >> h) || id < 0 || w <= 0 || h <= 0)
            throw FormatError(detail::where(path, n) + ": malformed camera record");
        c.id = std::uint32_t(id);
        c.width = int(w);
        c.height = int(h);
        double p;
        while (ss >> p) c.params.push_back(p);
        if (!ss.eof()) throw FormatError(detail::where(path, n) + ": malformed camera parameters");
        if (const auto *m = model_by_name(c.model); m && int(c.params.size()) != m->num_params)
            throw FormatError(detail::where(path, n) + ": camera model " + c.model + " expects " +
                              std::to_string(m->num_params) + " parameters");
        cams[c.id] = std::move(c);
    }
    return cams;
}

inline std::vector<ColmapImage> read_images_text(const std::filesystem::path &path) {
    std::vector<ColmapImage> images;
    const auto lines = detail::data_lines(path);
    std::size_t i = 0;
    while (i < lines.size()) {
        const auto &[n, line] = lines[i];
        if (detail::blank(line)) {
            ++i;
            continue;
        }
        std::istringstream ss(line);
        ColmapImage img;
        long long id = 0, cam = 0;
        if (!(ss >> id >> img.qvec[0] >> img.qvec[1] >> img.qvec[2] >> img.qvec[3] >> img.tvec[0] >> img.tvec[1] >>
              img.tvec[2] >> cam) ||
            id < 0 || cam < 0)
            throw FormatError(detail::where(path, n) + ": malformed image record");
        std::getline(ss >> std::ws, img.name);
        while (!img.name.empty() && (img.name.back() == ' ' || img.name.back() == '\t')) img.name.pop_back();
        if (img.name.empty()) throw FormatError(detail::where(path, n) + ": image record has no name");
        img.id = std::uint32_t(id);
        img.camera_id = std::uint32_t(cam);
        images.push_back(std::move(img));
        i += 2; // the following line holds the 2D observations
    }
    return images;
}

inline std::vector<ColmapPoint> read_points_text(const std::filesystem::path &path) {
    std::vector<ColmapPoint> pts;
    for (const auto &[n, line] : detail::data_lines(path)) {
        if (detail::blank(line)) continue;
        std::istringstream ss(line);
        ColmapPoint p;
        long long id = 0;
        int r = 0, g = 0, b = 0;
        if (!(ss >> id >> p.position[0] >> p.position[1] >> p.position[2] >> r >> g >> b) || id < 0 || r < 0 ||
            r > 255 || g < 0 || g > 255 || b < 0 || b > 255)
            throw FormatError(detail::where(path, n) + ": malformed point record");
        if (!p.position.allFinite()) throw FormatError(detail::where(path, n) + ": non-finite point position");
        p.id = std::uint64_t(id);
        p.color = Vec3<double>(r, g, b) / 255.0;
        pts.push_back(p);
    }
    return pts;
}

inline std::map<std::uint32_t, ColmapCamera> read_cameras_binary(const std::filesystem::path &path) {
    detail::BinaryReader r(path);
    const auto count = r.read<std::uint64_t>();
    detail::check_count(count, path);
    std::map<std::uint32_t, ColmapCamera> cams;
    for (std::uint64_t i = 0; i < count; ++i) {
        ColmapCamera c;
        c.id = r.read<std::uint32_t>();
        const int model_id = r.read<std::int32_t>();
        const auto *m = model_by_id(model_id);
        if (!m) throw FormatError("'" + path.string() + "': unknown camera model id " + std::to_string(model_id));
        c.model = m->name;
        const auto w = r.read<std::uint64_t>(), h = r.read<std::uint64_t>();
        if (w == 0 || h == 0 || w > (1u << 30) || h > (1u << 30))
            throw FormatError("'" + path.string() + "': invalid camera resolution");
        c.width = int(w);
        c.height = int(h);
        for (int k = 0; k < m->num_params; ++k) c.params.push_back(r.read<double>());
        cams[c.id] = std::move(c);
    }
    return cams;
}

inline std::vector<ColmapImage> read_images_binary(const std::filesystem::path &path) {
    detail::BinaryReader r(path);
    const auto count = r.read<std::uint64_t>();
    detail::check_count(count, path);
    std::vector<ColmapImage> images;
    for (std::uint64_t i = 0; i < count; ++i) {
        ColmapImage img;
        img.id = r.read<std::uint32_t>();
        for (int k = 0; k < 4; ++k) img.qvec[k] = r.read<double>();
        for (int k = 0; k < 3; ++k) img.tvec[k] = r.read<double>();
        img.camera_id = r.read<std::uint32_t>();
        img.name = r.read_cstring();
        const auto n2d = r.read<std::uint64_t>();
        detail::check_count(n2d, path);
        r.skip(n2d * (2 * sizeof(double) + sizeof(std::int64_t)));
        images.push_back(std::move(img));
    }
    return images;
}

inline std::vector<ColmapPoint> read_points_binary(const std::filesystem::path &path) {
    detail::BinaryReader r(path);
    const auto count = r.read<std::uint64_t>();
    detail::check_count(count, path);
    std::vector<ColmapPoint> pts;
    pts.reserve(std::size_t(count));
    for (std::uint64_t i = 0; i < count; ++i) {
        ColmapPoint p;
        p.id = r.read<std::uint64_t>();
        for (int k = 0; k < 3; ++k) p.position[k] = r.read<double>();
        for (int k = 0; k < 3; ++k) p.color[k] = r.read<std::uint8_t>() / 255.0;
        r.read<double>(); // reprojection error
        const auto track = r.read<std::uint64_t>();
        detail::check_count(track, path);
        r.skip(track * 2 * sizeof(std::int32_t));
        if (!p.position.allFinite()) throw FormatError("'" + path.string() + "': non-finite point position");
        pts.push_back(p);
    }
    return pts;
}

/// Directory holding cameras/images/points3D, trying `dir`, `dir/sparse/0` and `dir/sparse`.
inline std::filesystem::path find_sparse_dir(const std::filesystem::path &dir) {
    namespace fs = std::filesystem;
    for (const fs::path &c : {dir, dir / "sparse" / "0", dir / "sparse"}) {
        if (fs::exists(c / "cameras.bin") || fs::exists(c / "cameras.txt")) return c;
    }
    throw ResourceError("no COLMAP reconstruction (cameras.bin or cameras.txt) under '" + dir.string() + "'");
}

} // namespace colmap

/// Read a COLMAP reconstruction; binary files take precedence over text.
inline ColmapReconstruction load_colmap(const std::filesystem::path &dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw ResourceError("dataset directory '" + dir.string() + "' does not exist");
    const fs::path sparse = colmap::find_sparse_dir(dir);
    ColmapReconstruction rec;
    const bool binary = fs::exists(sparse / "cameras.bin");
    auto need = [&](const char *stem) {
        const fs::path p = sparse / (std::string(stem) + (binary ? ".bin" : ".txt"));
        if (!fs::exists(p)) throw ResourceError("missing COLMAP file '" + p.string() + "'");
        return p;
    };
    if (binary) {
        rec.cameras = colmap::read_cameras_binary(need("cameras"));
        rec.images = colmap::read_images_binary(need("images"));
        rec.points = colmap::read_points_binary(need("points3D"));
    } else {
        rec.cameras = colmap::read_cameras_text(need("cameras"));
        rec.images = colmap::read_images_text(need("images"));
        rec.points = colmap::read_points_text(need("points3D"));
    }
    for (const auto &img : rec.images)
        if (!rec.cameras.count(img.camera_id))
            throw FormatError("image '" + img.name + "' references missing camera " + std::to_string(img.camera_id));
    return rec;
}

inline Camera ColmapReconstruction::camera_for(const ColmapImage &img) const {
    const auto it = cameras.find(img.camera_id);
    if (it == cameras.end())
        throw FormatError("image '" + img.name + "' references missing camera " + std::to_string(img.camera_id));
    const ColmapCamera &c = it->second;
    if (!colmap::is_supported_model(c.model))
        throw FormatError("unsupported camera model " + c.model + " (camera " + std::to_string(c.id) +
                          "); only PINHOLE and SIMPLE_PINHOLE are supported");
    Camera cam;
    cam.name = img.name;
    cam.width = c.width;
    cam.height = c.height;
    if (c.model == "SIMPLE_PINHOLE") {
        cam.fx = cam.fy = c.params[0];
        cam.cx = c.params[1];
        cam.cy = c.params[2];
    } else {
        cam.fx = c.params[0];
        cam.fy = c.params[1];
        cam.cx = c.params[2];
        cam.cy = c.params[3];
    }
    cam.rotation = colmap::qvec_to_rotation(img.qvec);
    cam.translation = img.tvec;
    return cam;
}

/// Write a text reconstruction with one PINHOLE camera per image.
inline void write_colmap_text(const std::filesystem::path &dir, const std::vector<Camera> &cams,
                              const std::vector<ColmapPoint> &points) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::ofstream c(dir / "cameras.txt"), im(dir / "images.txt"), pt(dir / "points3D.txt");
    if (!c || !im || !pt) throw ResourceError("cannot write COLMAP files under '" + dir.string() + "'");
    c.precision(17);
    im.precision(17);
    pt.precision(17);
    c << "# CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n";
    im << "# IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n# POINTS2D[] as (X, Y, POINT3D_ID)\n";
    pt << "# POINT3D_ID, X, Y, Z, R, G, B, ERROR, TRACK[]\n";
    for (std::size_t i = 0; i < cams.size(); ++i) {
        const Camera &k = cams[i];
        const Vec4<double> q = colmap::rotation_to_qvec(k.rotation);
        c << i + 1 << " PINHOLE " << k.width << ' ' << k.height << ' ' << k.fx << ' ' << k.fy << ' ' << k.cx << ' '
          << k.cy << '\n';
        im << i + 1 << ' ' << q[0] << ' ' << q[1] << ' ' << q[2] << ' ' << q[3] << ' ' << k.translation[0] << ' '
           << k.translation[1] << ' ' << k.translation[2] << ' ' << i + 1 << ' ' << k.name << "\n\n";
    }
    for (const auto &p : points) {
        pt << p.id << ' ' << p.position[0] << ' ' << p.position[1] << ' ' << p.position[2];
        for (int k = 0; k < 3; ++k) pt << ' ' << std::lround(std::clamp(p.color[k], 0.0, 1.0) * 255.0);
        pt << " 0\n";
    }
}

} // namespace splatlab
