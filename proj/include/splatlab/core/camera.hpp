// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "splatlab/core/types.hpp"

#include <cmath>
#include <string>

namespace splatlab {

/// Pinhole camera. `rotation`/`translation` map world points into view space
/// (x right, y down, z forward); pixel coordinates follow the COLMAP
/// convention where the top-left pixel centre sits at (0.5, 0.5).
struct Camera {
    Mat3<double> rotation = Mat3<double>::Identity();
    Vec3<double> translation = Vec3<double>::Zero();
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.5;
    double cy = 0.5;
    int width = 1;
    int height = 1;
    double near = 0.2;
    std::string name;

    Vec3<double> center() const { return -rotation.transpose() * translation; }

    template <typename T> Vec3<T> to_view(const Vec3<T> &world) const {
        return rotation.cast<T>() * world + translation.cast<T>();
    }

    /// Same pose with the image resampled by 1/factor along each axis.
    Camera downscaled(int factor) const {
        Camera c = *this;
        c.fx /= factor;
        c.fy /= factor;
        c.cx /= factor;
        c.cy /= factor;
        c.width = std::max(1, width / factor);
        c.height = std::max(1, height / factor);
        return c;
    }

    void validate() const {
        const Mat3<double> rrt = rotation * rotation.transpose();
        if ((rrt - Mat3<double>::Identity()).cwiseAbs().maxCoeff() > 1e-6)
            throw InvalidArgument("camera '" + name + "': rotation is not orthonormal");
        if (!(fx > 0) || !(fy > 0))
            throw InvalidArgument("camera '" + name + "': focal lengths must be positive");
        if (width <= 0 || height <= 0)
            throw InvalidArgument("camera '" + name + "': resolution must be positive");
        if (!(near > 0))
            throw InvalidArgument("camera '" + name + "': near plane must be positive");
    }

    /// Camera at `eye` looking at `target`; `up` is the approximate world up.
    static Camera look_at(const Vec3<double> &eye, const Vec3<double> &target, const Vec3<double> &up,
                          int width, int height, double focal) {
        const Vec3<double> forward = (target - eye).normalized();
        const Vec3<double> right = forward.cross(up).normalized();
        const Vec3<double> down = forward.cross(right);
        Camera c;
        c.rotation.row(0) = right.transpose();
        c.rotation.row(1) = down.transpose();
        c.rotation.row(2) = forward.transpose();
        c.translation = -c.rotation * eye;
        c.fx = c.fy = focal;
        c.cx = width * 0.5;
        c.cy = height * 0.5;
        c.width = width;
        c.height = height;
        return c;
    }
};

} // namespace splatlab
