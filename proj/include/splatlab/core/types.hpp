// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <stdexcept>
#include <string>

namespace splatlab {

template <typename T> using Vec2 = Eigen::Matrix<T, 2, 1>;
template <typename T> using Vec3 = Eigen::Matrix<T, 3, 1>;
template <typename T> using Vec4 = Eigen::Matrix<T, 4, 1>;
template <typename T> using Mat2 = Eigen::Matrix<T, 2, 2>;
template <typename T> using Mat3 = Eigen::Matrix<T, 3, 3>;
template <typename T> using Mat23 = Eigen::Matrix<T, 2, 3>;

/// Base class for every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A primitive whose parameters cannot be turned into a valid Gaussian
/// (e.g. a zero-norm rotation quaternion).
class InvalidPrimitive : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Resource limits exceeded (tile count, instance count).
class ResourceError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class TrainingDiverged : public Error {
public:
    using Error::Error;
};

template <typename T> constexpr T sigmoid(T x) {
    using std::exp;
    return T(1) / (T(1) + exp(-x));
}

template <typename T> constexpr T logit(T p) {
    using std::log;
    return log(p / (T(1) - p));
}

} // namespace splatlab
