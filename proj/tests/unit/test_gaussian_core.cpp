// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatlab/core/gaussian.hpp"
#include "splatlab/core/projection.hpp"
#include "splatlab/core/sh.hpp"
#include "support/fixtures.hpp"

#include <catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>

using namespace splatlab;
using Catch::Approx;

namespace {

Gaussian<double> unit_gaussian_at(const Vec3<double> &mean) {
    Gaussian<double> g;
    g.mean = mean;
    return g;
}

Vec3<double> sorted_eigenvalues(const Mat3<double> &m) {
    Eigen::SelfAdjointEigenSolver<Mat3<double>> es(m);
    Vec3<double> ev = es.eigenvalues();
    std::sort(ev.data(), ev.data() + 3);
    return ev;
}

} // namespace

TEST_CASE("assemble_covariance closed forms", "[gaussian-core]") {
    SECTION("identity rotation and unit scale give the identity") {
        const Mat3<double> s = assemble_covariance(Vec4<double>(1, 0, 0, 0), Vec3<double>(0, 0, 0));
        REQUIRE((s - Mat3<double>::Identity()).cwiseAbs().maxCoeff() < 1e-15);
    }
    SECTION("axis-aligned scaling squares the scale") {
        const Mat3<double> s = assemble_covariance(Vec4<double>(1, 0, 0, 0), Vec3<double>(std::log(2.0), 0, 0));
        REQUIRE((s - Vec3<double>(4, 1, 1).asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff() < 1e-14);
    }
    SECTION("90 degrees about z swaps the x and y variances") {
        // R = [[0,-1,0],[1,0,0],[0,0,1]] applied to diag(4,1,1) by hand.
        const double h = std::sqrt(2.0) / 2.0;
        const Mat3<double> s = assemble_covariance(Vec4<double>(h, 0, 0, h), Vec3<double>(std::log(2.0), 0, 0));
        REQUIRE((s - Vec3<double>(1, 4, 1).asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff() < 1e-14);
    }
    SECTION("zero quaternion is rejected") {
        REQUIRE_THROWS_AS(assemble_covariance(Vec4<double>(0, 0, 0, 0), Vec3<double>(0, 0, 0)), InvalidPrimitive);
    }
}

TEST_CASE("assemble_covariance properties over random primitives", "[gaussian-core][property]") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int trial = 0; trial < 500; ++trial) {
        const Vec4<double> q(n(rng), n(rng), n(rng), n(rng));
        // Well separated scales: log-scales at least 0.3 apart.
        Vec3<double> ls(u(rng), 0, 0);
        ls[1] = ls[0] + 0.3 + std::abs(u(rng));
        ls[2] = ls[1] + 0.3 + std::abs(u(rng));
        const Mat3<double> s = assemble_covariance(q, ls);

        REQUIRE(assemble_covariance(Vec4<double>(-q), ls) == s); // double cover, exact
        REQUIRE((s - s.transpose()).cwiseAbs().maxCoeff() < 1e-12);

        const Vec3<double> ev = sorted_eigenvalues(s);
        Vec3<double> expected = (2.0 * ls).array().exp().matrix();
        std::sort(expected.data(), expected.data() + 3);
        for (int k = 0; k < 3; ++k) REQUIRE(std::abs(ev[k] - expected[k]) < 1e-9 * std::max(1.0, expected[k]));
        REQUIRE(ev.minCoeff() >= -1e-9);
    }
}

TEST_CASE("activations stay in range", "[gaussian-core]") {
    Gaussian<double> g;
    for (double l : {-30.0, -1.0, 0.0, 2.0, 30.0}) {
        g.log_scale = Vec3<double>(l, l, l);
        REQUIRE(g.scale().minCoeff() > 0.0);
    }
    for (double l : {-20.0, 0.0, 20.0}) {
        g.opacity_logit = l;
        REQUIRE(g.opacity() > 0.0);
        REQUIRE(g.opacity() < 1.0);
    }
}

TEST_CASE("project matches the hand-derived EWA Jacobian", "[gaussian-core]") {
    Camera cam = testing::square_camera(200, 100.0);
    cam.near = 0.2;

    SECTION("isotropic unit Gaussian on the optical axis at depth 10") {
        const auto p = project_gaussian(unit_gaussian_at(Vec3<double>(0, 0, 10)), cam, 0);
        REQUIRE(p.has_value());
        // J = diag(fx/z, fy/z) = diag(10, 10) -> J J^T = diag(100, 100), plus the 0.3 floor.
        REQUIRE(p->cache.screen_cov(0, 0) == Approx(100.3).epsilon(1e-12));
        REQUIRE(p->cache.screen_cov(1, 1) == Approx(100.3).epsilon(1e-12));
        REQUIRE(std::abs(p->cache.screen_cov(0, 1)) < 1e-12);
        REQUIRE(p->splat.conic[0] == Approx(1.0 / 100.3).epsilon(1e-12));
        REQUIRE(p->splat.conic[2] == Approx(1.0 / 100.3).epsilon(1e-12));
        REQUIRE(std::abs(p->splat.conic[1]) < 1e-15);
        REQUIRE(p->splat.radius == static_cast<int>(std::ceil(3.0 * std::sqrt(100.3))));
        REQUIRE(p->splat.depth == Approx(10.0));
        // Principal point (100, 100) in pixel-centre coordinates.
        REQUIRE(p->splat.mean2d.x() == Approx(99.5));
        REQUIRE(p->splat.mean2d.y() == Approx(99.5));
        REQUIRE(p->splat.alpha == Approx(0.5));
    }

    SECTION("doubling the depth quarters the covariance before flooring") {
        const auto near10 = project_gaussian(unit_gaussian_at(Vec3<double>(0, 0, 10)), cam, 0);
        const auto far20 = project_gaussian(unit_gaussian_at(Vec3<double>(0, 0, 20)), cam, 0);
        REQUIRE(far20.has_value());
        const double c10 = near10->cache.screen_cov(0, 0) - kLowPassFloor;
        const double c20 = far20->cache.screen_cov(0, 0) - kLowPassFloor;
        REQUIRE(c20 == Approx(0.25 * c10).epsilon(1e-12));
        REQUIRE(c20 == Approx(25.0).epsilon(1e-12));
    }

    SECTION("near-plane cull") {
        cam.near = 1.0;
        REQUIRE_FALSE(project(unit_gaussian_at(Vec3<double>(0, 0, 0.5)), cam).has_value());
    }

    SECTION("guard band cull") {
        // ndc x = 2 * (fx * x / z + cx) / width - 1 = x / z for this camera.
        REQUIRE(project(unit_gaussian_at(Vec3<double>(12.0, 0, 10)), cam).has_value());
        REQUIRE_FALSE(project(unit_gaussian_at(Vec3<double>(14.0, 0, 10)), cam).has_value());
    }

    SECTION("zero quaternion is an error, not a cull") {
        Gaussian<double> g = unit_gaussian_at(Vec3<double>(0, 0, 10));
        g.rotation.setZero();
        REQUIRE_THROWS_AS(project(g, cam), InvalidPrimitive);
    }
}

TEST_CASE("projection properties", "[gaussian-core][property]") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Camera cam = testing::square_camera(128, 120.0);

    SECTION("isotropic Gaussian on the optical axis projects isotropically") {
        for (int t = 0; t < 50; ++t) {
            Gaussian<double> g = unit_gaussian_at(Vec3<double>(0, 0, 2 + 10 * u(rng)));
            g.log_scale.setConstant(std::log(0.05 + u(rng)));
            g.rotation = Vec4<double>(n(rng), n(rng), n(rng), n(rng));
            const auto p = project_gaussian(g, cam, 0);
            REQUIRE(p.has_value());
            REQUIRE(std::abs(p->cache.screen_cov(0, 1)) < 1e-9 * p->cache.screen_cov(0, 0));
            REQUIRE(p->cache.screen_cov(0, 0) == Approx(p->cache.screen_cov(1, 1)).epsilon(1e-9));
        }
    }

    SECTION("rolling the camera about its optical axis preserves screen eigenvalues") {
        for (int t = 0; t < 50; ++t) {
            Gaussian<double> g = unit_gaussian_at(Vec3<double>(0, 0, 3 + 5 * u(rng)));
            g.rotation = Vec4<double>(n(rng), n(rng), n(rng), n(rng));
            g.log_scale = Vec3<double>(std::log(0.1 + u(rng)), std::log(0.1 + u(rng)), std::log(0.1 + u(rng)));
            Camera rolled = cam;
            rolled.rotation = Eigen::AngleAxisd(6.28 * u(rng), Vec3<double>::UnitZ()).toRotationMatrix();
            const auto a = project_gaussian(g, cam, 0), b = project_gaussian(g, rolled, 0);
            REQUIRE(a.has_value());
            REQUIRE(b.has_value());
            Eigen::SelfAdjointEigenSolver<Mat2<double>> ea(a->cache.screen_cov), eb(b->cache.screen_cov);
            for (int k = 0; k < 2; ++k)
                REQUIRE(std::abs(ea.eigenvalues()[k] - eb.eigenvalues()[k]) < 1e-6 * ea.eigenvalues()[k]);
        }
    }

    SECTION("screen covariance is positive definite and radius covers three sigma") {
        const auto gs = testing::random_gaussians<double>(rng, cam, {.count = 200});
        for (const auto &g : gs) {
            const auto p = project_gaussian(g, cam, 3);
            if (!p) continue;
            Eigen::SelfAdjointEigenSolver<Mat2<double>> es(p->cache.screen_cov);
            REQUIRE(es.eigenvalues().minCoeff() > 0.0);
            REQUIRE(p->splat.radius == static_cast<int>(std::ceil(3.0 * std::sqrt(es.eigenvalues().maxCoeff()) - 1e-9)));
            REQUIRE(p->splat.color.minCoeff() >= 0.0);
        }
    }
}

TEST_CASE("eval_gaussian_2d", "[gaussian-core]") {
    const Vec3<double> identity(1, 0, 1);
    const Vec2<double> mean(3.0, -2.0);
    REQUIRE(eval_gaussian_2d(identity, mean, mean) == 1.0);
    REQUIRE(eval_gaussian_2d(identity, mean, Vec2<double>(mean.x() + std::sqrt(2.0), mean.y())) ==
            Approx(std::exp(-1.0)).epsilon(1e-14));
    REQUIRE(std::exp(-1.0) == Approx(0.3679).margin(5e-5));

    const Vec3<double> wide(1.0 / 100.3, 0, 1.0 / 100.3);
    const double g = eval_gaussian_2d(wide, Vec2<double>(0, 0), Vec2<double>(10, 0));
    REQUIRE(g == Approx(std::exp(-0.5 * 100.0 / 100.3)).epsilon(1e-14));
    REQUIRE(g == Approx(0.6074).margin(5e-5));

    SECTION("indefinite conic contributes nothing") {
        REQUIRE(eval_gaussian_2d(Vec3<double>(-1, 0, -1), Vec2<double>(0, 0), Vec2<double>(1, 1)) == 0.0);
    }

    SECTION("monotone along rays from the mean") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int t = 0; t < 200; ++t) {
            const double sx = 1 + 5 * std::abs(u(rng)), sy = 1 + 5 * std::abs(u(rng)), rho = 0.95 * u(rng);
            const double a = sx * sx, c = sy * sy, b = rho * sx * sy, det = a * c - b * b;
            const Vec3<double> conic(c / det, -b / det, a / det);
            const Vec2<double> dir = Vec2<double>(u(rng), u(rng)).normalized();
            double prev = 1.0;
            for (double r = 0; r < 30; r += 0.25) {
                const double v = eval_gaussian_2d(conic, Vec2<double>(0, 0), Vec2<double>(r * dir));
                REQUIRE(v <= prev);
                prev = v;
            }
        }
    }
}

TEST_CASE("evaluate_sh", "[gaussian-core]") {
    std::array<Vec3<double>, kShCoeffs> sh;
    sh.fill(Vec3<double>::Zero());
    const Vec3<double> dir = Vec3<double>(0.3, -0.5, 0.8).normalized();

    SECTION("all-zero coefficients give mid grey") {
        REQUIRE(evaluate_sh(sh, 3, dir) == Vec3<double>(0.5, 0.5, 0.5));
    }
    SECTION("degree-0 only: Y00 = 0.5 sqrt(1/pi), direction independent") {
        sh[0] = Vec3<double>(0.4, -2.0, 2.0);
        const double y00 = 0.5 * std::sqrt(1.0 / M_PI);
        REQUIRE(y00 == Approx(0.28209479).margin(1e-8));
        const Vec3<double> c = evaluate_sh(sh, 3, dir);
        REQUIRE(c[0] == Approx(y00 * 0.4 + 0.5).epsilon(1e-14));
        REQUIRE(c[1] == 0.0); // clamped at zero
        REQUIRE(c[2] == Approx(y00 * 2.0 + 0.5).epsilon(1e-14));
        REQUIRE(evaluate_sh(sh, 0, dir) == evaluate_sh(sh, 0, Vec3<double>(-dir)));
        REQUIRE(evaluate_sh(sh, 3, dir) == evaluate_sh(sh, 3, Vec3<double>(0, 0, 1)));
    }
    SECTION("bands above the active degree are inert") {
        sh[0] = Vec3<double>(0.2, 0.2, 0.2);
        for (int k = 1; k < 4; ++k) sh[k] = Vec3<double>(0.7, -0.3, 0.5);
        REQUIRE(evaluate_sh(sh, 0, dir) == evaluate_sh(sh, 0, Vec3<double>(-dir)));
        REQUIRE(evaluate_sh(sh, 1, dir) != evaluate_sh(sh, 1, Vec3<double>(-dir)));
    }
    SECTION("basis is orthonormal on the sphere (Monte Carlo)") {
        std::mt19937_64 rng(5);
        std::normal_distribution<double> n(0.0, 1.0);
        Eigen::Matrix<double, 16, 16> gram = Eigen::Matrix<double, 16, 16>::Zero();
        const int samples = 200000;
        for (int s = 0; s < samples; ++s) {
            const Vec3<double> d = Vec3<double>(n(rng), n(rng), n(rng)).normalized();
            const auto b = sh_basis(3, d);
            Eigen::Map<const Eigen::Matrix<double, 16, 1>> v(b.data());
            gram += v * v.transpose();
        }
        gram *= 4.0 * M_PI / samples;
        REQUIRE((gram - Eigen::Matrix<double, 16, 16>::Identity()).cwiseAbs().maxCoeff() < 0.03);
    }
    SECTION("basis gradient matches finite differences") {
        const Vec3<double> p(0.4, -0.7, 0.55);
        const auto g = sh_basis_gradient(3, p);
        const double h = 1e-6;
        for (int axis = 0; axis < 3; ++axis) {
            Vec3<double> hi = p, lo = p;
            hi[axis] += h;
            lo[axis] -= h;
            const auto bh = sh_basis(3, hi), bl = sh_basis(3, lo);
            for (int k = 0; k < kShCoeffs; ++k) REQUIRE(g[k][axis] == Approx((bh[k] - bl[k]) / (2 * h)).margin(1e-8));
        }
    }
}
