#pragma once

// Random inputs shared by unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <random>

#include "glass3d/losses.hpp"

namespace fixture {

using namespace glass3d;

struct RandomConfig {
    PolarPlane pred;
    Plane truth;
    Vec2 u;
};

// Random (pred, gt, pixel) away from the ray-parallel singularity and from the
// |x| kinks of both loss terms.
inline RandomConfig random_config(std::mt19937_64& rng, const CameraIntrinsics& k) {
    std::uniform_real_distribution<double> ang(-1.2, 1.2), dist(0.3, 12.0), jitter(-0.4, 0.4);
    std::uniform_real_distribution<double> px(0.0, k.width), py(0.0, k.height);
    for (;;) {
        const PolarPlane gt{ang(rng), ang(rng), dist(rng)};
        const PolarPlane pred{std::clamp(gt.theta1 + jitter(rng), -1.5, 1.5),
                              std::clamp(gt.theta2 + jitter(rng), -1.5, 1.5), gt.d + 2.0 * jitter(rng)};
        const Vec2 u(px(rng), py(rng));
        const Plane truth = from_polar(gt);
        const Vec3 n = from_polar(pred.theta1, pred.theta2);
        const Vec3 ray = pixel_ray(k, u);
        if (std::abs(n.dot(ray)) / ray.norm() < 0.2 || pred.d < 0.1) continue;
        if (std::abs(pred.theta1 - gt.theta1) < 1e-3 || std::abs(pred.theta2 - gt.theta2) < 1e-3 ||
            std::abs(pred.d - gt.d) < 1e-3)
            continue;
        const Vec3 p = (-pred.d / n.dot(ray)) * ray;
        const auto e = in_plane_basis(n);
        bool kink = false;
        for (const Vec3& q : {Vec3(p + e[0]), Vec3(p - e[0]), Vec3(p + e[1]), Vec3(p - e[1])})
            kink |= std::abs(truth.signed_distance(q)) < 1e-3;
        if (kink) continue;
        return {pred, truth, u};
    }
}

// Random blob: union of a few random rectangles and discs, then labels split
// by a random vertical cut so some masks carry two instances.
inline InstanceMaskSet random_blob(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> size(4, 64);
    const int rows = size(rng);
    const int cols = size(rng);
    InstanceMaskSet m(rows, cols, 0);
    std::uniform_int_distribution<int> shapes(1, 4);
    const int n = shapes(rng);
    for (int s = 0; s < n; ++s) {
        std::uniform_int_distribution<int> rr(0, rows - 1), cc(0, cols - 1);
        const int r0 = rr(rng), c0 = cc(rng);
        const int r1 = rr(rng), c1 = cc(rng);
        const bool disc = (rng() & 1) != 0;
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                bool in;
                if (disc) {
                    const double rad = 1.0 + std::abs(r1 - r0) / 2.0;
                    in = std::hypot(r - r0, c - c0) <= rad;
                } else {
                    in = r >= std::min(r0, r1) && r <= std::max(r0, r1) && c >= std::min(c0, c1) && c <= std::max(c0, c1);
                }
                if (in) m(r, c) = 1;
            }
        }
    }
    if ((rng() & 1) != 0) {
        const int cut = std::uniform_int_distribution<int>(0, cols - 1)(rng);
        bool any1 = false, any2 = false;
        for (int r = 0; r < rows; ++r)
            for (int c = cut; c < cols; ++c)
                if (m(r, c) != 0) m(r, c) = 2;
        for (auto v : m.values()) {
            any1 |= v == 1;
            any2 |= v == 2;
        }
        if (any2 && !any1) {
            for (auto& v : m.values()) v = v == 2 ? 1 : v;
        }
    }
    return m;
}

}  // namespace fixture
