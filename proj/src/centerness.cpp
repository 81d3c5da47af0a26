#include "glass3d/centerness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "glass3d/errors.hpp"

namespace glass3d {
namespace {

constexpr long long kFar = std::numeric_limits<long long>::max() / 4;

template <typename Inside>
bool is_contour(int rows, int cols, int r, int c, Inside&& inside) {
    if (r == 0 || c == 0 || r == rows - 1 || c == cols - 1) return true;
    return !inside(r - 1, c) || !inside(r + 1, c) || !inside(r, c - 1) || !inside(r, c + 1);
}

struct Box {
    int r0 = std::numeric_limits<int>::max();
    int c0 = std::numeric_limits<int>::max();
    int r1 = -1;
    int c1 = -1;
    bool empty() const { return r1 < 0; }
};

std::vector<Box> label_boxes(const InstanceMaskSet& masks, int labels) {
    std::vector<Box> boxes(static_cast<std::size_t>(labels) + 1);
    for (int r = 0; r < masks.rows(); ++r) {
        for (int c = 0; c < masks.cols(); ++c) {
            const int label = masks(r, c);
            if (label == 0) continue;
            Box& b = boxes[static_cast<std::size_t>(label)];
            b.r0 = std::min(b.r0, r);
            b.r1 = std::max(b.r1, r);
            b.c0 = std::min(b.c0, c);
            b.c1 = std::max(b.c1, c);
        }
    }
    return boxes;
}

long long cross(const Pixel& o, const Pixel& a, const Pixel& b) {
    return static_cast<long long>(a.col - o.col) * (b.row - o.row) -
           static_cast<long long>(a.row - o.row) * (b.col - o.col);
}

// Andrew's monotone chain; collinear points dropped.
std::vector<Pixel> convex_hull(std::vector<Pixel> points) {
    std::sort(points.begin(), points.end(), [](const Pixel& a, const Pixel& b) {
        return a.col != b.col ? a.col < b.col : a.row < b.row;
    });
    points.erase(std::unique(points.begin(), points.end()), points.end());
    if (points.size() < 3) return points;

    std::vector<Pixel> hull(2 * points.size());
    std::size_t k = 0;
    for (const Pixel& p : points) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
        hull[k++] = p;
    }
    const std::size_t lower = k + 1;
    for (auto it = points.rbegin() + 1; it != points.rend(); ++it) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], *it) <= 0) --k;
        hull[k++] = *it;
    }
    hull.resize(k - 1);
    return hull;
}

// Squared distance to the nearest site along one line. `f` holds the
// squared distance already accumulated in the other axis (kFar if none).
// Lower envelope of parabolas; all values are integers, so the result is exact.
void envelope_1d(const std::vector<long long>& f, std::vector<long long>& out,
                 std::vector<int>& sites, std::vector<double>& bounds) {
    const int n = static_cast<int>(f.size());
    auto key = [&](int q) {
        return static_cast<double>(f[static_cast<std::size_t>(q)]) + static_cast<double>(q) * q;
    };
    sites.clear();
    bounds.clear();  // bounds[k]: first abscissa where sites[k] is the minimizer
    for (int q = 0; q < n; ++q) {
        if (f[static_cast<std::size_t>(q)] >= kFar) continue;
        while (true) {
            if (sites.empty()) {
                sites.push_back(q);
                bounds.push_back(-std::numeric_limits<double>::infinity());
                break;
            }
            const int v = sites.back();
            const double s = (key(q) - key(v)) / (2.0 * (q - v));
            if (s <= bounds.back()) {
                sites.pop_back();
                bounds.pop_back();
                continue;
            }
            sites.push_back(q);
            bounds.push_back(s);
            break;
        }
    }
    if (sites.empty()) {
        std::fill(out.begin(), out.end(), kFar);
        return;
    }
    std::size_t k = 0;
    for (int q = 0; q < n; ++q) {
        while (k + 1 < sites.size() && bounds[k + 1] < q) ++k;
        const long long dq = q - sites[k];
        out[static_cast<std::size_t>(q)] = dq * dq + f[static_cast<std::size_t>(sites[k])];
    }
}

}  // namespace

double centerness_value(long long min_dist_sq, long long max_dist_sq) {
    if (max_dist_sq == 0) return 0.0;
    const double d_min = std::sqrt(static_cast<double>(min_dist_sq));
    const double d_max = std::sqrt(static_cast<double>(max_dist_sq));
    return std::sqrt(d_min / d_max);
}

std::vector<Pixel> contour(const BinaryMask& mask) {
    const int rows = mask.rows();
    const int cols = mask.cols();
    auto inside = [&](int r, int c) { return mask(r, c) != 0; };
    std::vector<Pixel> out;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            if (inside(r, c) && is_contour(rows, cols, r, c, inside)) out.push_back({r, c});
    if (out.empty()) throw EmptyInstance("mask has no pixels");
    return out;
}

CenternessMap centerness_map(const InstanceMaskSet& masks) {
    const int rows = masks.rows();
    const int cols = masks.cols();
    CenternessMap out(rows, cols, 0.0);
    const int labels = max_label(masks);
    const std::vector<Box> boxes = label_boxes(masks, labels);

    for (int label = 1; label <= labels; ++label) {
        const Box& box = boxes[static_cast<std::size_t>(label)];
        if (box.empty()) continue;
        auto inside = [&](int r, int c) { return masks(r, c) == label; };
        const int h = box.r1 - box.r0 + 1;
        const int w = box.c1 - box.c0 + 1;

        // Contour seeds on the box-local grid.
        Grid<long long> dist(h, w, kFar);
        std::vector<Pixel> seeds;
        for (int r = box.r0; r <= box.r1; ++r) {
            for (int c = box.c0; c <= box.c1; ++c) {
                if (inside(r, c) && is_contour(rows, cols, r, c, inside)) {
                    dist(r - box.r0, c - box.c0) = 0;
                    seeds.push_back({r, c});
                }
            }
        }
        const std::vector<Pixel> hull = convex_hull(seeds);

#pragma omp parallel
        {
            std::vector<long long> line;
            std::vector<long long> result;
            std::vector<int> sites;
            std::vector<double> bounds;

#pragma omp for schedule(static)
            for (int c = 0; c < w; ++c) {
                line.assign(static_cast<std::size_t>(h), 0);
                result.assign(static_cast<std::size_t>(h), 0);
                for (int r = 0; r < h; ++r) line[static_cast<std::size_t>(r)] = dist(r, c);
                envelope_1d(line, result, sites, bounds);
                for (int r = 0; r < h; ++r) dist(r, c) = result[static_cast<std::size_t>(r)];
            }

#pragma omp for schedule(static)
            for (int r = 0; r < h; ++r) {
                line.assign(static_cast<std::size_t>(w), 0);
                result.assign(static_cast<std::size_t>(w), 0);
                for (int c = 0; c < w; ++c) line[static_cast<std::size_t>(c)] = dist(r, c);
                envelope_1d(line, result, sites, bounds);
                const int gr = r + box.r0;
                for (int c = 0; c < w; ++c) {
                    const int gc = c + box.c0;
                    if (!inside(gr, gc)) continue;
                    long long far = 0;
                    for (const Pixel& v : hull) {
                        const long long dr = gr - v.row;
                        const long long dc = gc - v.col;
                        far = std::max(far, dr * dr + dc * dc);
                    }
                    out(gr, gc) = centerness_value(result[static_cast<std::size_t>(c)], far);
                }
            }
        }
    }
    return out;
}

FeatureMap fuse(const FeatureMap& features, const CenternessMap& centerness) {
    if (!centerness.same_shape(features.rows(), features.cols())) {
        std::ostringstream os;
        os << "feature map is " << features.rows() << "x" << features.cols()
           << " but centerness map is " << centerness.rows() << "x" << centerness.cols();
        throw ShapeError(os.str());
    }
    FeatureMap out(features.channels(), features.rows(), features.cols());
    for (int ch = 0; ch < features.channels(); ++ch)
        for (int r = 0; r < features.rows(); ++r)
            for (int c = 0; c < features.cols(); ++c)
                out(ch, r, c) = features(ch, r, c) * (1.0 - centerness(r, c));
    return out;
}

double centerness_loss(const CenternessMap& predicted, const CenternessMap& target) {
    if (!predicted.same_shape(target)) throw ShapeError("centerness prediction and target shapes differ");
    if (predicted.empty()) throw ShapeError("centerness maps are empty");
    constexpr double eps = 1e-7;
    double sum = 0.0;
    const auto p = predicted.values();
    const auto t = target.values();
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double q = std::clamp(p[i], eps, 1.0 - eps);
        sum -= t[i] * std::log(q) + (1.0 - t[i]) * std::log(1.0 - q);
    }
    return sum / static_cast<double>(p.size());
}

namespace reference {

CenternessMap centerness_map(const InstanceMaskSet& masks) {
    const int rows = masks.rows();
    const int cols = masks.cols();
    CenternessMap out(rows, cols, 0.0);
    const int labels = max_label(masks);
    for (int label = 1; label <= labels; ++label) {
        BinaryMask binary(rows, cols, 0);
        bool any = false;
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                if (masks(r, c) == label) binary(r, c) = 1, any = true;
        if (!any) continue;
        const std::vector<Pixel> edge = contour(binary);
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                if (binary(r, c) == 0) continue;
                long long near = kFar;
                long long far = 0;
                for (const Pixel& e : edge) {
                    const long long dr = r - e.row;
                    const long long dc = c - e.col;
                    const long long d2 = dr * dr + dc * dc;
                    near = std::min(near, d2);
                    far = std::max(far, d2);
                }
                out(r, c) = centerness_value(near, far);
            }
        }
    }
    return out;
}

}  // namespace reference
}  // namespace glass3d
