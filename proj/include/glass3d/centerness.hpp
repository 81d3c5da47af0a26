#pragma once

#include <vector>

#include "glass3d/grid.hpp"

namespace glass3d {

/// Mask pixels that have a 4-neighbour outside the mask or touch the image
/// border, in row-major order. Throws EmptyInstance for an empty mask.
std::vector<Pixel> contour(const BinaryMask& mask);

/// sqrt(d_min / d_max) per instance pixel, where d_min and d_max are the
/// shortest and longest pixel-center distances to the instance's contour
/// pixels. Contour pixels (and single-pixel instances) get 0.
///
/// Exact: d_min comes from a squared Euclidean distance transform seeded at
/// contour pixels and d_max from the convex hull of the contour, so every
/// value matches the brute-force definition bit for bit. Rows are processed
/// in parallel.
CenternessMap centerness_map(const InstanceMaskSet& masks);

/// F_fused[c, y, x] = F[c, y, x] * (1 - C[y, x]).
FeatureMap fuse(const FeatureMap& features, const CenternessMap& centerness);

/// Mean binary cross-entropy with predictions clamped to [1e-7, 1 - 1e-7].
double centerness_loss(const CenternessMap& predicted, const CenternessMap& target);

/// Same value formula as centerness_map, shared by every implementation so that
/// results compare exactly.
double centerness_value(long long min_dist_sq, long long max_dist_sq);

namespace reference {

/// Brute force over all contour pixels, serial.
CenternessMap centerness_map(const InstanceMaskSet& masks);

}  // namespace reference
}  // namespace glass3d
