#include "glass3d/grid.hpp"

#include <algorithm>
#include <array>
#include <string>

namespace glass3d {

int max_label(const InstanceMaskSet& masks) {
    int top = 0;
    for (std::uint8_t v : masks.values()) top = std::max<int>(top, v);
    return top;
}

int instance_count(const InstanceMaskSet& masks) {
    std::array<bool, 256> seen{};
    for (std::uint8_t v : masks.values()) seen[v] = true;
    const int top = max_label(masks);
    for (int label = 1; label <= top; ++label) {
        if (!seen[static_cast<std::size_t>(label)]) {
            throw InvalidMasks("instance labels are not contiguous: label " +
                               std::to_string(label) + " missing below max label " +
                               std::to_string(top));
        }
    }
    return top;
}

}  // namespace glass3d
