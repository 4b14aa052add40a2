#pragma once

#include <cstddef>
#include <vector>

#include "physem/image.hpp"

namespace physem {

inline constexpr std::size_t kDefaultTopThreshold = 144;

/// Bottom-up squeeze pyramid. levels[0] is the original image, levels.back()
/// the top; each level is the 2x2 block average of the one below it.
struct Pyramid {
    std::vector<ImagePlane> levels;
    std::size_t top_threshold = kDefaultTopThreshold;

    std::size_t level_count() const noexcept { return levels.size(); }
    const ImagePlane& top() const { return levels.back(); }
    std::size_t top_index() const noexcept { return levels.size() - 1; }
};

ImagePlane to_luminance(const RgbImage& image);

/// Halves each dimension (rounding up). Odd edges are padded by replicating
/// the last row/column, and each output pixel is round-half-up of the exact
/// 2x2 mean.
ImagePlane squeeze(const ImagePlane& plane);

/// Squeezes until the pixel count is at most top_threshold. Throws
/// InvalidInput for an empty plane or a zero threshold.
Pyramid build_pyramid(const ImagePlane& plane, std::size_t top_threshold = kDefaultTopThreshold);

}  // namespace physem
