#include "physem/pyramid.hpp"

#include "physem/error.hpp"
#include "physem/kernels.hpp"

namespace physem {

ImagePlane to_luminance(const RgbImage& image) { return kernels::to_luminance(image); }

ImagePlane squeeze(const ImagePlane& plane) {
    if (plane.empty()) fail(ErrorKind::InvalidInput, "cannot squeeze an empty plane");
    return kernels::squeeze(plane);
}

Pyramid build_pyramid(const ImagePlane& plane, std::size_t top_threshold) {
    if (plane.empty()) fail(ErrorKind::InvalidInput, "cannot build a pyramid from an empty plane");
    if (top_threshold < 1) fail(ErrorKind::InvalidInput, "top_threshold must be at least 1");

    Pyramid pyr;
    pyr.top_threshold = top_threshold;
    pyr.levels.push_back(plane);
    while (pyr.levels.back().size() > top_threshold) {
        pyr.levels.push_back(kernels::squeeze(pyr.levels.back()));
    }
    return pyr;
}

}  // namespace physem
