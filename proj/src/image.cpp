#include "physem/image.hpp"

#include <numeric>
#include <string>

#include "physem/error.hpp"

namespace physem {

namespace {

void check_dims(int width, int height) {
    if (width < 1 || height < 1) {
        fail(ErrorKind::InvalidInput,
             "image dimensions must be positive, got " + std::to_string(width) + "x" + std::to_string(height));
    }
}

}  // namespace

ImagePlane::ImagePlane(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
    check_dims(width, height);
    pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

ImagePlane::ImagePlane(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    check_dims(width, height);
    if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        fail(ErrorKind::InvalidInput, "pixel buffer size does not match " + std::to_string(width) + "x" +
                                          std::to_string(height));
    }
}

double ImagePlane::mean() const noexcept {
    if (pixels_.empty()) return 0.0;
    const std::uint64_t sum = std::accumulate(pixels_.begin(), pixels_.end(), std::uint64_t{0});
    return static_cast<double>(sum) / static_cast<double>(pixels_.size());
}

}  // namespace physem
