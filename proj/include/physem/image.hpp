#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace physem {

/// One rectangular grid of 8-bit luminance values, stored row-major.
class ImagePlane {
public:
    ImagePlane() = default;

    /// Throws InvalidInput if either dimension is zero.
    ImagePlane(int width, int height, std::uint8_t fill = 0);

    /// Throws InvalidInput if pixels.size() != width * height.
    ImagePlane(int width, int height, std::vector<std::uint8_t> pixels);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return pixels_.size(); }
    bool empty() const noexcept { return pixels_.empty(); }

    std::uint8_t at(int x, int y) const { return pixels_[index(x, y)]; }
    std::uint8_t& at(int x, int y) { return pixels_[index(x, y)]; }

    std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
    std::span<std::uint8_t> pixels() noexcept { return pixels_; }

    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    double mean() const noexcept;

    friend bool operator==(const ImagePlane&, const ImagePlane&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

/// Interleaved 8-bit RGB image, row-major.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;  // 3 * width * height bytes
};

}  // namespace physem
