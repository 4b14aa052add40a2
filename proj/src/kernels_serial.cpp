#include <algorithm>
#include <cmath>
#include <string>

#include "physem/error.hpp"
#include "physem/kernels.hpp"

namespace physem::kernels::serial {

namespace {

template <typename T>
std::vector<T> expand_impl(std::span<const T> source, int sw, int sh, int tw, int th) {
    if (tw < 1 || th < 1 || sw != (tw + 1) / 2 || sh != (th + 1) / 2 ||
        source.size() != static_cast<std::size_t>(sw) * static_cast<std::size_t>(sh)) {
        fail(ErrorKind::InvalidInput, "cannot expand " + std::to_string(sw) + "x" + std::to_string(sh) + " onto " +
                                          std::to_string(tw) + "x" + std::to_string(th));
    }
    std::vector<T> out(static_cast<std::size_t>(tw) * static_cast<std::size_t>(th));
    for (int y = 0; y < th; ++y) {
        for (int x = 0; x < tw; ++x) {
            out[static_cast<std::size_t>(y) * tw + x] = source[static_cast<std::size_t>(y / 2) * sw + x / 2];
        }
    }
    return out;
}

}  // namespace

ImagePlane to_luminance(const RgbImage& image) {
    ImagePlane plane(image.width, image.height);
    if (image.rgb.size() != plane.size() * 3) fail(ErrorKind::InvalidInput, "rgb buffer size mismatch");
    auto out = plane.pixels();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const unsigned r = image.rgb[3 * i], g = image.rgb[3 * i + 1], b = image.rgb[3 * i + 2];
        out[i] = static_cast<std::uint8_t>(std::min(255u, (299 * r + 587 * g + 114 * b + 500) / 1000));
    }
    return plane;
}

ImagePlane squeeze(const ImagePlane& plane) {
    const int w = plane.width(), h = plane.height();
    ImagePlane out((w + 1) / 2, (h + 1) / 2);
    for (int y = 0; y < out.height(); ++y) {
        const int y0 = 2 * y, y1 = std::min(2 * y + 1, h - 1);
        for (int x = 0; x < out.width(); ++x) {
            const int x0 = 2 * x, x1 = std::min(2 * x + 1, w - 1);
            const unsigned sum = plane.at(x0, y0) + plane.at(x1, y0) + plane.at(x0, y1) + plane.at(x1, y1);
            out.at(x, y) = static_cast<std::uint8_t>((sum + 2) / 4);
        }
    }
    return out;
}

std::vector<RegionId> expand(std::span<const RegionId> source, int source_width, int source_height,
                             int target_width, int target_height) {
    return expand_impl(source, source_width, source_height, target_width, target_height);
}

std::vector<double> expand(std::span<const double> source, int source_width, int source_height, int target_width,
                           int target_height) {
    return expand_impl(source, source_width, source_height, target_width, target_height);
}

std::vector<std::size_t> deviants(std::span<const std::uint8_t> raw, std::span<const double> reference,
                                  double delta) {
    if (raw.size() != reference.size()) fail(ErrorKind::InvalidInput, "deviants: size mismatch");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (std::abs(static_cast<double>(raw[i]) - reference[i]) > delta) out.push_back(i);
    }
    return out;
}

std::vector<RegionStats> accumulate(std::span<const RegionId> labels, std::span<const std::uint8_t> raw,
                                    RegionId max_id) {
    if (labels.size() != raw.size()) fail(ErrorKind::InvalidInput, "accumulate: size mismatch");
    std::vector<RegionStats> table(static_cast<std::size_t>(max_id) + 1);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == kUncommitted) continue;
        if (labels[i] > max_id) fail(ErrorKind::InvalidInput, "accumulate: label exceeds max_id");
        table[labels[i]].add(raw[i]);
    }
    return table;
}

}  // namespace physem::kernels::serial
