#include <omp.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "physem/error.hpp"
#include "physem/kernels.hpp"

namespace physem::kernels {

namespace {

// Below this many output pixels the thread start-up costs more than the loop.
constexpr std::ptrdiff_t kParallelCutoff = 1 << 14;

template <typename T>
std::vector<T> expand_impl(std::span<const T> source, int sw, int sh, int tw, int th) {
    if (tw < 1 || th < 1 || sw != (tw + 1) / 2 || sh != (th + 1) / 2 ||
        source.size() != static_cast<std::size_t>(sw) * static_cast<std::size_t>(sh)) {
        fail(ErrorKind::InvalidInput, "cannot expand " + std::to_string(sw) + "x" + std::to_string(sh) + " onto " +
                                          std::to_string(tw) + "x" + std::to_string(th));
    }
    std::vector<T> out(static_cast<std::size_t>(tw) * static_cast<std::size_t>(th));
    const T* src = source.data();
    T* dst = out.data();

#pragma omp parallel for schedule(static) if (static_cast<std::ptrdiff_t>(tw) * th > kParallelCutoff)
    for (int y = 0; y < th; ++y) {
        const T* src_row = src + static_cast<std::size_t>(y / 2) * sw;
        T* dst_row = dst + static_cast<std::size_t>(y) * tw;
        for (int x = 0; x < tw; ++x) dst_row[x] = src_row[x / 2];
    }
    return out;
}

}  // namespace

ImagePlane to_luminance(const RgbImage& image) {
    ImagePlane plane(image.width, image.height);
    if (image.rgb.size() != plane.size() * 3) fail(ErrorKind::InvalidInput, "rgb buffer size mismatch");
    const std::uint8_t* rgb = image.rgb.data();
    std::uint8_t* out = plane.pixels().data();
    const auto n = static_cast<std::ptrdiff_t>(plane.size());

#pragma omp parallel for schedule(static) if (n > kParallelCutoff)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const unsigned r = rgb[3 * i], g = rgb[3 * i + 1], b = rgb[3 * i + 2];
        out[i] = static_cast<std::uint8_t>(std::min(255u, (299 * r + 587 * g + 114 * b + 500) / 1000));
    }
    return plane;
}

ImagePlane squeeze(const ImagePlane& plane) {
    const int w = plane.width(), h = plane.height();
    ImagePlane out((w + 1) / 2, (h + 1) / 2);
    const int ow = out.width(), oh = out.height();
    const std::uint8_t* src = plane.pixels().data();
    std::uint8_t* dst = out.pixels().data();

#pragma omp parallel for schedule(static) if (static_cast<std::ptrdiff_t>(ow) * oh > kParallelCutoff)
    for (int y = 0; y < oh; ++y) {
        const std::uint8_t* row0 = src + static_cast<std::size_t>(2 * y) * w;
        const std::uint8_t* row1 = src + static_cast<std::size_t>(std::min(2 * y + 1, h - 1)) * w;
        std::uint8_t* out_row = dst + static_cast<std::size_t>(y) * ow;
        for (int x = 0; x < ow; ++x) {
            const int x0 = 2 * x, x1 = std::min(2 * x + 1, w - 1);
            const unsigned sum = row0[x0] + row0[x1] + row1[x0] + row1[x1];
            out_row[x] = static_cast<std::uint8_t>((sum + 2) >> 2);
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
    const auto n = static_cast<std::ptrdiff_t>(raw.size());
    std::vector<std::uint8_t> mask(raw.size());

#pragma omp parallel for schedule(static) if (n > kParallelCutoff)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        mask[i] = std::abs(static_cast<double>(raw[i]) - reference[i]) > delta ? 1 : 0;
    }

    std::vector<std::size_t> out;
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        if (mask[i]) out.push_back(static_cast<std::size_t>(i));
    }
    return out;
}

std::vector<RegionStats> accumulate(std::span<const RegionId> labels, std::span<const std::uint8_t> raw,
                                    RegionId max_id) {
    if (labels.size() != raw.size()) fail(ErrorKind::InvalidInput, "accumulate: size mismatch");
    const std::size_t slots = static_cast<std::size_t>(max_id) + 1;
    const auto n = static_cast<std::ptrdiff_t>(labels.size());
    std::vector<RegionStats> table(slots);
    bool overflow = false;

#pragma omp parallel if (n > kParallelCutoff)
    {
        std::vector<RegionStats> local(slots);
        bool local_overflow = false;
#pragma omp for schedule(static) nowait
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const RegionId id = labels[i];
            if (id == kUncommitted) continue;
            if (id > max_id) {
                local_overflow = true;
                continue;
            }
            local[id].add(raw[i]);
        }
#pragma omp critical(physem_accumulate)
        {
            overflow = overflow || local_overflow;
            for (std::size_t id = 0; id < slots; ++id) {
                table[id].count += local[id].count;
                table[id].sum += local[id].sum;
            }
        }
    }
    if (overflow) fail(ErrorKind::InvalidInput, "accumulate: label exceeds max_id");
    return table;
}

}  // namespace physem::kernels
