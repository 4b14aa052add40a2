#pragma once

// Per-pixel kernels of the analysis pipeline. The functions in physem::kernels
// are OpenMP-parallel; physem::kernels::serial holds straightforward
// single-threaded versions that the tests use as the reference. Both must
// produce bit-identical results.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "physem/image.hpp"
#include "physem/types.hpp"

namespace physem::kernels {

/// round(0.299 R + 0.587 G + 0.114 B), computed on integers.
ImagePlane to_luminance(const RgbImage& image);

/// 2x2 block average with edge replication for odd dimensions; round half up.
ImagePlane squeeze(const ImagePlane& plane);

/// Nearest-parent upsampling: target (x, y) takes source (x/2, y/2).
/// Source dims must equal ceil(target/2).
std::vector<RegionId> expand(std::span<const RegionId> source, int source_width, int source_height,
                             int target_width, int target_height);
std::vector<double> expand(std::span<const double> source, int source_width, int source_height,
                           int target_width, int target_height);

/// Indices (ascending) where |raw - reference| > delta.
std::vector<std::size_t> deviants(std::span<const std::uint8_t> raw, std::span<const double> reference,
                                  double delta);

/// Dense stats table indexed by region id, size max_id + 1. Uncommitted pixels are skipped.
std::vector<RegionStats> accumulate(std::span<const RegionId> labels, std::span<const std::uint8_t> raw,
                                    RegionId max_id);

namespace serial {

ImagePlane to_luminance(const RgbImage& image);
ImagePlane squeeze(const ImagePlane& plane);
std::vector<RegionId> expand(std::span<const RegionId> source, int source_width, int source_height,
                             int target_width, int target_height);
std::vector<double> expand(std::span<const double> source, int source_width, int source_height,
                           int target_width, int target_height);
std::vector<std::size_t> deviants(std::span<const std::uint8_t> raw, std::span<const double> reference,
                                  double delta);
std::vector<RegionStats> accumulate(std::span<const RegionId> labels, std::span<const std::uint8_t> raw,
                                    RegionId max_id);

}  // namespace serial

}  // namespace physem::kernels
