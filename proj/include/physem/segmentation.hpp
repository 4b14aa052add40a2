#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "physem/image.hpp"
#include "physem/pyramid.hpp"
#include "physem/types.hpp"

namespace physem {

struct SegConfig {
    double merge_threshold = 25.0;  // luminance delta for top-level growing and merging
    double deviation_delta = 15.0;  // |raw - inherited mean| above this uncommits a pixel
    int min_seed_size = 4;          // uncommitted blobs this large become new regions
    int max_refine_iters = 16;

    /// Throws InvalidInput unless every threshold is positive.
    void validate() const;

    friend bool operator==(const SegConfig&, const SegConfig&) = default;
};

/// Label map, region-average intensity map and per-region statistics for
/// one pyramid level.
struct SegmentationState {
    std::size_t level = 0;
    int width = 0;
    int height = 0;
    std::vector<RegionId> labels;
    std::vector<double> intensity;
    std::map<RegionId, RegionStats> stats;
    RegionId next_id = 1;  // smallest id never issued in this analysis

    std::size_t pixel_count() const noexcept { return labels.size(); }
    std::size_t region_count() const noexcept { return stats.size(); }
    std::size_t uncommitted_count() const noexcept;
    bool fully_committed() const noexcept { return uncommitted_count() == 0; }
};

/// What one refinement pass did; all zero means the level was inherited untouched.
struct RefineReport {
    int sweeps = 0;
    std::size_t deviants = 0;
    std::size_t adopted = 0;
    std::size_t seeded_regions = 0;
    std::size_t absorbed = 0;
    std::size_t split = 0;
    std::size_t fused = 0;
};

/// Region growing on the top plane: 4-neighbours join when their values
/// differ by at most merge_threshold, then adjacent regions whose means differ
/// by at most merge_threshold are fused (closest pair first). Ids follow the
/// raster order of each region's first pixel, starting at 1.
SegmentationState segment_top(const ImagePlane& top, const SegConfig& cfg, std::size_t level = 0);

/// Replicates every label and intensity of `state` onto the next finer plane.
/// Stats are recounted against `target`. Throws InvalidInput if `state`
/// is not the ceil-halved size of `target`.
SegmentationState expand_maps(const SegmentationState& state, const ImagePlane& target);

/// Pixels whose raw value differs from the assigned region intensity by more
/// than deviation_delta, in ascending index order.
std::vector<std::size_t> mark_deviants(const SegmentationState& provisional, const ImagePlane& raw,
                                       const SegConfig& cfg);

/// Sets the given pixels to kUncommitted and recounts stats over the rest.
void uncommit(SegmentationState& state, std::span<const std::size_t> pixels, const ImagePlane& raw);

/// Resolves every uncommitted pixel: repeated adoption sweeps, then seeding
/// of large leftover blobs and absorption of small ones, then fusion of
/// adjacent regions whose means ended up within deviation_delta (the lower id
/// survives). The returned state is fully committed and its intensity map
/// holds the final region means. A state without uncommitted pixels is
/// returned unchanged.
SegmentationState refine(SegmentationState provisional, const ImagePlane& raw, const SegConfig& cfg,
                         RefineReport* report = nullptr);

/// Full top-down pass; result[k] is the segmentation of pyramid level k.
/// `reports`, when given, receives one entry per level (the top entry is empty).
std::vector<SegmentationState> run_topdown(const Pyramid& pyr, const SegConfig& cfg,
                                           std::vector<RefineReport>* reports = nullptr);

/// From-scratch stats over the committed pixels of `state`.
std::map<RegionId, RegionStats> recount_stats(const SegmentationState& state, const ImagePlane& raw);

}  // namespace physem
