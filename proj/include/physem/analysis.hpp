#pragma once

#include <cstddef>
#include <vector>

#include "physem/pyramid.hpp"
#include "physem/registry.hpp"
#include "physem/segmentation.hpp"

namespace physem {

struct AnalysisConfig {
    SegConfig seg;
    std::size_t top_threshold = kDefaultTopThreshold;

    void validate() const;
    friend bool operator==(const AnalysisConfig&, const AnalysisConfig&) = default;
};

/// Everything one pass over an image produces.
struct Analysis {
    Pyramid pyramid;
    std::vector<SegmentationState> states;  // states[k] segments pyramid.levels[k]
    std::vector<RefineReport> reports;
    AppearanceList appearance;
};

/// Squeeze pyramid, top segmentation, top-down refinement, appearance list.
Analysis analyze(const ImagePlane& image, const AnalysisConfig& cfg = {});

}  // namespace physem
