#include "physem/analysis.hpp"

#include "physem/error.hpp"

namespace physem {

void AnalysisConfig::validate() const {
    seg.validate();
    if (top_threshold < 1) fail(ErrorKind::InvalidInput, "top_threshold must be at least 1");
}

Analysis analyze(const ImagePlane& image, const AnalysisConfig& cfg) {
    cfg.validate();
    Analysis out;
    out.pyramid = build_pyramid(image, cfg.top_threshold);
    out.states = run_topdown(out.pyramid, cfg.seg, &out.reports);
    out.appearance = build_appearance_list(out.states, cfg.seg, cfg.top_threshold);
    return out;
}

}  // namespace physem
