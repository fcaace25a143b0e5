#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vidcurate/corpus.hpp"

namespace vidcurate {

// Exact area of the union of axis-aligned boxes (coordinate-compressed sweep
// over x, merged y-intervals per slab). O(n^2 log n). Order and duplicates do
// not matter; an empty list has area 0.
double union_area(std::span<const Rect> boxes);

// Intersection of each box with [0, width] x [0, height]; boxes that fall
// entirely outside are removed.
std::vector<Rect> clip_to_frame(std::span<const Rect> boxes, double width, double height);

// union_area of the clipped boxes divided by width * height.
double coverage_ratio(std::span<const Rect> boxes, int width, int height);

// Defaults for the coverage thresholds. These are engineering choices, not
// published values.
inline constexpr double default_text_coverage_threshold = 0.30;
inline constexpr double default_face_coverage_threshold = 0.50;

inline constexpr std::size_t canonical_text_frames = 3;
inline constexpr std::size_t canonical_face_frames = 5;

struct CoverageResult {
    std::vector<double> per_frame_ratio;
    double max_ratio = 0.0;
    Verdict decision = Verdict::kept;
    double threshold_used = 0.0;
    // Set when the sidecar was missing/empty or had a non-canonical frame count.
    std::string flag;
    bool unfilterable = false;

    Decision to_decision() const { return Decision{decision, max_ratio, flag}; }
};

// Video-level text coverage: max over sampled frames of the text-box union
// ratio; dropped iff that maximum exceeds `threshold`. A null or frameless
// sidecar leaves the record kept and flagged.
CoverageResult text_coverage(const VideoRecord& record, const DetectionSidecar* sidecar, double threshold);

// Same rule over face boxes, canonical 5 frames.
CoverageResult face_coverage(const VideoRecord& record, const DetectionSidecar* sidecar, double threshold);

} // namespace vidcurate
