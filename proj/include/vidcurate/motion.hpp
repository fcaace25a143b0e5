#pragma once

#include <span>
#include <vector>

#include "vidcurate/corpus.hpp"

namespace vidcurate {

// Row-major grayscale image with intensities in [0, 1].
struct GrayFrame {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;

    GrayFrame() = default;
    GrayFrame(int w, int h, double fill = 0.0);

    double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    bool operator==(const GrayFrame&) const = default;
};

// Dense displacement field in pixels per frame step.
struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<double> u;
    std::vector<double> v;
};

struct ClipSpan {
    double start_s = 0;
    double end_s = 0;

    double length() const { return end_s - start_s; }
    bool operator==(const ClipSpan&) const = default;
};

// Flow is computed on frames reduced to this size.
inline constexpr int flow_resolution = 128;

// Defaults below are engineering choices, not published values.
inline constexpr double default_flow_threshold = 0.05;
inline constexpr double default_flow_alpha = 1.0;
inline constexpr int default_flow_iterations = 200;
inline constexpr int default_static_frames = 5;
inline constexpr double default_cut_threshold = 0.30;
inline constexpr double default_min_clip_s = 5.0;
inline constexpr double default_max_clip_s = 60.0;

// Area-averaged resampling: each target pixel is the mean of the source area
// it covers (fractional overlaps weighted). Works for any target size >= 1.
GrayFrame downscale(const GrayFrame& frame, int target_w, int target_h);

// Horn-Schunck optical flow from `a` to `b`. Spatial gradients are central
// differences of the mean of both frames, the temporal gradient is b - a,
// and each Jacobi sweep uses the 4-neighbour average of the previous
// estimate. Borders replicate the edge pixel. Starts from zero flow.
// Throws DataError on size mismatch, std::invalid_argument on alpha <= 0 or
// iterations < 1.
FlowField horn_schunck(const GrayFrame& a, const GrayFrame& b, double alpha, int iterations);

// Discrete Horn-Schunck energy minimised by horn_schunck():
//   sum (Ix u + Iy v + It)^2 + alpha^2 * 1/4 * sum over 4-neighbour edges of |w_i - w_j|^2
// Each sweep of horn_schunck() does not increase it.
double flow_energy(const GrayFrame& a, const GrayFrame& b, const FlowField& flow, double alpha);

double mean_flow_magnitude(const FlowField& flow);

// Mean over consecutive pairs of mean_flow_magnitude; dropped iff the score
// is below `threshold`. Fewer than 2 frames leaves the record kept and flagged.
// Frames are expected at flow_resolution already.
Decision static_scene_decision(std::span<const GrayFrame> frames, double threshold, double alpha, int iterations);

// Mean absolute pixel difference between two equally sized frames.
double mean_abs_difference(const GrayFrame& a, const GrayFrame& b);

// Content-change cut detector: a cut lies between frames i and i+1 when
// their mean absolute difference exceeds `cut_threshold`; it is reported at
// the midpoint of the two timestamps. Throws DataError when the lists are
// misaligned, timestamps are not strictly increasing, or frame sizes differ.
std::vector<double> detect_scene_cuts(std::span<const GrayFrame> frames, std::span<const double> timestamps,
                                      double cut_threshold);

// Splits [0, duration_s] at the cuts, evenly re-splits spans longer than
// max_len_s into the fewest pieces that fit, then discards spans shorter than
// min_len_s. Cuts outside (0, duration_s) are ignored.
std::vector<ClipSpan> segment_clips(double duration_s, std::span<const double> cuts, double min_len_s,
                                    double max_len_s);

} // namespace vidcurate
