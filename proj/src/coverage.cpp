#include "vidcurate/coverage.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace vidcurate {

double union_area(std::span<const Rect> boxes) {
    if (boxes.empty()) {
        return 0.0;
    }
    std::vector<double> xs;
    xs.reserve(boxes.size() * 2);
    for (const auto& b : boxes) {
        xs.push_back(b.x0);
        xs.push_back(b.x1);
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

    // Boxes sorted by y0 once; each slab takes the ones spanning it in that order.
    std::vector<const Rect*> by_y;
    by_y.reserve(boxes.size());
    for (const auto& b : boxes) {
        by_y.push_back(&b);
    }
    std::sort(by_y.begin(), by_y.end(), [](const Rect* a, const Rect* b) { return a->y0 < b->y0; });

    double area = 0.0;
    for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
        const double left = xs[k];
        const double right = xs[k + 1];
        double covered = 0.0;
        double run_start = 0.0;
        double run_end = 0.0;
        bool in_run = false;
        for (const Rect* b : by_y) {
            if (b->x0 > left || b->x1 < right) {
                continue;
            }
            if (!in_run) {
                run_start = b->y0;
                run_end = b->y1;
                in_run = true;
            } else if (b->y0 > run_end) {
                covered += run_end - run_start;
                run_start = b->y0;
                run_end = b->y1;
            } else {
                run_end = std::max(run_end, b->y1);
            }
        }
        if (in_run) {
            covered += run_end - run_start;
        }
        area += covered * (right - left);
    }
    return area;
}

std::vector<Rect> clip_to_frame(std::span<const Rect> boxes, double width, double height) {
    std::vector<Rect> out;
    out.reserve(boxes.size());
    for (const auto& b : boxes) {
        Rect c{std::clamp(b.x0, 0.0, width), std::clamp(b.y0, 0.0, height), std::clamp(b.x1, 0.0, width),
               std::clamp(b.y1, 0.0, height)};
        if (c.x1 > c.x0 && c.y1 > c.y0) {
            out.push_back(c);
        }
    }
    return out;
}

double coverage_ratio(std::span<const Rect> boxes, int width, int height) {
    if (width < 1 || height < 1) {
        return 0.0;
    }
    const auto clipped = clip_to_frame(boxes, width, height);
    const double frame_area = static_cast<double>(width) * static_cast<double>(height);
    return std::min(1.0, union_area(clipped) / frame_area);
}

namespace {

enum class BoxKind { text, face };

CoverageResult coverage(const VideoRecord& record, const DetectionSidecar* sidecar, double threshold, BoxKind kind,
                        std::size_t canonical_frames) {
    CoverageResult result;
    result.threshold_used = threshold;
    if (sidecar == nullptr || sidecar->frames.empty()) {
        result.unfilterable = true;
        result.flag = sidecar == nullptr ? "unfilterable: missing sidecar" : "unfilterable: sidecar has no frames";
        return result;
    }
    for (const auto& frame : sidecar->frames) {
        const auto& boxes = kind == BoxKind::text ? frame.text_boxes : frame.face_boxes;
        result.per_frame_ratio.push_back(coverage_ratio(boxes, record.width, record.height));
    }
    result.max_ratio = *std::max_element(result.per_frame_ratio.begin(), result.per_frame_ratio.end());
    result.decision = result.max_ratio > threshold ? Verdict::dropped : Verdict::kept;
    if (sidecar->frames.size() != canonical_frames) {
        result.flag = fmt::format("frame count {} (expected {})", sidecar->frames.size(), canonical_frames);
    }
    return result;
}

} // namespace

CoverageResult text_coverage(const VideoRecord& record, const DetectionSidecar* sidecar, double threshold) {
    return coverage(record, sidecar, threshold, BoxKind::text, canonical_text_frames);
}

CoverageResult face_coverage(const VideoRecord& record, const DetectionSidecar* sidecar, double threshold) {
    return coverage(record, sidecar, threshold, BoxKind::face, canonical_face_frames);
}

} // namespace vidcurate
