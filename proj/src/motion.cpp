#include "vidcurate/motion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "vidcurate/errors.hpp"

namespace vidcurate {

GrayFrame::GrayFrame(int w, int h, double fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

namespace {

// Row-stochastic weights mapping `src` samples onto `dst` equal bins.
std::vector<std::vector<std::pair<int, double>>> area_weights(int src, int dst) {
    std::vector<std::vector<std::pair<int, double>>> weights(dst);
    const double scale = static_cast<double>(src) / dst;
    for (int t = 0; t < dst; ++t) {
        const double lo = t * scale;
        const double hi = (t + 1) * scale;
        const int first = static_cast<int>(std::floor(lo));
        const int last = std::min(src - 1, static_cast<int>(std::ceil(hi)) - 1);
        for (int s = first; s <= last; ++s) {
            const double overlap = std::min<double>(hi, s + 1) - std::max<double>(lo, s);
            if (overlap > 0) {
                weights[t].emplace_back(s, overlap / scale);
            }
        }
    }
    return weights;
}

void check_same_size(const GrayFrame& a, const GrayFrame& b) {
    if (a.width != b.width || a.height != b.height) {
        throw DataError(fmt::format("frame size mismatch: {}x{} vs {}x{}", a.width, a.height, b.width, b.height));
    }
}

struct Gradients {
    std::vector<double> ix, iy, it;
};

Gradients image_gradients(const GrayFrame& a, const GrayFrame& b) {
    const int w = a.width;
    const int h = a.height;
    const auto n = a.pixels.size();
    Gradients g{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
    auto mean = [&](int x, int y) {
        x = std::clamp(x, 0, w - 1);
        y = std::clamp(y, 0, h - 1);
        return 0.5 * (a.at(x, y) + b.at(x, y));
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto i = static_cast<std::size_t>(y) * w + x;
            g.ix[i] = 0.5 * (mean(x + 1, y) - mean(x - 1, y));
            g.iy[i] = 0.5 * (mean(x, y + 1) - mean(x, y - 1));
            g.it[i] = b.pixels[i] - a.pixels[i];
        }
    }
    return g;
}

void neighbour_average(const std::vector<double>& f, int w, int h, std::vector<double>& out) {
    for (int y = 0; y < h; ++y) {
        const int up = std::max(y - 1, 0);
        const int down = std::min(y + 1, h - 1);
        for (int x = 0; x < w; ++x) {
            const int left = std::max(x - 1, 0);
            const int right = std::min(x + 1, w - 1);
            const auto row = static_cast<std::size_t>(y) * w;
            out[row + x] = 0.25 * (f[row + left] + f[row + right] + f[static_cast<std::size_t>(up) * w + x] +
                                   f[static_cast<std::size_t>(down) * w + x]);
        }
    }
}

} // namespace

GrayFrame downscale(const GrayFrame& frame, int target_w, int target_h) {
    if (target_w < 1 || target_h < 1) {
        throw std::invalid_argument("downscale: target dimensions must be >= 1");
    }
    if (frame.width == target_w && frame.height == target_h) {
        return frame;
    }
    const auto wx = area_weights(frame.width, target_w);
    const auto wy = area_weights(frame.height, target_h);

    // horizontal pass, then vertical
    std::vector<double> rows(static_cast<std::size_t>(frame.height) * target_w, 0.0);
    for (int y = 0; y < frame.height; ++y) {
        for (int tx = 0; tx < target_w; ++tx) {
            double acc = 0.0;
            for (const auto& [sx, weight] : wx[tx]) {
                acc += weight * frame.at(sx, y);
            }
            rows[static_cast<std::size_t>(y) * target_w + tx] = acc;
        }
    }
    GrayFrame out(target_w, target_h);
    for (int ty = 0; ty < target_h; ++ty) {
        for (int tx = 0; tx < target_w; ++tx) {
            double acc = 0.0;
            for (const auto& [sy, weight] : wy[ty]) {
                acc += weight * rows[static_cast<std::size_t>(sy) * target_w + tx];
            }
            out.at(tx, ty) = acc;
        }
    }
    return out;
}

FlowField horn_schunck(const GrayFrame& a, const GrayFrame& b, double alpha, int iterations) {
    check_same_size(a, b);
    if (!(alpha > 0)) {
        throw std::invalid_argument("horn_schunck: alpha must be positive");
    }
    if (iterations < 1) {
        throw std::invalid_argument("horn_schunck: iterations must be >= 1");
    }
    const int w = a.width;
    const int h = a.height;
    const auto n = a.pixels.size();
    const auto g = image_gradients(a, b);
    const double alpha2 = alpha * alpha;

    FlowField flow{w, h, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    std::vector<double> ubar(n);
    std::vector<double> vbar(n);
    for (int iter = 0; iter < iterations; ++iter) {
        neighbour_average(flow.u, w, h, ubar);
        neighbour_average(flow.v, w, h, vbar);
        for (std::size_t i = 0; i < n; ++i) {
            const double t = (g.ix[i] * ubar[i] + g.iy[i] * vbar[i] + g.it[i]) /
                             (alpha2 + g.ix[i] * g.ix[i] + g.iy[i] * g.iy[i]);
            flow.u[i] = ubar[i] - g.ix[i] * t;
            flow.v[i] = vbar[i] - g.iy[i] * t;
        }
    }
    return flow;
}

double flow_energy(const GrayFrame& a, const GrayFrame& b, const FlowField& flow, double alpha) {
    check_same_size(a, b);
    const int w = a.width;
    const int h = a.height;
    const auto g = image_gradients(a, b);
    double data = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double r = g.ix[i] * flow.u[i] + g.iy[i] * flow.v[i] + g.it[i];
        data += r * r;
    }
    double smooth = 0.0;
    auto edge = [&](std::size_t i, std::size_t j) {
        const double du = flow.u[i] - flow.u[j];
        const double dv = flow.v[i] - flow.v[j];
        smooth += du * du + dv * dv;
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto i = static_cast<std::size_t>(y) * w + x;
            if (x + 1 < w) {
                edge(i, i + 1);
            }
            if (y + 1 < h) {
                edge(i, i + w);
            }
        }
    }
    return data + alpha * alpha * 0.25 * smooth;
}

double mean_flow_magnitude(const FlowField& flow) {
    if (flow.u.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < flow.u.size(); ++i) {
        sum += std::hypot(flow.u[i], flow.v[i]);
    }
    return sum / static_cast<double>(flow.u.size());
}

Decision static_scene_decision(std::span<const GrayFrame> frames, double threshold, double alpha, int iterations) {
    if (frames.size() < 2) {
        return Decision{Verdict::kept, 0.0, fmt::format("unfilterable: {} frame(s), need 2", frames.size())};
    }
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < frames.size(); ++i) {
        total += mean_flow_magnitude(horn_schunck(frames[i], frames[i + 1], alpha, iterations));
    }
    const double score = total / static_cast<double>(frames.size() - 1);
    return Decision{score < threshold ? Verdict::dropped : Verdict::kept, score, {}};
}

double mean_abs_difference(const GrayFrame& a, const GrayFrame& b) {
    check_same_size(a, b);
    if (a.pixels.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        sum += std::abs(a.pixels[i] - b.pixels[i]);
    }
    return sum / static_cast<double>(a.pixels.size());
}

std::vector<double> detect_scene_cuts(std::span<const GrayFrame> frames, std::span<const double> timestamps,
                                      double cut_threshold) {
    if (frames.size() != timestamps.size()) {
        throw DataError(fmt::format("{} frames but {} timestamps", frames.size(), timestamps.size()));
    }
    for (std::size_t i = 0; i + 1 < timestamps.size(); ++i) {
        if (!(timestamps[i + 1] > timestamps[i])) {
            throw DataError(fmt::format("timestamps not strictly increasing at index {}", i + 1));
        }
    }
    std::vector<double> cuts;
    for (std::size_t i = 0; i + 1 < frames.size(); ++i) {
        if (mean_abs_difference(frames[i], frames[i + 1]) > cut_threshold) {
            cuts.push_back(0.5 * (timestamps[i] + timestamps[i + 1]));
        }
    }
    return cuts;
}

std::vector<ClipSpan> segment_clips(double duration_s, std::span<const double> cuts, double min_len_s,
                                    double max_len_s) {
    std::vector<double> bounds{0.0};
    std::vector<double> sorted(cuts.begin(), cuts.end());
    std::sort(sorted.begin(), sorted.end());
    for (double c : sorted) {
        if (c > bounds.back() && c < duration_s) {
            bounds.push_back(c);
        }
    }
    bounds.push_back(duration_s);

    std::vector<ClipSpan> clips;
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
        const double start = bounds[i];
        const double end = bounds[i + 1];
        const double len = end - start;
        const auto pieces = len > max_len_s ? static_cast<int>(std::ceil(len / max_len_s)) : 1;
        const double step = len / pieces;
        for (int k = 0; k < pieces; ++k) {
            ClipSpan span{start + k * step, k + 1 == pieces ? end : start + (k + 1) * step};
            if (span.length() >= min_len_s) {
                clips.push_back(span);
            }
        }
    }
    return clips;
}

} // namespace vidcurate
