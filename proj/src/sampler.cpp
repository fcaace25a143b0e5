#include "vidcurate/sampler.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "vidcurate/errors.hpp"
#include "vidcurate/rng.hpp"
#include "vidcurate/utf8.hpp"

namespace vidcurate {

std::string_view to_string(StageName s) {
    switch (s) {
    case StageName::image_pt:
        return "image_pt";
    case StageName::video_pt:
        return "video_pt";
    case StageName::refine:
        return "refine";
    case StageName::instruct:
        return "instruct";
    case StageName::long_video:
        return "long_video";
    }
    return "instruct";
}

StageName parse_stage_name(std::string_view s) {
    for (auto n : {StageName::image_pt, StageName::video_pt, StageName::refine, StageName::instruct,
                   StageName::long_video}) {
        if (to_string(n) == s) {
            return n;
        }
    }
    throw ConfigError(fmt::format("unknown stage '{}'", s));
}

StageConfig builtin_stage(StageName name) {
    //              name      res  vit   budget  min  max  stride     sep packing
    switch (name) {
    case StageName::image_pt:
        return {name, 224, 256, 512, 1, 1, {1, 1, 1}, 1, false};
    case StageName::video_pt:
        return {name, 224, 256, 2560, 8, 8, {1, 1, 1}, 1, false};
    case StageName::refine:
        return {name, 448, 1024, 2560, 16, 16, {2, 2, 2}, 1, false};
    case StageName::instruct:
        return {name, 448, 1024, 10000, 16, 64, {2, 2, 2}, 1, true};
    case StageName::long_video:
        return {name, 448, 1024, 22000, 16, 160, {2, 2, 2}, 1, true};
    }
    throw ConfigError("unknown stage");
}

void check_stage_config(const StageConfig& cfg) {
    const auto name = to_string(cfg.name);
    if (cfg.resolution < 1 || cfg.vit_tokens_per_frame < 1 || cfg.llm_budget_tokens < 1) {
        throw ConfigError(fmt::format("stage {}: resolution, ViT tokens and budget must be positive", name));
    }
    if (cfg.min_frames < 1 || cfg.min_frames > cfg.max_frames) {
        throw ConfigError(
            fmt::format("stage {}: need 1 <= min_frames ({}) <= max_frames ({})", name, cfg.min_frames, cfg.max_frames));
    }
    if (cfg.patchify_stride.t < 1 || cfg.patchify_stride.h < 1 || cfg.patchify_stride.w < 1) {
        throw ConfigError(fmt::format("stage {}: patchify stride components must be >= 1", name));
    }
    if (cfg.separator_tokens_per_frame < 0) {
        throw ConfigError(fmt::format("stage {}: separator_tokens_per_frame must be >= 0", name));
    }
    if (cfg.llm_budget_tokens * cfg.patchify_stride.product() < cfg.vit_tokens_per_frame) {
        throw ConfigError(fmt::format("stage {}: budget {} cannot hold one condensed frame", name,
                                      cfg.llm_budget_tokens));
    }
}

std::vector<double> uniform_timestamps(double duration_s, int n) {
    if (n < 1 || !(duration_s > 0)) {
        throw std::invalid_argument("uniform_timestamps: need n >= 1 and duration > 0");
    }
    std::vector<double> ts(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        ts[static_cast<std::size_t>(k)] = (k + 0.5) * duration_s / n;
    }
    return ts;
}

std::vector<double> stratified_timestamps(double duration_s, int k, std::uint64_t seed) {
    if (k < 1 || !(duration_s > 0)) {
        throw std::invalid_argument("stratified_timestamps: need k >= 1 and duration > 0");
    }
    Engine eng(seed);
    std::vector<double> ts(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        const double lo = i * duration_s / k;
        const double hi = (i + 1) * duration_s / k;
        double t = lo + uniform_unit(eng) * (hi - lo);
        if (t >= hi) {
            t = std::nextafter(hi, lo);
        }
        ts[static_cast<std::size_t>(i)] = t;
    }
    return ts;
}

int dynamic_frame_count(double duration_s, const StageConfig& cfg) {
    if (!(duration_s > 0)) {
        throw std::invalid_argument("dynamic_frame_count: duration must be positive");
    }
    const double wanted = std::ceil(duration_s);
    if (wanted >= cfg.max_frames) {
        return cfg.max_frames;
    }
    return std::max(cfg.min_frames, static_cast<int>(wanted));
}

void check_tpe_params(const TPEParams& p) {
    if (p.d <= 0 || p.d % 2 != 0) {
        throw std::invalid_argument(fmt::format("TPE dimension {} must be even and positive", p.d));
    }
    if (!(p.theta > 1)) {
        throw std::invalid_argument(fmt::format("TPE theta {} must exceed 1", p.theta));
    }
}

std::vector<double> tpe(double t, const TPEParams& p) {
    check_tpe_params(p);
    std::vector<double> out(static_cast<std::size_t>(p.d));
    for (int k = 0; k < p.d; ++k) {
        const double arg = t / std::pow(p.theta, static_cast<double>(k) / p.d);
        out[static_cast<std::size_t>(k)] = k % 2 == 0 ? std::sin(arg) : std::cos(arg);
    }
    return out;
}

FeatureGrid::FeatureGrid(int n, int rows, int cols, int channels, double fill)
    : n_frames(n), h(rows), w(cols), c(channels),
      values(static_cast<std::size_t>(n) * rows * cols * channels, fill) {}

FeatureGrid add_tpe(const FeatureGrid& grid, std::span<const double> timestamps, const TPEParams& p) {
    check_tpe_params(p);
    if (p.d != grid.c) {
        throw std::invalid_argument(fmt::format("TPE dimension {} != feature channels {}", p.d, grid.c));
    }
    if (timestamps.size() != static_cast<std::size_t>(grid.n_frames)) {
        throw std::invalid_argument(
            fmt::format("{} timestamps for {} frames", timestamps.size(), grid.n_frames));
    }
    FeatureGrid out = grid;
    for (int f = 0; f < grid.n_frames; ++f) {
        const auto emb = tpe(timestamps[static_cast<std::size_t>(f)], p);
        for (int y = 0; y < grid.h; ++y) {
            for (int x = 0; x < grid.w; ++x) {
                for (int ch = 0; ch < grid.c; ++ch) {
                    out.at(f, y, x, ch) += emb[static_cast<std::size_t>(ch)];
                }
            }
        }
    }
    return out;
}

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put_le(std::ostream& out, T value) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(std::begin(bytes), std::end(bytes));
    }
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
    unsigned char bytes[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
        throw DataError("feature grid file is truncated");
    }
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(std::begin(bytes), std::end(bytes));
    }
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

} // namespace

void write_feature_grid(const std::filesystem::path& path, const FeatureGrid& grid) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError(fmt::format("cannot write {}", path.string()));
    }
    for (int dim : {grid.n_frames, grid.h, grid.w, grid.c}) {
        put_le<std::uint64_t>(out, static_cast<std::uint64_t>(dim));
    }
    for (double v : grid.values) {
        put_le<double>(out, v);
    }
}

FeatureGrid read_feature_grid(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError(fmt::format("cannot open {}", path.string()));
    }
    std::uint64_t dims[4];
    for (auto& d : dims) {
        d = get_le<std::uint64_t>(in);
        if (d == 0 || d > (1u << 20)) {
            throw DataError(fmt::format("{}: implausible grid dimension {}", path.string(), d));
        }
    }
    FeatureGrid grid(static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2]),
                     static_cast<int>(dims[3]));
    for (auto& v : grid.values) {
        v = get_le<double>(in);
        if (!std::isfinite(v)) {
            throw DataError(fmt::format("{}: non-finite feature value", path.string()));
        }
    }
    return grid;
}

PatchifyKernel uniform_kernel(Stride size, int channels) {
    const auto taps = static_cast<std::size_t>(size.product());
    return PatchifyKernel{size, channels,
                          std::vector<double>(taps * static_cast<std::size_t>(channels),
                                              1.0 / static_cast<double>(size.product()))};
}

FeatureGrid patchify(const FeatureGrid& grid, const PatchifyKernel& kernel) {
    const auto& s = kernel.size;
    if (s.t < 1 || s.h < 1 || s.w < 1) {
        throw std::invalid_argument("patchify: stride components must be >= 1");
    }
    if (grid.n_frames % s.t != 0 || grid.h % s.h != 0 || grid.w % s.w != 0) {
        throw std::invalid_argument(fmt::format("patchify: grid {}x{}x{} not divisible by stride ({},{},{})",
                                                grid.n_frames, grid.h, grid.w, s.t, s.h, s.w));
    }
    if (kernel.channels != grid.c ||
        kernel.weights.size() != static_cast<std::size_t>(s.product()) * static_cast<std::size_t>(grid.c)) {
        throw std::invalid_argument("patchify: kernel shape does not match the grid");
    }
    FeatureGrid out(grid.n_frames / s.t, grid.h / s.h, grid.w / s.w, grid.c);
    for (int f = 0; f < out.n_frames; ++f) {
        for (int y = 0; y < out.h; ++y) {
            for (int x = 0; x < out.w; ++x) {
                for (int ch = 0; ch < grid.c; ++ch) {
                    double acc = 0.0;
                    for (int dt = 0; dt < s.t; ++dt) {
                        for (int dh = 0; dh < s.h; ++dh) {
                            for (int dw = 0; dw < s.w; ++dw) {
                                acc += kernel.weight(ch, dt, dh, dw) *
                                       grid.at(f * s.t + dt, y * s.h + dh, x * s.w + dw, ch);
                            }
                        }
                    }
                    out.at(f, y, x, ch) = acc;
                }
            }
        }
    }
    return out;
}

namespace {

SequenceLayout layout_in_order(std::span<const std::size_t> order, std::size_t tokens_per_frame,
                               std::size_t separators_per_frame) {
    SequenceLayout layout;
    std::size_t pos = 0;
    for (auto frame : order) {
        for (std::size_t s = 0; s < separators_per_frame; ++s) {
            layout.separator_positions.push_back(pos++);
        }
        layout.frames.push_back({frame, pos, tokens_per_frame});
        pos += tokens_per_frame;
    }
    layout.total_len = pos;
    return layout;
}

} // namespace

SequenceLayout concat_layout(std::size_t n_frames, std::size_t tokens_per_frame, std::size_t separators_per_frame) {
    std::vector<std::size_t> order(n_frames);
    std::iota(order.begin(), order.end(), std::size_t{0});
    return layout_in_order(order, tokens_per_frame, separators_per_frame);
}

SequenceLayout concat_layout(std::span<const double> timestamps, std::size_t tokens_per_frame,
                             std::size_t separators_per_frame) {
    std::vector<std::size_t> order(timestamps.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return timestamps[a] < timestamps[b]; });
    return layout_in_order(order, tokens_per_frame, separators_per_frame);
}

std::string_view to_string(BudgetTerm term) {
    switch (term) {
    case BudgetTerm::frames:
        return "frames";
    case BudgetTerm::visual:
        return "visual";
    case BudgetTerm::total:
        return "total";
    }
    return "total";
}

BudgetDecision token_budget(const StageConfig& cfg, int n_frames, std::int64_t text_tokens) {
    BudgetDecision d;
    const auto stride = cfg.patchify_stride.product();
    d.account.visual_tokens = std::int64_t{n_frames} * cfg.vit_tokens_per_frame / stride;
    d.account.separator_tokens = std::int64_t{n_frames} * cfg.separator_tokens_per_frame;
    d.account.text_tokens = text_tokens;
    d.account.total = d.account.visual_tokens + d.account.separator_tokens + d.account.text_tokens;
    if (n_frames > cfg.max_frames) {
        d.rejection = BudgetRejection{BudgetTerm::frames, n_frames, cfg.max_frames};
    } else if (d.account.visual_tokens > cfg.llm_budget_tokens) {
        d.rejection = BudgetRejection{BudgetTerm::visual, d.account.visual_tokens, cfg.llm_budget_tokens};
    } else if (d.account.total > cfg.llm_budget_tokens) {
        d.rejection = BudgetRejection{BudgetTerm::total, d.account.total, cfg.llm_budget_tokens};
    }
    return d;
}

std::int64_t estimate_text_tokens(std::string_view text) {
    std::int64_t count = 0;
    bool in_word = false;
    for (char32_t cp : utf8::decode(text)) {
        const bool ascii_alnum = cp < 0x80 && std::isalnum(static_cast<int>(cp));
        const bool space = cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == 0x3000;
        if (ascii_alnum) {
            if (!in_word) {
                ++count;
                in_word = true;
            }
            continue;
        }
        in_word = false;
        if (!space) {
            ++count;
        }
    }
    return count;
}

} // namespace vidcurate
