#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vidcurate {

// Training stage presets -----------------------------------------------------

enum class StageName { image_pt, video_pt, refine, instruct, long_video };

std::string_view to_string(StageName s);
// Throws ConfigError on unknown names.
StageName parse_stage_name(std::string_view s);

struct Stride {
    int t = 1;
    int h = 1;
    int w = 1;

    std::int64_t product() const { return std::int64_t{t} * h * w; }
    bool operator==(const Stride&) const = default;
};

struct StageConfig {
    StageName name = StageName::instruct;
    int resolution = 0;             // pixels per side
    int vit_tokens_per_frame = 0;   // before patchify
    std::int64_t llm_budget_tokens = 0;
    int min_frames = 1;
    int max_frames = 1;
    Stride patchify_stride;
    int separator_tokens_per_frame = 1;
    bool sequence_packing = false;

    bool operator==(const StageConfig&) const = default;
};

// Stage presets. Budgets "10K"/"22K" are read as 10000/22000 tokens.
StageConfig builtin_stage(StageName name);

// Throws ConfigError when min_frames > max_frames, a field is non-positive,
// or one frame's condensed tokens cannot fit the budget.
void check_stage_config(const StageConfig& cfg);

// Frame sampling --------------------------------------------------------------

// Centre of each of n equal bins: t_k = (k + 0.5) * duration_s / n.
std::vector<double> uniform_timestamps(double duration_s, int n);

// One uniformly random timestamp inside each of k equal segments, ascending.
std::vector<double> stratified_timestamps(double duration_s, int k, std::uint64_t seed);

// About one frame per second: clamp(ceil(duration_s), min_frames, max_frames).
int dynamic_frame_count(double duration_s, const StageConfig& cfg);

// Temporal position embedding -------------------------------------------------

struct TPEParams {
    int d = 0;
    double theta = 10000.0;
};

// Throws std::invalid_argument unless d is even and positive and theta > 1.
void check_tpe_params(const TPEParams& p);

// Entry k is sin(t / theta^(k/d)) for even k and cos(t / theta^(k/d)) for
// odd k; the exponent advances by 1/d on every entry.
std::vector<double> tpe(double t, const TPEParams& p);

// Visual tokens, layout [frame][row][col][channel].
struct FeatureGrid {
    int n_frames = 0;
    int h = 0;
    int w = 0;
    int c = 0;
    std::vector<double> values;

    FeatureGrid() = default;
    FeatureGrid(int n, int rows, int cols, int channels, double fill = 0.0);

    std::size_t index(int f, int y, int x, int ch) const {
        return ((static_cast<std::size_t>(f) * h + y) * w + x) * c + ch;
    }
    double& at(int f, int y, int x, int ch) { return values[index(f, y, x, ch)]; }
    double at(int f, int y, int x, int ch) const { return values[index(f, y, x, ch)]; }
    std::size_t token_count() const { return static_cast<std::size_t>(n_frames) * h * w; }
    bool operator==(const FeatureGrid&) const = default;
};

// Adds tpe(timestamps[k]) to every spatial position of frame k.
// Throws std::invalid_argument if p.d != grid.c or the timestamp count is wrong.
FeatureGrid add_tpe(const FeatureGrid& grid, std::span<const double> timestamps, const TPEParams& p);

// Little-endian file: four uint64 dims (n, h, w, c) then n*h*w*c float64 values.
void write_feature_grid(const std::filesystem::path& path, const FeatureGrid& grid);
FeatureGrid read_feature_grid(const std::filesystem::path& path);

// Patchify --------------------------------------------------------------------

// Depthwise kernel, weights laid out [channel][dt][dh][dw].
struct PatchifyKernel {
    Stride size;
    int channels = 0;
    std::vector<double> weights;

    double weight(int ch, int dt, int dh, int dw) const {
        return weights[((static_cast<std::size_t>(ch) * size.t + dt) * size.h + dh) * size.w + dw];
    }
};

// Every weight 1 / (t*h*w): a mean over each window.
PatchifyKernel uniform_kernel(Stride size, int channels);

// Non-overlapping depthwise 3-D convolution (stride == kernel size, no
// padding). Output dims are (n/t, h/sh, w/sw, c). Throws std::invalid_argument
// when a dim is not divisible or the kernel does not match the grid.
FeatureGrid patchify(const FeatureGrid& grid, const PatchifyKernel& kernel);

// Sequence layout -------------------------------------------------------------

struct FrameBlock {
    std::size_t frame_index = 0; // position in the caller's input
    std::size_t start = 0;
    std::size_t length = 0;
};

struct SequenceLayout {
    std::size_t total_len = 0;
    std::vector<std::size_t> separator_positions;
    std::vector<FrameBlock> frames;
};

// [sep..., frame 0 tokens, sep..., frame 1 tokens, ...]: each frame block is
// preceded by its separators.
SequenceLayout concat_layout(std::size_t n_frames, std::size_t tokens_per_frame, std::size_t separators_per_frame);

// Same layout with frames ordered by ascending timestamp regardless of input
// order (ties keep input order).
SequenceLayout concat_layout(std::span<const double> timestamps, std::size_t tokens_per_frame,
                             std::size_t separators_per_frame);

// Token budget ----------------------------------------------------------------

struct TokenAccount {
    std::int64_t visual_tokens = 0;
    std::int64_t separator_tokens = 0;
    std::int64_t text_tokens = 0;
    std::int64_t total = 0;
};

enum class BudgetTerm { frames, visual, total };

std::string_view to_string(BudgetTerm term);

struct BudgetRejection {
    BudgetTerm term;
    std::int64_t value = 0;
    std::int64_t limit = 0;
};

struct BudgetDecision {
    TokenAccount account;
    std::optional<BudgetRejection> rejection;

    bool admitted() const { return !rejection; }
};

// visual = n_frames * vit_tokens_per_frame / stride product; separators =
// n_frames * separator_tokens_per_frame. Admitted iff total <= budget.
// Rejections name the first violated term: frame cap, visual tokens alone,
// then the total.
BudgetDecision token_budget(const StageConfig& cfg, int n_frames, std::int64_t text_tokens);

// Rough tokenizer-free length: one token per ASCII word or number, per ASCII
// punctuation mark, and per non-ASCII non-space character.
std::int64_t estimate_text_tokens(std::string_view text);

} // namespace vidcurate
