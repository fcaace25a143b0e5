#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>

#include "vidcurate/sampler.hpp"

namespace vidcurate {

// Per-field replacements for the selected stage preset.
struct StageOverrides {
    std::optional<std::int64_t> llm_budget_tokens;
    std::optional<int> min_frames;
    std::optional<int> max_frames;
    std::optional<Stride> patchify_stride;
    std::optional<int> separator_tokens_per_frame;
    std::optional<bool> sequence_packing;
};

// Settings for every pipeline stage. The config file is one flat JSON object
// whose keys are the member names below (stage overrides use the stage_
// prefix); unknown keys are rejected so a misspelt threshold cannot pass
// silently. Thresholds without a published value carry engineering defaults.
struct PipelineConfig {
    StageName stage = StageName::instruct;
    StageOverrides stage_overrides;

    std::filesystem::path input;
    std::filesystem::path output;
    std::filesystem::path sidecar_dir;
    std::filesystem::path frame_dir;
    std::filesystem::path templates;
    std::filesystem::path qa_input;

    std::size_t max_caption_len = 2000;
    double text_coverage_threshold = 0.30;
    double face_coverage_threshold = 0.50;
    double flow_threshold = 0.05;
    double flow_alpha = 1.0;
    int flow_iterations = 200;
    int static_frames = 5;
    double cut_threshold = 0.30;
    double min_clip_s = 5.0;
    double max_clip_s = 60.0;
    double balance_cap = 0.01;
    double redundancy_threshold = 0.5;
    bool pack_group_by_task = false;

    std::uint64_t seed = 0;
    unsigned jobs = 1;

    // Preset for `stage` with stage_overrides applied.
    StageConfig stage_config() const;
};

// Parses the flat JSON config. Throws ConfigError on unknown keys or wrong types.
PipelineConfig parse_config(std::string_view contents);
PipelineConfig load_config(const std::filesystem::path& path);

// Range checks on thresholds and the stage preset. Throws ConfigError.
void check_config(const PipelineConfig& cfg);

} // namespace vidcurate
