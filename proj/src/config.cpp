#include "vidcurate/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "vidcurate/errors.hpp"

namespace vidcurate {

StageConfig PipelineConfig::stage_config() const {
    auto cfg = builtin_stage(stage);
    const auto& o = stage_overrides;
    if (o.llm_budget_tokens) {
        cfg.llm_budget_tokens = *o.llm_budget_tokens;
    }
    if (o.min_frames) {
        cfg.min_frames = *o.min_frames;
    }
    if (o.max_frames) {
        cfg.max_frames = *o.max_frames;
    }
    if (o.patchify_stride) {
        cfg.patchify_stride = *o.patchify_stride;
    }
    if (o.separator_tokens_per_frame) {
        cfg.separator_tokens_per_frame = *o.separator_tokens_per_frame;
    }
    if (o.sequence_packing) {
        cfg.sequence_packing = *o.sequence_packing;
    }
    return cfg;
}

namespace {

using json = nlohmann::json;
using Setter = std::function<void(PipelineConfig&, const json&)>;

template <typename T>
T as(const json& v, const std::string& key) {
    try {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) {
                throw ConfigError("");
            }
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) {
                throw ConfigError("");
            }
            if constexpr (std::is_unsigned_v<T>) {
                if (v.get<std::int64_t>() < 0) {
                    throw ConfigError("");
                }
            }
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) {
                throw ConfigError("");
            }
        } else {
            if (!v.is_string()) {
                throw ConfigError("");
            }
        }
        return v.get<T>();
    } catch (const ConfigError&) {
        throw ConfigError(fmt::format("config key '{}' has the wrong type", key));
    }
}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"stage", [](PipelineConfig& c, const json& v) { c.stage = parse_stage_name(as<std::string>(v, "stage")); }},
        {"input", [](PipelineConfig& c, const json& v) { c.input = as<std::string>(v, "input"); }},
        {"output", [](PipelineConfig& c, const json& v) { c.output = as<std::string>(v, "output"); }},
        {"sidecar_dir", [](PipelineConfig& c, const json& v) { c.sidecar_dir = as<std::string>(v, "sidecar_dir"); }},
        {"frame_dir", [](PipelineConfig& c, const json& v) { c.frame_dir = as<std::string>(v, "frame_dir"); }},
        {"templates", [](PipelineConfig& c, const json& v) { c.templates = as<std::string>(v, "templates"); }},
        {"qa_input", [](PipelineConfig& c, const json& v) { c.qa_input = as<std::string>(v, "qa_input"); }},
        {"max_caption_len",
         [](PipelineConfig& c, const json& v) { c.max_caption_len = as<std::size_t>(v, "max_caption_len"); }},
        {"text_coverage_threshold",
         [](PipelineConfig& c, const json& v) {
             c.text_coverage_threshold = as<double>(v, "text_coverage_threshold");
         }},
        {"face_coverage_threshold",
         [](PipelineConfig& c, const json& v) {
             c.face_coverage_threshold = as<double>(v, "face_coverage_threshold");
         }},
        {"flow_threshold", [](PipelineConfig& c, const json& v) { c.flow_threshold = as<double>(v, "flow_threshold"); }},
        {"flow_alpha", [](PipelineConfig& c, const json& v) { c.flow_alpha = as<double>(v, "flow_alpha"); }},
        {"flow_iterations",
         [](PipelineConfig& c, const json& v) { c.flow_iterations = as<int>(v, "flow_iterations"); }},
        {"static_frames", [](PipelineConfig& c, const json& v) { c.static_frames = as<int>(v, "static_frames"); }},
        {"cut_threshold", [](PipelineConfig& c, const json& v) { c.cut_threshold = as<double>(v, "cut_threshold"); }},
        {"min_clip_s", [](PipelineConfig& c, const json& v) { c.min_clip_s = as<double>(v, "min_clip_s"); }},
        {"max_clip_s", [](PipelineConfig& c, const json& v) { c.max_clip_s = as<double>(v, "max_clip_s"); }},
        {"balance_cap", [](PipelineConfig& c, const json& v) { c.balance_cap = as<double>(v, "balance_cap"); }},
        {"redundancy_threshold",
         [](PipelineConfig& c, const json& v) { c.redundancy_threshold = as<double>(v, "redundancy_threshold"); }},
        {"pack_group_by_task",
         [](PipelineConfig& c, const json& v) { c.pack_group_by_task = as<bool>(v, "pack_group_by_task"); }},
        {"seed", [](PipelineConfig& c, const json& v) { c.seed = as<std::uint64_t>(v, "seed"); }},
        {"jobs", [](PipelineConfig& c, const json& v) { c.jobs = as<unsigned>(v, "jobs"); }},
        {"stage_llm_budget_tokens",
         [](PipelineConfig& c, const json& v) {
             c.stage_overrides.llm_budget_tokens = as<std::int64_t>(v, "stage_llm_budget_tokens");
         }},
        {"stage_min_frames",
         [](PipelineConfig& c, const json& v) { c.stage_overrides.min_frames = as<int>(v, "stage_min_frames"); }},
        {"stage_max_frames",
         [](PipelineConfig& c, const json& v) { c.stage_overrides.max_frames = as<int>(v, "stage_max_frames"); }},
        {"stage_separator_tokens_per_frame",
         [](PipelineConfig& c, const json& v) {
             c.stage_overrides.separator_tokens_per_frame = as<int>(v, "stage_separator_tokens_per_frame");
         }},
        {"stage_sequence_packing",
         [](PipelineConfig& c, const json& v) {
             c.stage_overrides.sequence_packing = as<bool>(v, "stage_sequence_packing");
         }},
        {"stage_patchify_stride",
         [](PipelineConfig& c, const json& v) {
             if (!v.is_array() || v.size() != 3) {
                 throw ConfigError("config key 'stage_patchify_stride' must be [t, h, w]");
             }
             c.stage_overrides.patchify_stride = Stride{as<int>(v[0], "stage_patchify_stride"),
                                                        as<int>(v[1], "stage_patchify_stride"),
                                                        as<int>(v[2], "stage_patchify_stride")};
         }},
    };
    return table;
}

} // namespace

PipelineConfig parse_config(std::string_view contents) {
    json j;
    try {
        j = json::parse(contents);
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
    }
    if (!j.is_object()) {
        throw ConfigError("config must be a flat JSON object");
    }
    PipelineConfig cfg;
    const auto& table = setters();
    for (const auto& [key, value] : j.items()) {
        auto it = table.find(key);
        if (it == table.end()) {
            throw ConfigError(fmt::format("unknown config key '{}'", key));
        }
        it->second(cfg, value);
    }
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError(fmt::format("cannot open config {}", path.string()));
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

void check_config(const PipelineConfig& cfg) {
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(cfg.text_coverage_threshold)) {
        throw ConfigError(fmt::format("text_coverage_threshold {} outside [0, 1]", cfg.text_coverage_threshold));
    }
    if (!in_unit(cfg.face_coverage_threshold)) {
        throw ConfigError(fmt::format("face_coverage_threshold {} outside [0, 1]", cfg.face_coverage_threshold));
    }
    if (!in_unit(cfg.redundancy_threshold)) {
        throw ConfigError(fmt::format("redundancy_threshold {} outside [0, 1]", cfg.redundancy_threshold));
    }
    if (!(cfg.flow_threshold >= 0)) {
        throw ConfigError("flow_threshold must be >= 0");
    }
    if (!(cfg.flow_alpha > 0)) {
        throw ConfigError("flow_alpha must be > 0");
    }
    if (cfg.flow_iterations < 1) {
        throw ConfigError("flow_iterations must be >= 1");
    }
    if (cfg.static_frames < 2) {
        throw ConfigError("static_frames must be >= 2");
    }
    if (!(cfg.cut_threshold >= 0)) {
        throw ConfigError("cut_threshold must be >= 0");
    }
    if (!(cfg.min_clip_s >= 0) || !(cfg.min_clip_s < cfg.max_clip_s)) {
        throw ConfigError(fmt::format("need 0 <= min_clip_s ({}) < max_clip_s ({})", cfg.min_clip_s, cfg.max_clip_s));
    }
    if (!(cfg.balance_cap > 0 && cfg.balance_cap < 1)) {
        throw ConfigError(fmt::format("balance_cap {} outside (0, 1)", cfg.balance_cap));
    }
    if (cfg.max_caption_len < 1) {
        throw ConfigError("max_caption_len must be >= 1");
    }
    if (cfg.jobs < 1) {
        throw ConfigError("jobs must be >= 1");
    }
    check_stage_config(cfg.stage_config());
}

} // namespace vidcurate
