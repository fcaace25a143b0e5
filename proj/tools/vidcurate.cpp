// Command-line front end: one subcommand per stage plus `run` for the whole pipeline.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "vidcurate/balance.hpp"
#include "vidcurate/pipeline.hpp"
#include "vidcurate/rng.hpp"

namespace fs = std::filesystem;
using namespace vidcurate;

namespace {

struct Options {
    std::string config;
    std::string stage;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> jobs;
    std::string input;
    std::string output;
    std::string manifest;
    std::string templates;
    std::string qa;
    std::string sidecars;
    std::string frames;
    bool group_by_task = false;
};

void common_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--config", o.config, "flat JSON config file");
    cmd->add_option("--stage", o.stage, "training stage: image_pt, video_pt, refine, instruct, long_video");
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--jobs", o.jobs, "worker threads inside a stage")->check(CLI::PositiveNumber);
    cmd->add_option("--input", o.input, "input file")->required();
    cmd->add_option("--output", o.output, "output file or directory")->required();
}

PipelineConfig make_config(const Options& o) {
    PipelineConfig cfg = o.config.empty() ? PipelineConfig{} : load_config(o.config);
    if (!o.stage.empty()) {
        cfg.stage = parse_stage_name(o.stage);
    }
    if (o.seed) {
        cfg.seed = *o.seed;
    }
    if (o.jobs) {
        cfg.jobs = *o.jobs;
    }
    cfg.input = o.input;
    cfg.output = o.output;
    if (!o.sidecars.empty()) {
        cfg.sidecar_dir = o.sidecars;
    }
    if (!o.frames.empty()) {
        cfg.frame_dir = o.frames;
    }
    if (!o.templates.empty()) {
        cfg.templates = o.templates;
    }
    if (!o.qa.empty()) {
        cfg.qa_input = o.qa;
    }
    if (o.group_by_task) {
        cfg.pack_group_by_task = true;
    }
    check_config(cfg);
    return cfg;
}

fs::path sibling(const fs::path& output, std::string_view suffix) {
    auto stem = output.filename().string();
    if (const auto dot = stem.rfind('.'); dot != std::string::npos && dot > 0) {
        stem.resize(dot);
    }
    return output.parent_path() / (stem + std::string(suffix));
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f || !(f << text)) {
        throw DataError(fmt::format("cannot write {}", path.string()));
    }
}

void refuse_overwrite(const PipelineConfig& cfg) {
    std::error_code ec;
    if (fs::exists(cfg.output) && fs::equivalent(cfg.input, cfg.output, ec)) {
        throw ConfigError("output would overwrite the input");
    }
}

std::vector<VideoRecord> read_records(const fs::path& path, StageReport* errors_into = nullptr) {
    auto load = load_manifest(path);
    for (const auto& e : load.errors) {
        fmt::print(stderr, "{}:{}: skipped: {}\n", path.string(), e.line, e.message);
    }
    if (errors_into != nullptr) {
        errors_into->count("malformed_lines", static_cast<std::int64_t>(load.errors.size()));
    }
    return std::move(load.records);
}

void emit_report(const fs::path& output, const StageReport& report) {
    write_text(sibling(output, ".report.json"), stage_report_to_json(report));
    fmt::print(stderr, "{}: {} in, {} kept, {} dropped ({:.3f} s)\n", report.name, report.input, report.kept,
               report.dropped, report.seconds);
}

using RecordStage = StageResult (*)(std::span<const VideoRecord>, const PipelineConfig&);

void run_record_stage(const Options& o, RecordStage stage) {
    const auto cfg = make_config(o);
    refuse_overwrite(cfg);
    StageReport load_report;
    const auto records = read_records(cfg.input, &load_report);
    auto result = stage(records, cfg);
    for (auto& c : load_report.counters) {
        result.report.counters.push_back(std::move(c));
    }
    write_manifest(cfg.output, result.records.kept);
    write_manifest(sibling(cfg.output, ".dropped.jsonl"), result.records.dropped);
    emit_report(cfg.output, result.report);
}

void run_assemble(const Options& o) {
    const auto cfg = make_config(o);
    refuse_overwrite(cfg);
    const auto records = read_records(cfg.input);
    const auto templates = cfg.templates.empty() ? default_template_set() : load_template_set(cfg.templates);
    const auto qa = cfg.qa_input.empty() ? std::vector<QaItem>{} : load_qa_items(cfg.qa_input);
    const auto result = assemble_instructions(records, templates, qa, cfg.seed);
    write_samples(cfg.output, result.samples);
    emit_report(cfg.output, result.report);
}

void run_sample_frames(const Options& o, bool stratified) {
    const auto cfg = make_config(o);
    refuse_overwrite(cfg);
    const auto stage = cfg.stage_config();
    const auto records = read_records(cfg.input);
    std::string out;
    for (const auto& r : records) {
        const int n = aligned_frame_count(r.duration_s, stage);
        const auto ts = stratified ? stratified_timestamps(r.duration_s, n, derive_seed(cfg.seed, r.id))
                                   : uniform_timestamps(r.duration_s, n);
        nlohmann::ordered_json j;
        j["id"] = r.id;
        j["n_frames"] = n;
        j["timestamps"] = ts;
        out += j.dump();
        out += '\n';
    }
    write_text(cfg.output, out);
}

void run_budget(const Options& o) {
    const auto cfg = make_config(o);
    refuse_overwrite(cfg);
    const auto samples = load_samples(cfg.input);
    const auto records = read_records(o.manifest);
    const auto result = budget_samples(samples, records, cfg.stage_config());
    write_budget(cfg.output, result.entries);
    emit_report(cfg.output, result.report);
}

void run_pack(const Options& o) {
    const auto cfg = make_config(o);
    refuse_overwrite(cfg);
    const auto items = load_budget_items(cfg.input);
    const auto result = pack_stage(items, cfg.stage_config(), cfg.pack_group_by_task);
    write_plan(cfg.output, result.plan);
    emit_report(cfg.output, result.report);
    fmt::print(stderr, "utilization {:.4f}\n", utilization(result.plan));
}

void run_stats(const Options& o) {
    const auto cfg = make_config(o);
    refuse_overwrite(cfg);
    const auto records = read_records(cfg.input);
    const auto stats = dataset_report(records);
    write_text(cfg.output, report_to_json(stats));
    write_text(sibling(cfg.output, ".csv"), report_to_table(stats));
}

void run_all(const Options& o) {
    const auto cfg = make_config(o);
    const auto report = run_pipeline(cfg);
    for (const auto& s : report.stages) {
        fmt::print(stderr, "{}: {} in, {} kept, {} dropped ({:.3f} s)\n", s.name, s.input, s.kept, s.dropped,
                   s.seconds);
    }
    fmt::print(stderr, "utilization {:.4f}\n", report.utilization);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Video corpus curation and training batch preparation"};
    app.require_subcommand(1);
    Options o;
    std::function<void()> action;

    auto add = [&](const char* name, const char* help, std::function<void()> fn) {
        auto* cmd = app.add_subcommand(name, help);
        common_flags(cmd, o);
        cmd->callback([&action, fn] { action = fn; });
        return cmd;
    };

    add("filter-text", "drop videos with heavy on-screen text", [&] { run_record_stage(o, run_text_filter); })
        ->add_option("--sidecars", o.sidecars, "detection sidecar directory");
    add("filter-face", "drop videos dominated by faces", [&] { run_record_stage(o, run_face_filter); })
        ->add_option("--sidecars", o.sidecars, "detection sidecar directory");
    add("filter-motion", "drop static videos", [&] { run_record_stage(o, run_motion_filter); })
        ->add_option("--frames", o.frames, "frame directory (<dir>/<id>/*.pgm)");
    add("scene-cut", "split videos into clips at scene cuts", [&] { run_record_stage(o, run_scene_cut); })
        ->add_option("--frames", o.frames, "frame directory (<dir>/<id>/*.pgm)");
    add("balance", "downsample over-represented categories", [&] { run_record_stage(o, run_balance); });
    add("refine-captions", "drop videos with redundant captions", [&] { run_record_stage(o, run_refine); });

    auto* assemble = add("assemble-instructions", "build instruction samples", [&] { run_assemble(o); });
    assemble->add_option("--templates", o.templates, "template set JSON");
    assemble->add_option("--qa", o.qa, "QA items (JSONL)");

    bool stratified = false;
    add("sample-frames", "frame timestamps per video", [&] { run_sample_frames(o, stratified); })
        ->add_flag("--stratified", stratified, "seeded jitter inside each interval");
    add("budget", "frame counts and token budgets per sample", [&] { run_budget(o); })
        ->add_option("--manifest", o.manifest, "curated manifest the samples refer to")
        ->required();
    add("pack", "pack admitted samples into composite sequences", [&] { run_pack(o); })
        ->add_flag("--group-by-task", o.group_by_task, "pack each task type separately");
    add("report", "category and duration statistics", [&] { run_stats(o); });

    auto* run = add("run", "full pipeline into an output directory", [&] { run_all(o); });
    run->add_option("--sidecars", o.sidecars, "detection sidecar directory");
    run->add_option("--frames", o.frames, "frame directory");
    run->add_option("--templates", o.templates, "template set JSON");
    run->add_option("--qa", o.qa, "QA items (JSONL)");
    run->add_flag("--group-by-task", o.group_by_task, "pack each task type separately");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ExitCode::config_error);
    }

    try {
        action();
    } catch (const StageFailure& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return static_cast<int>(e.code());
    } catch (const ConfigError& e) {
        fmt::print(stderr, "config error: {}\n", e.what());
        return static_cast<int>(ExitCode::config_error);
    } catch (const DataError& e) {
        fmt::print(stderr, "data error: {}\n", e.what());
        return static_cast<int>(ExitCode::data_error);
    } catch (const std::exception& e) {
        fmt::print(stderr, "internal error: {}\n", e.what());
        return static_cast<int>(ExitCode::internal_error);
    }
    return static_cast<int>(ExitCode::ok);
}
