#include "vidcurate/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <unordered_map>

#include <fmt/format.h>
#include <json.hpp>

#include "vidcurate/balance.hpp"
#include "vidcurate/coverage.hpp"
#include "vidcurate/motion.hpp"
#include "vidcurate/parallel.hpp"
#include "vidcurate/pgm.hpp"
#include "vidcurate/rng.hpp"

namespace vidcurate {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void finish(StageResult& result, std::size_t input, const Stopwatch& watch) {
    result.report.input = input;
    result.report.kept = result.records.kept.size();
    result.report.dropped = result.records.dropped.size();
    result.report.seconds = watch.seconds();
}

// Applies a per-record decision in parallel; order of the output follows the input.
template <typename DecideFn>
StageResult decide_each(std::string name, std::span<const VideoRecord> records, std::string_view filter,
                        unsigned jobs, DecideFn&& decide) {
    Stopwatch watch;
    std::vector<Decision> decisions(records.size());
    parallel_for(records.size(), jobs, [&](std::size_t i) { decisions[i] = decide(records[i]); });

    StageResult result;
    result.report.name = std::move(name);
    std::int64_t flagged = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto copy = records[i];
        if (!decisions[i].flag.empty()) {
            ++flagged;
        }
        const bool dropped = decisions[i].dropped();
        copy.filter_status[std::string(filter)] = std::move(decisions[i]);
        (dropped ? result.records.dropped : result.records.kept).push_back(std::move(copy));
    }
    result.report.count("flagged", flagged);
    finish(result, records.size(), watch);
    return result;
}

Decision coverage_decision(const VideoRecord& record, const PipelineConfig& cfg, bool text) {
    std::optional<DetectionSidecar> sidecar;
    try {
        sidecar = find_sidecar(cfg.sidecar_dir, record.id);
    } catch (const DataError& e) {
        return Decision{Verdict::kept, 0.0, fmt::format("unfilterable: {}", e.what())};
    }
    const DetectionSidecar* ptr = sidecar ? &*sidecar : nullptr;
    const auto result = text ? text_coverage(record, ptr, cfg.text_coverage_threshold)
                             : face_coverage(record, ptr, cfg.face_coverage_threshold);
    return result.to_decision();
}

// `count` frames spread evenly over the available ones (all of them if fewer).
std::vector<FrameFile> pick_uniform(const std::vector<FrameFile>& frames, std::size_t count) {
    if (frames.size() <= count) {
        return frames;
    }
    std::vector<FrameFile> picked;
    for (std::size_t k = 0; k < count; ++k) {
        const auto idx = static_cast<std::size_t>((k + 0.5) * static_cast<double>(frames.size()) / count);
        picked.push_back(frames[std::min(idx, frames.size() - 1)]);
    }
    return picked;
}

std::vector<GrayFrame> load_flow_frames(const std::vector<FrameFile>& files) {
    std::vector<GrayFrame> frames;
    frames.reserve(files.size());
    for (const auto& f : files) {
        frames.push_back(downscale(read_pgm(f.path), flow_resolution, flow_resolution));
    }
    return frames;
}

std::string clip_fragment(const std::string& media_path, const ClipSpan& span) {
    return fmt::format("{}#t={:.3f},{:.3f}", media_path, span.start_s, span.end_s);
}

} // namespace

StageResult run_validate(std::span<const VideoRecord> records, const PipelineConfig& cfg) {
    Stopwatch watch;
    StageResult result;
    result.report.name = "validate";
    std::int64_t short_videos = 0;
    for (const auto& r : records) {
        const auto report = validate_record(r, cfg.max_caption_len);
        const bool fatal = std::any_of(report.violations.begin(), report.violations.end(),
                                       [](const Violation& v) { return v.kind != ViolationKind::short_video; });
        if (report.has(ViolationKind::short_video)) {
            ++short_videos;
        }
        (fatal ? result.records.dropped : result.records.kept).push_back(r);
    }
    result.report.count("short_videos", short_videos);
    finish(result, records.size(), watch);
    return result;
}

StageResult run_text_filter(std::span<const VideoRecord> records, const PipelineConfig& cfg) {
    return decide_each("filter-text", records, filter_names::text_coverage, cfg.jobs,
                       [&](const VideoRecord& r) { return coverage_decision(r, cfg, true); });
}

StageResult run_face_filter(std::span<const VideoRecord> records, const PipelineConfig& cfg) {
    return decide_each("filter-face", records, filter_names::face_coverage, cfg.jobs,
                       [&](const VideoRecord& r) { return coverage_decision(r, cfg, false); });
}

StageResult run_motion_filter(std::span<const VideoRecord> records, const PipelineConfig& cfg) {
    return decide_each("filter-motion", records, filter_names::static_scene, cfg.jobs, [&](const VideoRecord& r) {
        const auto dir = cfg.frame_dir.empty() ? fs::path() : cfg.frame_dir / r.id;
        const auto files = pick_uniform(list_frames(dir), static_cast<std::size_t>(cfg.static_frames));
        const auto frames = load_flow_frames(files);
        return static_scene_decision(frames, cfg.flow_threshold, cfg.flow_alpha, cfg.flow_iterations);
    });
}

StageResult run_scene_cut(std::span<const VideoRecord> records, const PipelineConfig& cfg) {
    Stopwatch watch;
    std::vector<std::vector<ClipSpan>> spans(records.size());
    parallel_for(records.size(), cfg.jobs, [&](std::size_t i) {
        const auto& r = records[i];
        const auto dir = cfg.frame_dir.empty() ? fs::path() : cfg.frame_dir / r.id;
        const auto files = list_frames(dir);
        std::vector<double> cuts;
        if (files.size() >= 2) {
            std::vector<double> timestamps;
            for (const auto& f : files) {
                timestamps.push_back(f.timestamp_s);
            }
            cuts = detect_scene_cuts(load_flow_frames(files), timestamps, cfg.cut_threshold);
        }
        spans[i] = segment_clips(r.duration_s, cuts, cfg.min_clip_s, cfg.max_clip_s);
    });

    StageResult result;
    result.report.name = "scene-cut";
    std::int64_t clips = 0;
    std::int64_t split = 0;
    const auto key = std::string(filter_names::scene_cut);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const auto& pieces = spans[i];
        const auto n = static_cast<double>(pieces.size());
        if (pieces.empty()) {
            auto copy = r;
            copy.filter_status[key] = Decision{Verdict::dropped, 0.0, {}};
            result.records.dropped.push_back(std::move(copy));
            continue;
        }
        clips += static_cast<std::int64_t>(pieces.size());
        if (pieces.size() == 1 && pieces[0].start_s == 0.0 && pieces[0].end_s == r.duration_s) {
            auto copy = r;
            copy.filter_status[key] = Decision{Verdict::kept, n, {}};
            result.records.kept.push_back(std::move(copy));
            continue;
        }
        ++split;
        for (std::size_t k = 0; k < pieces.size(); ++k) {
            auto clip = r;
            clip.id = fmt::format("{}_c{}", r.id, k);
            clip.media_path = clip_fragment(r.media_path, pieces[k]);
            clip.duration_s = pieces[k].length();
            clip.filter_status[key] = Decision{Verdict::kept, n, {}};
            result.records.kept.push_back(std::move(clip));
        }
    }
    result.report.input = records.size();
    result.report.dropped = result.records.dropped.size();
    result.report.kept = records.size() - result.report.dropped;
    result.report.count("clips_out", clips);
    result.report.count("videos_split", split);
    result.report.seconds = watch.seconds();
    return result;
}

StageResult run_balance(std::span<const VideoRecord> records, const PipelineConfig& cfg) {
    Stopwatch watch;
    auto balanced = balance_categories(records, cfg.balance_cap, cfg.seed);
    const auto total = static_cast<double>(std::max<std::size_t>(records.size(), 1));
    const auto key = std::string(filter_names::category_balance);
    auto annotate = [&](std::vector<VideoRecord>& list, Verdict verdict) {
        for (auto& r : list) {
            const auto cat = r.category.empty() ? std::string(unknown_category) : r.category;
            r.filter_status[key] = Decision{verdict, static_cast<double>(balanced.original.at(cat)) / total, {}};
        }
    };
    annotate(balanced.kept, Verdict::kept);
    annotate(balanced.dropped, Verdict::dropped);

    StageResult result;
    result.report.name = "balance";
    result.records.kept = std::move(balanced.kept);
    result.records.dropped = std::move(balanced.dropped);
    std::int64_t capped = 0;
    for (const auto& [cat, n] : balanced.original) {
        if (balanced.target.at(cat) < n) {
            ++capped;
        }
    }
    result.report.count("categories_capped", capped);
    result.report.count("categories_zeroed", static_cast<std::int64_t>(balanced.zeroed.size()));
    finish(result, records.size(), watch);
    return result;
}

StageResult run_refine(std::span<const VideoRecord> records, const PipelineConfig& cfg) {
    return decide_each("refine-captions", records, filter_names::caption_redundancy, cfg.jobs,
                       [&](const VideoRecord& r) {
                           const double score = record_redundancy(r);
                           return Decision{score > cfg.redundancy_threshold ? Verdict::dropped : Verdict::kept,
                                           score,
                                           {}};
                       });
}

QaItem parse_qa_line(std::string_view line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(fmt::format("invalid QA JSON: {}", e.what()));
    }
    QaItem item;
    try {
        item.video_id = j.at("video_id").get<std::string>();
        item.task_type = parse_task_type(j.at("task_type").get<std::string>());
        item.language = parse_language(j.value("language", std::string("en")));
        switch (item.task_type) {
        case TaskType::mc_vqa:
            item.question = j.at("question").get<std::string>();
            item.options = j.at("options").get<std::vector<std::string>>();
            item.answer_index = j.at("answer_index").get<std::size_t>();
            break;
        case TaskType::oe_vqa:
            item.question = j.at("question").get<std::string>();
            item.answer = j.at("answer").get<std::string>();
            break;
        case TaskType::single_round:
        case TaskType::multi_round:
            item.prompt = j.at("prompt").get<std::string>();
            item.response = j.at("response").get<std::string>();
            if (item.prompt.empty()) {
                throw DataError("conversation prompt is empty");
            }
            break;
        default:
            throw DataError(fmt::format("task type '{}' is built from captions, not QA items",
                                        to_string(item.task_type)));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(fmt::format("malformed QA item: {}", e.what()));
    }
    return item;
}

std::vector<QaItem> load_qa_items(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError(fmt::format("cannot open {}", path.string()));
    }
    std::vector<QaItem> items;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            items.push_back(parse_qa_line(line));
        } catch (const DataError& e) {
            throw DataError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
        }
    }
    return items;
}

AssembleResult assemble_instructions(std::span<const VideoRecord> records, const TemplateSet& templates,
                                     std::span<const QaItem> qa_items, std::uint64_t seed) {
    Stopwatch watch;
    AssembleResult result;
    result.report.name = "assemble-instructions";
    result.report.input = records.size();

    std::unordered_map<std::string, std::size_t> eligible; // video id -> samples emitted so far
    std::vector<std::string> order;
    for (const auto& r : records) {
        if (r.duration_s < min_video_duration_s) {
            ++result.report.dropped;
            continue;
        }
        ++result.report.kept;
        eligible.emplace(r.id, 0);
        order.push_back(r.id);
    }
    auto next_id = [&](const std::string& video_id) {
        auto& n = eligible.at(video_id);
        return fmt::format("{}/{}", video_id, n++);
    };
    std::int64_t caption_samples = 0;
    for (const auto& r : records) {
        if (!eligible.contains(r.id)) {
            continue;
        }
        for (const auto& c : r.captions) {
            const auto task = split_sentences(c.text, c.language).size() <= 1 ? TaskType::short_caption
                                                                              : TaskType::detailed_description;
            auto sample_id = next_id(r.id);
            auto sample = caption_to_qa(c, task, templates, derive_seed(seed, sample_id), r.id);
            result.samples.push_back({std::move(sample_id), std::move(sample)});
            ++caption_samples;
        }
    }
    std::int64_t qa_samples = 0;
    std::int64_t qa_excluded = 0;
    for (const auto& item : qa_items) {
        if (!eligible.contains(item.video_id)) {
            ++qa_excluded;
            continue;
        }
        auto sample_id = next_id(item.video_id);
        InstructionSample sample;
        switch (item.task_type) {
        case TaskType::mc_vqa:
            sample = mc_template(item.question, item.options, item.answer_index);
            break;
        case TaskType::oe_vqa:
            sample = vqa_to_qa(item.question, item.answer, templates, derive_seed(seed, sample_id), item.video_id,
                               item.language);
            break;
        default:
            sample.task_type = item.task_type;
            sample.prompt = item.prompt;
            sample.response = item.response;
            break;
        }
        sample.video_id = item.video_id;
        sample.language = item.language;
        result.samples.push_back({std::move(sample_id), std::move(sample)});
        ++qa_samples;
    }
    result.report.count("caption_samples", caption_samples);
    result.report.count("qa_samples", qa_samples);
    result.report.count("qa_excluded", qa_excluded);
    result.report.seconds = watch.seconds();
    return result;
}

void write_samples(const fs::path& path, std::span<const SampleEntry> samples) {
    std::string out;
    for (const auto& s : samples) {
        out += format_sample_line(s.sample, s.sample_id);
        out += '\n';
    }
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f || !(f << out)) {
        throw DataError(fmt::format("cannot write {}", path.string()));
    }
}

std::vector<SampleEntry> load_samples(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError(fmt::format("cannot open {}", path.string()));
    }
    std::vector<SampleEntry> samples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        SampleEntry entry;
        try {
            entry.sample = parse_sample_line(line, &entry.sample_id);
        } catch (const DataError& e) {
            throw DataError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
        }
        if (entry.sample_id.empty()) {
            entry.sample_id = fmt::format("{}/{}", entry.sample.video_id, line_no);
        }
        samples.push_back(std::move(entry));
    }
    return samples;
}

int aligned_frame_count(double duration_s, const StageConfig& cfg) {
    const int n = dynamic_frame_count(duration_s, cfg);
    const int t = cfg.patchify_stride.t;
    const int up = (n + t - 1) / t * t;
    if (up <= cfg.max_frames) {
        return up;
    }
    return std::max(t, cfg.max_frames / t * t);
}

BudgetResult budget_samples(std::span<const SampleEntry> samples, std::span<const VideoRecord> records,
                            const StageConfig& stage) {
    Stopwatch watch;
    std::unordered_map<std::string, double> durations;
    for (const auto& r : records) {
        durations.emplace(r.id, r.duration_s);
    }
    BudgetResult result;
    result.report.name = "budget";
    result.report.input = samples.size();
    std::int64_t rejected_visual = 0;
    std::int64_t rejected_total = 0;
    for (const auto& s : samples) {
        auto it = durations.find(s.sample.video_id);
        if (it == durations.end()) {
            throw DataError(fmt::format("sample '{}' refers to unknown video '{}'", s.sample_id, s.sample.video_id));
        }
        BudgetedSample entry;
        entry.sample_id = s.sample_id;
        entry.video_id = s.sample.video_id;
        entry.task_type = s.sample.task_type;
        entry.n_frames = aligned_frame_count(it->second, stage);
        entry.timestamps = uniform_timestamps(it->second, entry.n_frames);
        const auto text = estimate_text_tokens(s.sample.prompt) + estimate_text_tokens(s.sample.response);
        entry.budget = token_budget(stage, entry.n_frames, text);
        if (entry.budget.admitted()) {
            ++result.report.kept;
        } else {
            ++result.report.dropped;
            (entry.budget.rejection->term == BudgetTerm::total ? rejected_total : rejected_visual)++;
        }
        result.entries.push_back(std::move(entry));
    }
    result.report.count("rejected_visual_or_frames", rejected_visual);
    result.report.count("rejected_total", rejected_total);
    result.report.seconds = watch.seconds();
    return result;
}

std::string format_budget_line(const BudgetedSample& e) {
    ordered_json j;
    j["sample_id"] = e.sample_id;
    j["video_id"] = e.video_id;
    j["task_type"] = std::string(to_string(e.task_type));
    j["n_frames"] = e.n_frames;
    j["timestamps"] = e.timestamps;
    j["visual_tokens"] = e.budget.account.visual_tokens;
    j["separator_tokens"] = e.budget.account.separator_tokens;
    j["text_tokens"] = e.budget.account.text_tokens;
    j["total"] = e.budget.account.total;
    j["admitted"] = e.budget.admitted();
    if (e.budget.rejection) {
        j["rejected_term"] = std::string(to_string(e.budget.rejection->term));
        j["rejected_value"] = e.budget.rejection->value;
        j["rejected_limit"] = e.budget.rejection->limit;
    }
    return j.dump();
}

void write_budget(const fs::path& path, std::span<const BudgetedSample> entries) {
    std::string out;
    for (const auto& e : entries) {
        out += format_budget_line(e);
        out += '\n';
    }
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f || !(f << out)) {
        throw DataError(fmt::format("cannot write {}", path.string()));
    }
}

std::vector<std::pair<PackItem, TaskType>> load_budget_items(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError(fmt::format("cannot open {}", path.string()));
    }
    std::vector<std::pair<PackItem, TaskType>> items;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            if (!j.at("admitted").get<bool>()) {
                continue;
            }
            items.emplace_back(PackItem{j.at("sample_id").get<std::string>(), j.at("total").get<std::int64_t>()},
                               parse_task_type(j.at("task_type").get<std::string>()));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(fmt::format("{}:{}: malformed budget line: {}", path.string(), line_no, e.what()));
        }
    }
    return items;
}

PackResult pack_stage(std::span<const std::pair<PackItem, TaskType>> items, const StageConfig& stage,
                      bool group_by_task) {
    Stopwatch watch;
    PackResult result;
    result.report.name = "pack";
    result.report.input = items.size();
    result.plan.budget = stage.llm_budget_tokens;
    if (!stage.sequence_packing) {
        for (const auto& [item, _] : items) {
            if (item.length > stage.llm_budget_tokens) {
                throw DataError(fmt::format("sample '{}' exceeds the budget", item.sample_id));
            }
            result.plan.composites.push_back(Composite{{item}});
        }
    } else {
        std::map<TaskType, std::vector<PackItem>> groups;
        for (const auto& [item, task] : items) {
            groups[group_by_task ? task : TaskType::short_caption].push_back(item);
        }
        for (const auto& [_, group] : groups) {
            auto plan = pack_sequences(group, stage.llm_budget_tokens);
            for (auto& c : plan.composites) {
                result.plan.composites.push_back(std::move(c));
            }
        }
    }
    result.report.kept = items.size();
    result.report.count("composites", static_cast<std::int64_t>(result.plan.composites.size()));
    result.report.seconds = watch.seconds();
    return result;
}

std::string stage_report_to_json(const StageReport& r) {
    ordered_json j;
    j["name"] = r.name;
    j["input"] = r.input;
    j["kept"] = r.kept;
    j["dropped"] = r.dropped;
    for (const auto& [key, value] : r.counters) {
        j[key] = value;
    }
    j["seconds"] = r.seconds;
    return j.dump(2) + "\n";
}

std::string report_to_json(const RunReport& report) {
    ordered_json j;
    j["ok"] = report.failed_stage.empty();
    if (!report.failed_stage.empty()) {
        j["failed_stage"] = report.failed_stage;
        j["error"] = report.error;
    }
    j["stages"] = ordered_json::array();
    for (const auto& s : report.stages) {
        j["stages"].push_back(ordered_json::parse(stage_report_to_json(s)));
    }
    j["input_errors"] = ordered_json::array();
    for (const auto& e : report.input_errors) {
        j["input_errors"].push_back({{"line", e.line}, {"message", e.message}});
    }
    j["utilization"] = report.utilization;
    return j.dump(2) + "\n";
}

namespace {

void write_text(const fs::path& path, const std::string& contents) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f || !(f << contents)) {
        throw DataError(fmt::format("cannot write {}", path.string()));
    }
}

bool is_within(const fs::path& child, const fs::path& parent) {
    const auto c = fs::weakly_canonical(child);
    const auto p = fs::weakly_canonical(parent);
    auto [pend, _] = std::mismatch(p.begin(), p.end(), c.begin(), c.end());
    return pend == p.end();
}

ExitCode classify(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) != nullptr) {
        return ExitCode::config_error;
    }
    if (dynamic_cast<const DataError*>(&e) != nullptr) {
        return ExitCode::data_error;
    }
    return ExitCode::internal_error;
}

void check_paths(const PipelineConfig& cfg) {
    if (cfg.input.empty() || !fs::is_regular_file(cfg.input)) {
        throw ConfigError(fmt::format("input manifest '{}' does not exist", cfg.input.string()));
    }
    if (cfg.output.empty()) {
        throw ConfigError("no output directory given");
    }
    if (is_within(cfg.input, cfg.output)) {
        throw ConfigError("the input manifest lies inside the output directory");
    }
    for (const auto& [key, dir] : {std::pair{"sidecar_dir", cfg.sidecar_dir}, std::pair{"frame_dir", cfg.frame_dir}}) {
        if (!dir.empty() && !fs::is_directory(dir)) {
            throw ConfigError(fmt::format("{} '{}' does not exist", key, dir.string()));
        }
    }
    for (const auto& [key, file] : {std::pair{"templates", cfg.templates}, std::pair{"qa_input", cfg.qa_input}}) {
        if (!file.empty() && !fs::is_regular_file(file)) {
            throw ConfigError(fmt::format("{} '{}' does not exist", key, file.string()));
        }
    }
    if (fs::exists(cfg.output) && !fs::is_empty(cfg.output) && !fs::exists(cfg.output / "run_report.json")) {
        throw ConfigError(
            fmt::format("output '{}' exists and is not a previous run directory", cfg.output.string()));
    }
}

} // namespace

RunReport run_pipeline(const PipelineConfig& cfg) {
    check_config(cfg);
    check_paths(cfg);
    const auto stage = cfg.stage_config();

    const fs::path staging = cfg.output.string() + ".partial";
    const fs::path quarantine = cfg.output.string() + ".quarantine";
    fs::remove_all(staging);
    fs::create_directories(staging);

    RunReport report;
    std::string current = "load";
    try {
        auto load = load_manifest(cfg.input);
        report.input_errors = load.errors;
        std::vector<VideoRecord> records = std::move(load.records);

        int step = 0;
        auto record_stage = [&](StageResult result, const char* file) {
            ++step;
            const auto stem = fmt::format("{:02d}_{}", step, file);
            write_manifest(staging / (stem + ".jsonl"), result.records.kept);
            write_manifest(staging / (stem + ".dropped.jsonl"), result.records.dropped);
            report.stages.push_back(std::move(result.report));
            records = std::move(result.records.kept);
        };
        using StageFn = StageResult (*)(std::span<const VideoRecord>, const PipelineConfig&);
        const std::pair<const char*, StageFn> record_stages[] = {
            {"validate", run_validate},   {"filter_text", run_text_filter}, {"filter_face", run_face_filter},
            {"filter_motion", run_motion_filter}, {"scene_cut", run_scene_cut}, {"balance", run_balance},
            {"refine_captions", run_refine},
        };
        for (const auto& [file, fn] : record_stages) {
            current = file;
            record_stage(fn(records, cfg), file);
        }
        write_manifest(staging / "curated.jsonl", records);

        current = "report";
        const auto stats = dataset_report(records);
        write_text(staging / "stats.json", report_to_json(stats));
        write_text(staging / "stats.csv", report_to_table(stats));

        current = "assemble_instructions";
        const auto templates = cfg.templates.empty() ? default_template_set() : load_template_set(cfg.templates);
        const auto qa = cfg.qa_input.empty() ? std::vector<QaItem>{} : load_qa_items(cfg.qa_input);
        auto assembled = assemble_instructions(records, templates, qa, cfg.seed);
        write_samples(staging / "instructions.jsonl", assembled.samples);
        report.stages.push_back(assembled.report);

        current = "budget";
        auto budgeted = budget_samples(assembled.samples, records, stage);
        write_budget(staging / "budget.jsonl", budgeted.entries);
        report.stages.push_back(budgeted.report);

        current = "pack";
        std::vector<std::pair<PackItem, TaskType>> items;
        for (const auto& e : budgeted.entries) {
            if (e.budget.admitted()) {
                items.emplace_back(PackItem{e.sample_id, e.budget.account.total}, e.task_type);
            }
        }
        auto packed = pack_stage(items, stage, cfg.pack_group_by_task);
        write_plan(staging / "plan.jsonl", packed.plan);
        report.utilization = utilization(packed.plan);
        report.stages.push_back(packed.report);

        write_text(staging / "run_report.json", report_to_json(report));
        fs::remove_all(cfg.output);
        fs::rename(staging, cfg.output);
    } catch (const std::exception& e) {
        report.failed_stage = current;
        report.error = e.what();
        std::error_code ec;
        write_text(staging / "run_report.json", report_to_json(report));
        fs::remove_all(quarantine, ec);
        fs::rename(staging, quarantine, ec);
        throw StageFailure(current, classify(e), fmt::format("stage {} failed: {}", current, e.what()));
    }
    return report;
}

} // namespace vidcurate
