#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vidcurate/captions.hpp"
#include "vidcurate/config.hpp"
#include "vidcurate/corpus.hpp"
#include "vidcurate/errors.hpp"
#include "vidcurate/packer.hpp"
#include "vidcurate/sampler.hpp"

namespace vidcurate {

struct StageReport {
    std::string name;
    std::size_t input = 0;
    std::size_t kept = 0;
    std::size_t dropped = 0;
    std::vector<std::pair<std::string, std::int64_t>> counters;
    double seconds = 0;

    void count(std::string key, std::int64_t value) { counters.emplace_back(std::move(key), value); }
};

struct StageResult {
    Partition records;
    StageReport report;
};

// Record-level stages. Each returns new records; the input is never modified.

// Drops records with structural violations. Short videos are only counted:
// scene cut and instruction assembly deal with them.
StageResult run_validate(std::span<const VideoRecord> records, const PipelineConfig& cfg);
StageResult run_text_filter(std::span<const VideoRecord> records, const PipelineConfig& cfg);
StageResult run_face_filter(std::span<const VideoRecord> records, const PipelineConfig& cfg);
StageResult run_motion_filter(std::span<const VideoRecord> records, const PipelineConfig& cfg);
// Kept holds one record per clip (id "<id>_c<k>", media_path with a
// "#t=start,end" fragment) unless the video stays whole. `kept`/`dropped` in
// the report count source videos.
StageResult run_scene_cut(std::span<const VideoRecord> records, const PipelineConfig& cfg);
StageResult run_balance(std::span<const VideoRecord> records, const PipelineConfig& cfg);
StageResult run_refine(std::span<const VideoRecord> records, const PipelineConfig& cfg);

// Instruction assembly --------------------------------------------------------

// Raw VQA / conversation item to be turned into an instruction sample.
struct QaItem {
    std::string video_id;
    TaskType task_type = TaskType::oe_vqa;
    Language language = Language::en;
    std::string question;              // mc_vqa, oe_vqa
    std::vector<std::string> options;  // mc_vqa
    std::size_t answer_index = 0;      // mc_vqa
    std::string answer;                // oe_vqa
    std::string prompt;                // single_round, multi_round
    std::string response;              // single_round, multi_round
};

QaItem parse_qa_line(std::string_view line);
std::vector<QaItem> load_qa_items(const std::filesystem::path& path);

struct SampleEntry {
    std::string sample_id;
    InstructionSample sample;
};

struct AssembleResult {
    std::vector<SampleEntry> samples;
    StageReport report;
};

// One caption sample per caption (short_caption for single-sentence captions,
// detailed_description otherwise) plus one sample per QA item. Videos shorter
// than 5 s are excluded along with their QA items.
AssembleResult assemble_instructions(std::span<const VideoRecord> records, const TemplateSet& templates,
                                     std::span<const QaItem> qa_items, std::uint64_t seed);

void write_samples(const std::filesystem::path& path, std::span<const SampleEntry> samples);
std::vector<SampleEntry> load_samples(const std::filesystem::path& path);

// Frame sampling and budgeting -------------------------------------------------

struct BudgetedSample {
    std::string sample_id;
    std::string video_id;
    TaskType task_type = TaskType::short_caption;
    int n_frames = 0;
    std::vector<double> timestamps;
    BudgetDecision budget;
};

// dynamic_frame_count rounded up to a multiple of the temporal patchify stride
// (so the frames condense without padding), never above max_frames.
int aligned_frame_count(double duration_s, const StageConfig& cfg);

struct BudgetResult {
    std::vector<BudgetedSample> entries;
    StageReport report;
};

// Throws DataError when a sample references a video missing from `records`.
BudgetResult budget_samples(std::span<const SampleEntry> samples, std::span<const VideoRecord> records,
                            const StageConfig& stage);

std::string format_budget_line(const BudgetedSample& entry);
void write_budget(const std::filesystem::path& path, std::span<const BudgetedSample> entries);
// Admitted entries as pack items (sample_id, total tokens).
std::vector<std::pair<PackItem, TaskType>> load_budget_items(const std::filesystem::path& path);

struct PackResult {
    PackingPlan plan;
    StageReport report;
};

// FFD packing when the stage packs sequences, one sample per composite
// otherwise. With group_by_task each task type is packed separately and the
// composites are concatenated in task-type order.
PackResult pack_stage(std::span<const std::pair<PackItem, TaskType>> items, const StageConfig& stage,
                      bool group_by_task);

// Whole run -------------------------------------------------------------------

struct RunReport {
    std::vector<StageReport> stages;
    std::vector<LineError> input_errors;
    std::string failed_stage;
    std::string error;
    double utilization = 0;
};

std::string report_to_json(const RunReport& report);
std::string stage_report_to_json(const StageReport& report);

class StageFailure : public std::runtime_error {
public:
    StageFailure(std::string stage, ExitCode code, const std::string& what)
        : std::runtime_error(what), stage_(std::move(stage)), code_(code) {}

    const std::string& stage() const { return stage_; }
    ExitCode code() const { return code_; }

private:
    std::string stage_;
    ExitCode code_;
};

// Runs validate -> text -> face -> motion -> scene cut -> balance -> refine ->
// assemble -> budget -> pack, writing every intermediate manifest into the
// output directory. Work happens in "<output>.partial"; on success it is
// renamed to `output`, on failure to "<output>.quarantine" (with the partial
// report) and StageFailure is thrown. Inputs are never written.
RunReport run_pipeline(const PipelineConfig& cfg);

} // namespace vidcurate
