#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vidcurate/corpus.hpp"

namespace vidcurate {

// Splits on . ! ? and their full-width forms 。！？, trimming whitespace and
// dropping empty pieces. Text without a terminal is one sentence.
std::vector<std::string> split_sentences(std::string_view text, Language language);

// Fills caption.sentences from caption.text.
void fill_sentences(Caption& caption);

// Turns one sentence into the word set used for sentence similarity.
class WordSegmenter {
public:
    virtual ~WordSegmenter() = default;
    virtual std::set<std::string> words(std::string_view sentence) const = 0;
};

// Lower-cased ASCII tokens split on whitespace and ASCII punctuation.
class WhitespaceSegmenter final : public WordSegmenter {
public:
    std::set<std::string> words(std::string_view sentence) const override;
};

// Overlapping character bigrams within each run of non-punctuation,
// non-space characters; a run of one character yields that character.
// Stands in for a lexicon-based Chinese segmenter.
class BigramSegmenter final : public WordSegmenter {
public:
    std::set<std::string> words(std::string_view sentence) const override;
};

const WordSegmenter& default_segmenter(Language language);

std::set<std::string> word_set(std::string_view sentence, Language language);

struct SentenceSet {
    std::string sentence_text;
    std::set<std::string> words;
};

SentenceSet make_sentence_set(std::string sentence, Language language);

struct PairIou {
    double value = 0.0;
    // Both word sets were empty; value is defined as 0.
    bool degenerate = false;
};

// |a ∩ b| / |a ∪ b|.
PairIou sentence_pair_iou(const SentenceSet& a, const SentenceSet& b);

// Max pairwise IoU over all sentence pairs; 0 for fewer than two sentences.
double caption_redundancy(const Caption& caption, Language language);
double caption_redundancy(const Caption& caption, const WordSegmenter& segmenter);

// Record-level score: max caption_redundancy over its captions, each
// segmented by its own language.
double record_redundancy(const VideoRecord& record);

// Drops records whose redundancy strictly exceeds `threshold` and records
// the decision under filter_status["caption_redundancy"].
Partition refine_captions(std::span<const VideoRecord> records, double threshold);

// Instruction samples ------------------------------------------------------

enum class TaskType { short_caption, detailed_description, mc_vqa, oe_vqa, single_round, multi_round };

std::string_view to_string(TaskType t);
// Throws DataError for unknown names.
TaskType parse_task_type(std::string_view s);

struct InstructionSample {
    TaskType task_type = TaskType::short_caption;
    std::string prompt;
    std::string response;
    std::string video_id;
    Language language = Language::en;

    bool operator==(const InstructionSample&) const = default;
};

// A non-empty sample_id is written as an extra leading "sample_id" field.
std::string format_sample_line(const InstructionSample& sample, std::string_view sample_id = {});
// Throws DataError on malformed lines. Stores the optional sample_id field if asked.
InstructionSample parse_sample_line(std::string_view line, std::string* sample_id = nullptr);

using TemplateSet = std::map<TaskType, std::vector<std::string>>;

// JSON object: task type name -> array of template strings.
TemplateSet parse_template_set(std::string_view contents);
TemplateSet load_template_set(const std::filesystem::path& path);
const TemplateSet& default_template_set();

// Prompt is a seeded choice among templates[task_type]; response is the
// caption text. Only caption task types are accepted (std::invalid_argument
// otherwise); a task type without templates throws DataError.
InstructionSample caption_to_qa(const Caption& caption, TaskType task_type, const TemplateSet& templates,
                                std::uint64_t seed, std::string_view video_id = {});

// Open-ended VQA: a seeded template with "{question}" replaced.
InstructionSample vqa_to_qa(std::string_view question, std::string_view answer, const TemplateSet& templates,
                            std::uint64_t seed, std::string_view video_id = {}, Language language = Language::en);

// Multiple-choice prompt: the question, options labelled (A), (B), ... one
// per line, then an answer directive. Response is the correct letter.
// Throws std::invalid_argument unless 2 <= options <= 26 and the index is in range.
InstructionSample mc_template(std::string_view question, std::span<const std::string> options,
                              std::size_t answer_index);

inline constexpr std::string_view mc_answer_directive = "Answer with the option's letter from the given choices directly.";

} // namespace vidcurate
