#include "vidcurate/captions.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

#include "vidcurate/errors.hpp"
#include "vidcurate/rng.hpp"
#include "vidcurate/utf8.hpp"

namespace vidcurate {

namespace {

bool is_terminal(char32_t cp) {
    return cp == U'.' || cp == U'!' || cp == U'?' || cp == U'。' || cp == U'！' || cp == U'？';
}

bool is_space(char32_t cp) {
    return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\v' || cp == U'\f' || cp == 0x3000 ||
           cp == 0x00A0;
}

bool is_ascii_punct(char32_t cp) {
    return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) || (cp >= 0x5B && cp <= 0x60) ||
           (cp >= 0x7B && cp <= 0x7E);
}

bool is_wide_punct(char32_t cp) {
    return (cp >= 0x2000 && cp <= 0x206F)     // general punctuation
           || (cp >= 0x3000 && cp <= 0x303F)  // CJK symbols and punctuation
           || (cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) || (cp >= 0xFF3B && cp <= 0xFF40) ||
           (cp >= 0xFF5B && cp <= 0xFF65);
}

std::string trim(const std::vector<char32_t>& cps, std::size_t begin, std::size_t end) {
    while (begin < end && is_space(cps[begin])) {
        ++begin;
    }
    while (end > begin && is_space(cps[end - 1])) {
        --end;
    }
    return utf8::encode(std::vector<char32_t>(cps.begin() + static_cast<std::ptrdiff_t>(begin),
                                              cps.begin() + static_cast<std::ptrdiff_t>(end)));
}

const std::vector<std::string>& templates_for(const TemplateSet& templates, TaskType task_type) {
    auto it = templates.find(task_type);
    if (it == templates.end() || it->second.empty()) {
        throw DataError(fmt::format("no templates for task type '{}'", to_string(task_type)));
    }
    return it->second;
}

const std::string& pick(const std::vector<std::string>& options, std::uint64_t seed) {
    Engine eng(seed);
    return options[uniform_index(eng, options.size())];
}

std::string substitute_question(std::string_view tmpl, std::string_view question) {
    constexpr std::string_view placeholder = "{question}";
    std::string out;
    std::size_t pos = 0;
    while (true) {
        const auto hit = tmpl.find(placeholder, pos);
        if (hit == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        out.append(tmpl.substr(pos, hit - pos));
        out.append(question);
        pos = hit + placeholder.size();
    }
    return out;
}

} // namespace

std::vector<std::string> split_sentences(std::string_view text, Language /*language*/) {
    const auto cps = utf8::decode(text);
    std::vector<std::string> sentences;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= cps.size(); ++i) {
        if (i == cps.size() || is_terminal(cps[i])) {
            auto s = trim(cps, start, i);
            if (!s.empty()) {
                sentences.push_back(std::move(s));
            }
            start = i + 1;
        }
    }
    return sentences;
}

void fill_sentences(Caption& caption) {
    caption.sentences = split_sentences(caption.text, caption.language);
}

std::set<std::string> WhitespaceSegmenter::words(std::string_view sentence) const {
    std::set<std::string> out;
    std::string token;
    auto flush = [&] {
        if (!token.empty()) {
            out.insert(std::move(token));
            token.clear();
        }
    };
    for (char c : sentence) {
        const auto u = static_cast<unsigned char>(c);
        if (u < 0x80 && (is_space(u) || is_ascii_punct(u))) {
            flush();
        } else if (u >= 'A' && u <= 'Z') {
            token.push_back(static_cast<char>(u - 'A' + 'a'));
        } else {
            token.push_back(c);
        }
    }
    flush();
    return out;
}

std::set<std::string> BigramSegmenter::words(std::string_view sentence) const {
    std::set<std::string> out;
    const auto cps = utf8::decode(sentence);
    std::vector<char32_t> run;
    auto flush = [&] {
        if (run.size() == 1) {
            out.insert(utf8::encode(run));
        }
        for (std::size_t i = 0; i + 1 < run.size(); ++i) {
            std::string bigram;
            utf8::append(bigram, run[i]);
            utf8::append(bigram, run[i + 1]);
            out.insert(std::move(bigram));
        }
        run.clear();
    };
    for (char32_t cp : cps) {
        if (is_space(cp) || is_ascii_punct(cp) || is_wide_punct(cp)) {
            flush();
        } else {
            run.push_back(cp);
        }
    }
    flush();
    return out;
}

const WordSegmenter& default_segmenter(Language language) {
    static const WhitespaceSegmenter english;
    static const BigramSegmenter chinese;
    if (language == Language::zh) {
        return chinese;
    }
    return english;
}

std::set<std::string> word_set(std::string_view sentence, Language language) {
    return default_segmenter(language).words(sentence);
}

SentenceSet make_sentence_set(std::string sentence, Language language) {
    auto words = word_set(sentence, language);
    return SentenceSet{std::move(sentence), std::move(words)};
}

PairIou sentence_pair_iou(const SentenceSet& a, const SentenceSet& b) {
    if (a.words.empty() && b.words.empty()) {
        return PairIou{0.0, true};
    }
    std::size_t common = 0;
    auto ia = a.words.begin();
    auto ib = b.words.begin();
    while (ia != a.words.end() && ib != b.words.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++common;
            ++ia;
            ++ib;
        }
    }
    const auto uni = a.words.size() + b.words.size() - common;
    return PairIou{static_cast<double>(common) / static_cast<double>(uni), false};
}

double caption_redundancy(const Caption& caption, const WordSegmenter& segmenter) {
    const auto sentences = caption.sentences.empty() ? split_sentences(caption.text, caption.language)
                                                     : caption.sentences;
    std::vector<SentenceSet> sets;
    sets.reserve(sentences.size());
    for (const auto& s : sentences) {
        sets.push_back(SentenceSet{s, segmenter.words(s)});
    }
    double best = 0.0;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        for (std::size_t j = i + 1; j < sets.size(); ++j) {
            best = std::max(best, sentence_pair_iou(sets[i], sets[j]).value);
        }
    }
    return best;
}

double caption_redundancy(const Caption& caption, Language language) {
    return caption_redundancy(caption, default_segmenter(language));
}

double record_redundancy(const VideoRecord& record) {
    double best = 0.0;
    for (const auto& c : record.captions) {
        best = std::max(best, caption_redundancy(c, c.language));
    }
    return best;
}

Partition refine_captions(std::span<const VideoRecord> records, double threshold) {
    Partition out;
    for (const auto& r : records) {
        auto copy = r;
        const double score = record_redundancy(r);
        const auto verdict = score > threshold ? Verdict::dropped : Verdict::kept;
        copy.filter_status[std::string(filter_names::caption_redundancy)] = Decision{verdict, score, {}};
        (verdict == Verdict::dropped ? out.dropped : out.kept).push_back(std::move(copy));
    }
    return out;
}

std::string_view to_string(TaskType t) {
    switch (t) {
    case TaskType::short_caption:
        return "short_caption";
    case TaskType::detailed_description:
        return "detailed_description";
    case TaskType::mc_vqa:
        return "mc_vqa";
    case TaskType::oe_vqa:
        return "oe_vqa";
    case TaskType::single_round:
        return "single_round";
    case TaskType::multi_round:
        return "multi_round";
    }
    return "short_caption";
}

TaskType parse_task_type(std::string_view s) {
    for (auto t : {TaskType::short_caption, TaskType::detailed_description, TaskType::mc_vqa, TaskType::oe_vqa,
                   TaskType::single_round, TaskType::multi_round}) {
        if (to_string(t) == s) {
            return t;
        }
    }
    throw DataError(fmt::format("unknown task type '{}'", s));
}

std::string format_sample_line(const InstructionSample& s, std::string_view sample_id) {
    nlohmann::ordered_json j;
    if (!sample_id.empty()) {
        j["sample_id"] = std::string(sample_id);
    }
    j["video_id"] = s.video_id;
    j["task_type"] = std::string(to_string(s.task_type));
    j["language"] = std::string(to_string(s.language));
    j["prompt"] = s.prompt;
    j["response"] = s.response;
    return j.dump();
}

InstructionSample parse_sample_line(std::string_view line, std::string* sample_id) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(fmt::format("invalid JSON: {}", e.what()));
    }
    InstructionSample s;
    try {
        s.video_id = j.at("video_id").get<std::string>();
        s.task_type = parse_task_type(j.at("task_type").get<std::string>());
        s.language = parse_language(j.at("language").get<std::string>());
        s.prompt = j.at("prompt").get<std::string>();
        s.response = j.at("response").get<std::string>();
        if (sample_id != nullptr) {
            *sample_id = j.contains("sample_id") ? j.at("sample_id").get<std::string>() : std::string();
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(fmt::format("malformed instruction sample: {}", e.what()));
    }
    if (s.prompt.empty()) {
        throw DataError("instruction sample has an empty prompt");
    }
    return s;
}

TemplateSet parse_template_set(std::string_view contents) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(contents);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(fmt::format("invalid template JSON: {}", e.what()));
    }
    if (!j.is_object()) {
        throw DataError("template set must be a JSON object");
    }
    TemplateSet set;
    for (const auto& [name, list] : j.items()) {
        const auto task = parse_task_type(name);
        if (!list.is_array()) {
            throw DataError(fmt::format("templates for '{}' must be an array", name));
        }
        auto& dst = set[task];
        for (const auto& t : list) {
            if (!t.is_string() || t.get<std::string>().empty()) {
                throw DataError(fmt::format("templates for '{}' must be non-empty strings", name));
            }
            dst.push_back(t.get<std::string>());
        }
    }
    return set;
}

TemplateSet load_template_set(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError(fmt::format("cannot open {}", path.string()));
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_template_set(ss.str());
}

const TemplateSet& default_template_set() {
    static const TemplateSet set = {
        {TaskType::short_caption,
         {"Describe the video briefly.", "Give a short caption for this video.",
          "Summarize the video in one sentence."}},
        {TaskType::detailed_description,
         {"Describe the video in detail.", "Provide a detailed description of the video.",
          "What happens in this video? Describe it thoroughly."}},
        {TaskType::oe_vqa, {"{question}", "{question}\nAnswer the question based on the video."}},
    };
    return set;
}

InstructionSample caption_to_qa(const Caption& caption, TaskType task_type, const TemplateSet& templates,
                                std::uint64_t seed, std::string_view video_id) {
    if (task_type != TaskType::short_caption && task_type != TaskType::detailed_description) {
        throw std::invalid_argument(fmt::format("'{}' is not a caption task type", to_string(task_type)));
    }
    const auto& options = templates_for(templates, task_type);
    return InstructionSample{task_type, pick(options, seed), caption.text, std::string(video_id), caption.language};
}

InstructionSample vqa_to_qa(std::string_view question, std::string_view answer, const TemplateSet& templates,
                            std::uint64_t seed, std::string_view video_id, Language language) {
    const auto& options = templates_for(templates, TaskType::oe_vqa);
    return InstructionSample{TaskType::oe_vqa, substitute_question(pick(options, seed), question),
                             std::string(answer), std::string(video_id), language};
}

InstructionSample mc_template(std::string_view question, std::span<const std::string> options,
                              std::size_t answer_index) {
    if (options.size() < 2 || options.size() > 26) {
        throw std::invalid_argument(fmt::format("multiple choice needs 2-26 options, got {}", options.size()));
    }
    if (answer_index >= options.size()) {
        throw std::invalid_argument(
            fmt::format("answer index {} out of range for {} options", answer_index, options.size()));
    }
    std::string prompt(question);
    for (std::size_t i = 0; i < options.size(); ++i) {
        prompt += fmt::format("\n({}) {}", static_cast<char>('A' + i), options[i]);
    }
    prompt += '\n';
    prompt += mc_answer_directive;
    InstructionSample s;
    s.task_type = TaskType::mc_vqa;
    s.prompt = std::move(prompt);
    s.response = std::string(1, static_cast<char>('A' + answer_index));
    return s;
}

} // namespace vidcurate
