#include "vidcurate/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>
#include <json.hpp>

#include "vidcurate/errors.hpp"
#include "vidcurate/utf8.hpp"

namespace vidcurate {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError(fmt::format("cannot open {}", path.string()));
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) {
        throw DataError(fmt::format("error reading {}", path.string()));
    }
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError(fmt::format("cannot write {}", path.string()));
    }
    out << contents;
    if (!out) {
        throw DataError(fmt::format("error writing {}", path.string()));
    }
}

const ordered_json& require(const ordered_json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw DataError(fmt::format("missing field '{}'", key));
    }
    return *it;
}

std::string get_string(const ordered_json& obj, const char* key) {
    const auto& v = require(obj, key);
    if (!v.is_string()) {
        throw DataError(fmt::format("field '{}' must be a string", key));
    }
    return v.get<std::string>();
}

double get_number(const ordered_json& obj, const char* key) {
    const auto& v = require(obj, key);
    if (!v.is_number()) {
        throw DataError(fmt::format("field '{}' must be a number", key));
    }
    return v.get<double>();
}

int get_int(const ordered_json& obj, const char* key) {
    const auto& v = require(obj, key);
    if (!v.is_number_integer()) {
        throw DataError(fmt::format("field '{}' must be an integer", key));
    }
    return v.get<int>();
}

void reject_unknown_keys(const ordered_json& obj, std::initializer_list<std::string_view> known, std::string_view what) {
    for (const auto& [key, _] : obj.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw DataError(fmt::format("unknown {} field '{}'", what, key));
        }
    }
}

ordered_json decision_to_json(const Decision& d) {
    ordered_json j;
    j["verdict"] = std::string(to_string(d.verdict));
    j["score"] = d.score;
    if (!d.flag.empty()) {
        j["flag"] = d.flag;
    }
    return j;
}

Decision decision_from_json(const ordered_json& j) {
    if (!j.is_object()) {
        throw DataError("filter decision must be an object");
    }
    reject_unknown_keys(j, {"verdict", "score", "flag"}, "decision");
    Decision d;
    const auto verdict = get_string(j, "verdict");
    if (verdict == "kept") {
        d.verdict = Verdict::kept;
    } else if (verdict == "dropped") {
        d.verdict = Verdict::dropped;
    } else {
        throw DataError(fmt::format("unknown verdict '{}'", verdict));
    }
    d.score = get_number(j, "score");
    if (j.contains("flag")) {
        d.flag = get_string(j, "flag");
    }
    return d;
}

ordered_json rect_to_json(const Rect& r) {
    return ordered_json::array({r.x0, r.y0, r.x1, r.y1});
}

Rect rect_from_json(const ordered_json& j) {
    if (!j.is_array() || j.size() != 4) {
        throw DataError("box must be an array [x0, y0, x1, y1]");
    }
    for (const auto& v : j) {
        if (!v.is_number()) {
            throw DataError("box coordinates must be numbers");
        }
    }
    return make_rect(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
}

} // namespace

std::string_view to_string(Language lang) {
    switch (lang) {
    case Language::en:
        return "en";
    case Language::zh:
        return "zh";
    }
    return "en";
}

Language parse_language(std::string_view s) {
    if (s == "en") {
        return Language::en;
    }
    if (s == "zh") {
        return Language::zh;
    }
    throw DataError(fmt::format("unknown language '{}'", s));
}

std::string_view to_string(Verdict v) {
    return v == Verdict::kept ? "kept" : "dropped";
}

bool is_registered_filter(std::string_view name) {
    return std::find(registered_filters.begin(), registered_filters.end(), name) != registered_filters.end();
}

Rect make_rect(double x0, double y0, double x1, double y1) {
    for (double v : {x0, y0, x1, y1}) {
        if (!std::isfinite(v) || v < 0) {
            throw DataError(fmt::format("box [{}, {}, {}, {}] has a negative or non-finite coordinate", x0, y0, x1, y1));
        }
    }
    if (!(x1 > x0) || !(y1 > y0)) {
        throw DataError(fmt::format("box [{}, {}, {}, {}] has zero area", x0, y0, x1, y1));
    }
    return Rect{x0, y0, x1, y1};
}

VideoRecord parse_record_line(std::string_view line) {
    ordered_json j;
    try {
        j = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(fmt::format("invalid JSON: {}", e.what()));
    }
    if (!j.is_object()) {
        throw DataError("record must be a JSON object");
    }
    reject_unknown_keys(j,
                        {"id", "media_path", "duration_s", "fps", "width", "height", "category", "language", "source",
                         "captions", "filter_status"},
                        "record");
    VideoRecord r;
    r.id = get_string(j, "id");
    r.media_path = get_string(j, "media_path");
    r.duration_s = get_number(j, "duration_s");
    r.fps = get_number(j, "fps");
    r.width = get_int(j, "width");
    r.height = get_int(j, "height");
    r.category = get_string(j, "category");
    r.language = parse_language(get_string(j, "language"));
    r.source = get_string(j, "source");

    const auto& caps = require(j, "captions");
    if (!caps.is_array()) {
        throw DataError("field 'captions' must be an array");
    }
    for (const auto& c : caps) {
        if (!c.is_object()) {
            throw DataError("caption must be an object");
        }
        reject_unknown_keys(c, {"language", "text"}, "caption");
        Caption cap;
        cap.language = parse_language(get_string(c, "language"));
        cap.text = get_string(c, "text");
        r.captions.push_back(std::move(cap));
    }

    const auto& status = require(j, "filter_status");
    if (!status.is_object()) {
        throw DataError("field 'filter_status' must be an object");
    }
    for (const auto& [name, decision] : status.items()) {
        r.filter_status.emplace(name, decision_from_json(decision));
    }
    return r;
}

std::string format_record_line(const VideoRecord& r) {
    ordered_json j;
    j["id"] = r.id;
    j["media_path"] = r.media_path;
    j["duration_s"] = r.duration_s;
    j["fps"] = r.fps;
    j["width"] = r.width;
    j["height"] = r.height;
    j["category"] = r.category;
    j["language"] = std::string(to_string(r.language));
    j["source"] = r.source;
    j["captions"] = ordered_json::array();
    for (const auto& c : r.captions) {
        ordered_json cj;
        cj["language"] = std::string(to_string(c.language));
        cj["text"] = c.text;
        j["captions"].push_back(std::move(cj));
    }
    j["filter_status"] = ordered_json::object();
    for (const auto& [name, decision] : r.filter_status) {
        j["filter_status"][name] = decision_to_json(decision);
    }
    return j.dump();
}

ManifestLoad parse_manifest(std::string_view contents) {
    ManifestLoad load;
    std::unordered_set<std::string> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= contents.size()) {
        auto end = contents.find('\n', pos);
        if (end == std::string_view::npos) {
            end = contents.size();
        }
        auto line = contents.substr(pos, end - pos);
        ++line_no;
        pos = end + 1;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.find_first_not_of(" \t") == std::string_view::npos) {
            continue;
        }
        VideoRecord record;
        try {
            record = parse_record_line(line);
        } catch (const DataError& e) {
            load.errors.push_back({line_no, e.what()});
            continue;
        }
        if (!seen.insert(record.id).second) {
            throw DataError(fmt::format("line {}: duplicate id '{}'", line_no, record.id));
        }
        load.records.push_back(std::move(record));
    }
    return load;
}

ManifestLoad load_manifest(const std::filesystem::path& path) {
    const auto contents = read_file(path);
    try {
        return parse_manifest(contents);
    } catch (const DataError& e) {
        throw DataError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

void write_manifest(const std::filesystem::path& path, const std::vector<VideoRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        out += format_record_line(r);
        out += '\n';
    }
    write_file(path, out);
}

DetectionSidecar parse_sidecar(std::string_view contents) {
    ordered_json j;
    try {
        j = ordered_json::parse(contents);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(fmt::format("invalid sidecar JSON: {}", e.what()));
    }
    if (!j.is_object()) {
        throw DataError("sidecar must be a JSON object");
    }
    reject_unknown_keys(j, {"video_id", "frames"}, "sidecar");
    DetectionSidecar s;
    s.video_id = get_string(j, "video_id");
    const auto& frames = require(j, "frames");
    if (!frames.is_array()) {
        throw DataError("field 'frames' must be an array");
    }
    for (const auto& f : frames) {
        if (!f.is_object()) {
            throw DataError("sidecar frame must be an object");
        }
        reject_unknown_keys(f, {"timestamp_s", "text_boxes", "face_boxes"}, "sidecar frame");
        SidecarFrame frame;
        frame.timestamp_s = get_number(f, "timestamp_s");
        for (const char* key : {"text_boxes", "face_boxes"}) {
            const auto& boxes = require(f, key);
            if (!boxes.is_array()) {
                throw DataError(fmt::format("field '{}' must be an array", key));
            }
            auto& dst = std::string_view(key) == "text_boxes" ? frame.text_boxes : frame.face_boxes;
            for (const auto& b : boxes) {
                dst.push_back(rect_from_json(b));
            }
        }
        s.frames.push_back(std::move(frame));
    }
    return s;
}

std::string format_sidecar(const DetectionSidecar& s) {
    ordered_json j;
    j["video_id"] = s.video_id;
    j["frames"] = ordered_json::array();
    for (const auto& f : s.frames) {
        ordered_json fj;
        fj["timestamp_s"] = f.timestamp_s;
        fj["text_boxes"] = ordered_json::array();
        for (const auto& r : f.text_boxes) {
            fj["text_boxes"].push_back(rect_to_json(r));
        }
        fj["face_boxes"] = ordered_json::array();
        for (const auto& r : f.face_boxes) {
            fj["face_boxes"].push_back(rect_to_json(r));
        }
        j["frames"].push_back(std::move(fj));
    }
    return j.dump();
}

DetectionSidecar load_sidecar(const std::filesystem::path& path) {
    try {
        return parse_sidecar(read_file(path));
    } catch (const DataError& e) {
        throw DataError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

void write_sidecar(const std::filesystem::path& path, const DetectionSidecar& sidecar) {
    write_file(path, format_sidecar(sidecar) + "\n");
}

std::optional<DetectionSidecar> find_sidecar(const std::filesystem::path& dir, std::string_view video_id) {
    if (dir.empty()) {
        return std::nullopt;
    }
    const auto path = dir / (std::string(video_id) + ".json");
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
        return std::nullopt;
    }
    return load_sidecar(path);
}

std::vector<std::string> check_sidecar(const DetectionSidecar& sidecar, const VideoRecord& record) {
    std::vector<std::string> issues;
    if (sidecar.video_id != record.id) {
        issues.push_back(fmt::format("sidecar video_id '{}' does not match record '{}'", sidecar.video_id, record.id));
    }
    for (std::size_t i = 0; i < sidecar.frames.size(); ++i) {
        const auto& f = sidecar.frames[i];
        if (!(f.timestamp_s >= 0 && f.timestamp_s < record.duration_s)) {
            issues.push_back(fmt::format("frame {} timestamp {} outside [0, {})", i, f.timestamp_s, record.duration_s));
        }
        for (const auto* boxes : {&f.text_boxes, &f.face_boxes}) {
            for (const auto& b : *boxes) {
                if (b.x1 > record.width || b.y1 > record.height) {
                    issues.push_back(fmt::format("frame {} box [{}, {}, {}, {}] exceeds {}x{} frame", i, b.x0, b.y0, b.x1,
                                                 b.y1, record.width, record.height));
                }
            }
        }
    }
    return issues;
}

std::string_view to_string(ViolationKind kind) {
    switch (kind) {
    case ViolationKind::empty_id:
        return "empty_id";
    case ViolationKind::non_positive_duration:
        return "non_positive_duration";
    case ViolationKind::short_video:
        return "short_video";
    case ViolationKind::non_positive_fps:
        return "non_positive_fps";
    case ViolationKind::bad_dimensions:
        return "bad_dimensions";
    case ViolationKind::missing_caption:
        return "missing_caption";
    case ViolationKind::empty_caption:
        return "empty_caption";
    case ViolationKind::caption_too_long:
        return "caption_too_long";
    case ViolationKind::unknown_filter:
        return "unknown_filter";
    }
    return "unknown";
}

bool ValidationReport::has(ViolationKind kind) const {
    return std::any_of(violations.begin(), violations.end(), [kind](const Violation& v) { return v.kind == kind; });
}

ValidationReport validate_record(const VideoRecord& r, std::size_t max_caption_len) {
    ValidationReport report;
    auto add = [&](ViolationKind kind, std::string detail) { report.violations.push_back({kind, std::move(detail)}); };

    if (r.id.empty()) {
        add(ViolationKind::empty_id, "id is empty");
    }
    if (!(r.duration_s > 0) || !std::isfinite(r.duration_s)) {
        add(ViolationKind::non_positive_duration, fmt::format("duration_s = {}", r.duration_s));
    } else if (r.duration_s < min_video_duration_s) {
        add(ViolationKind::short_video, fmt::format("duration_s = {} < {}", r.duration_s, min_video_duration_s));
    }
    if (!(r.fps > 0) || !std::isfinite(r.fps)) {
        add(ViolationKind::non_positive_fps, fmt::format("fps = {}", r.fps));
    }
    if (r.width < 1 || r.height < 1) {
        add(ViolationKind::bad_dimensions, fmt::format("{}x{}", r.width, r.height));
    }
    if (r.captions.empty()) {
        add(ViolationKind::missing_caption, "no captions");
    }
    for (std::size_t i = 0; i < r.captions.size(); ++i) {
        const auto& text = r.captions[i].text;
        if (text.empty()) {
            add(ViolationKind::empty_caption, fmt::format("caption {} is empty", i));
            continue;
        }
        const auto len = utf8::length(text);
        if (len > max_caption_len) {
            add(ViolationKind::caption_too_long,
                fmt::format("caption {} has {} characters, limit {}", i, len, max_caption_len));
        }
    }
    for (const auto& [name, _] : r.filter_status) {
        if (!is_registered_filter(name)) {
            add(ViolationKind::unknown_filter, fmt::format("filter_status key '{}'", name));
        }
    }
    return report;
}

} // namespace vidcurate
