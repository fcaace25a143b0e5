#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vidcurate {

enum class Language { en, zh };

std::string_view to_string(Language lang);
Language parse_language(std::string_view s);

enum class Verdict { kept, dropped };

std::string_view to_string(Verdict v);

// Outcome of one filter on one record. `flag` carries a note when the filter
// ran on degraded input (missing sidecar, too few frames, unexpected frame
// count). A filter that could not run at all keeps the record and says so here.
struct Decision {
    Verdict verdict = Verdict::kept;
    double score = 0.0;
    std::string flag;

    bool dropped() const { return verdict == Verdict::dropped; }
    bool operator==(const Decision&) const = default;
};

// Filter names that may appear as filter_status keys.
namespace filter_names {
inline constexpr std::string_view text_coverage = "text_coverage";
inline constexpr std::string_view face_coverage = "face_coverage";
inline constexpr std::string_view static_scene = "static_scene";
inline constexpr std::string_view scene_cut = "scene_cut";
inline constexpr std::string_view category_balance = "category_balance";
inline constexpr std::string_view caption_redundancy = "caption_redundancy";
} // namespace filter_names

inline constexpr std::array<std::string_view, 6> registered_filters = {
    filter_names::text_coverage,  filter_names::face_coverage,    filter_names::static_scene,
    filter_names::scene_cut,      filter_names::category_balance, filter_names::caption_redundancy,
};

bool is_registered_filter(std::string_view name);

// Axis-aligned box in pixel coordinates, [x0, x1) x [y0, y1).
struct Rect {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return width() * height(); }
    bool operator==(const Rect&) const = default;
};

// Throws DataError unless coordinates are finite, non-negative and x1 > x0, y1 > y0.
Rect make_rect(double x0, double y0, double x1, double y1);

struct Caption {
    Language language = Language::en;
    std::string text;
    // Derived by the captions module; never serialized.
    std::vector<std::string> sentences;

    bool operator==(const Caption&) const = default;
};

struct VideoRecord {
    std::string id;
    std::string media_path;
    double duration_s = 0;
    double fps = 0;
    int width = 0;
    int height = 0;
    std::string category;
    Language language = Language::en;
    std::vector<Caption> captions;
    std::string source;
    std::map<std::string, Decision> filter_status;

    bool operator==(const VideoRecord&) const = default;
};

struct SidecarFrame {
    double timestamp_s = 0;
    std::vector<Rect> text_boxes;
    std::vector<Rect> face_boxes;

    bool operator==(const SidecarFrame&) const = default;
};

// Detector output for the frames sampled from one video.
struct DetectionSidecar {
    std::string video_id;
    std::vector<SidecarFrame> frames;

    bool operator==(const DetectionSidecar&) const = default;
};

// Manifest I/O -------------------------------------------------------------

struct LineError {
    std::size_t line = 0; // 1-based
    std::string message;
};

struct ManifestLoad {
    std::vector<VideoRecord> records;
    std::vector<LineError> errors;
};

// One record per line. Throws DataError if the line is not a well-formed record.
VideoRecord parse_record_line(std::string_view line);
std::string format_record_line(const VideoRecord& record);

// Reads a line-delimited manifest. Blank lines are ignored; malformed lines are
// reported in `errors` and the remaining lines are still loaded. An unreadable
// file or a duplicate id throws DataError.
ManifestLoad load_manifest(const std::filesystem::path& path);
ManifestLoad parse_manifest(std::string_view contents);

void write_manifest(const std::filesystem::path& path, const std::vector<VideoRecord>& records);

// Sidecars -----------------------------------------------------------------

DetectionSidecar parse_sidecar(std::string_view contents);
std::string format_sidecar(const DetectionSidecar& sidecar);
DetectionSidecar load_sidecar(const std::filesystem::path& path);
void write_sidecar(const std::filesystem::path& path, const DetectionSidecar& sidecar);

// Looks up `<dir>/<video_id>.json`. Returns nullopt when absent; a present but
// unreadable or malformed file throws DataError.
std::optional<DetectionSidecar> find_sidecar(const std::filesystem::path& dir, std::string_view video_id);

// Checks a sidecar against the record it describes (id, timestamps within the
// video, boxes within the frame). Returns one message per problem.
std::vector<std::string> check_sidecar(const DetectionSidecar& sidecar, const VideoRecord& record);

// Validation ---------------------------------------------------------------

// Videos shorter than this are excluded; exactly 5 s is kept.
inline constexpr double min_video_duration_s = 5.0;

enum class ViolationKind {
    empty_id,
    non_positive_duration,
    short_video,
    non_positive_fps,
    bad_dimensions,
    missing_caption,
    empty_caption,
    caption_too_long,
    unknown_filter,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
    ViolationKind kind;
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    bool has(ViolationKind kind) const;
};

// Never throws. Caption length is counted in Unicode code points.
ValidationReport validate_record(const VideoRecord& record, std::size_t max_caption_len);

// Records split by a filter. Both halves keep input order.
struct Partition {
    std::vector<VideoRecord> kept;
    std::vector<VideoRecord> dropped;
};

} // namespace vidcurate
