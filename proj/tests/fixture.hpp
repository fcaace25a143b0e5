#pragma once
// Twenty-record synthetic corpus with one intended fate per record. Expected
// stage counts are worked out by hand in the comments below.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "vidcurate/config.hpp"
#include "vidcurate/corpus.hpp"
#include "vidcurate/motion.hpp"
#include "vidcurate/pgm.hpp"

namespace fixture {

namespace fs = std::filesystem;
using namespace vidcurate;

struct ExpectedStage {
    std::string name;
    std::size_t input, kept, dropped;
};

struct Fixture {
    PipelineConfig config;
    std::vector<ExpectedStage> stages;
    std::size_t curated = 0;
    std::size_t samples = 0;
};

// 128x128 so the flow stage works at native size. Stripes move `shift` px in
// x. Faint or wide stripes have gradients too weak for alpha = 1 to register
// a one-pixel shift, so moving records use period 8.
inline GrayFrame texture(double shift, double offset, double period = 32, double amplitude = 0.075) {
    GrayFrame f(128, 128);
    for (int y = 0; y < 128; ++y) {
        for (int x = 0; x < 128; ++x) {
            const double sx = std::sin(2 * std::numbers::pi * (x - shift) / period);
            const double sy = std::sin(2 * std::numbers::pi * y / period);
            f.at(x, y) = offset + amplitude * (sx + sy);
        }
    }
    return f;
}

inline void frames(const fs::path& dir, const std::vector<GrayFrame>& seq) {
    for (std::size_t i = 0; i < seq.size(); ++i) {
        write_pgm(dir / fmt::format("frame_{:06d}.pgm", i * 1000), seq[i]);
    }
}

inline VideoRecord record(int i, double duration, std::string category, std::string caption) {
    VideoRecord r;
    r.id = fmt::format("r{:02d}", i);
    r.media_path = fmt::format("videos/{}.mp4", r.id);
    r.duration_s = duration;
    r.fps = 25;
    r.width = 100;
    r.height = 100;
    r.category = std::move(category);
    r.source = "synthetic";
    if (!caption.empty()) {
        r.captions.push_back(Caption{Language::en, std::move(caption), {}});
    }
    return r;
}

inline DetectionSidecar sidecar(const std::string& id, std::vector<std::vector<Rect>> text,
                                std::vector<std::vector<Rect>> face) {
    DetectionSidecar s;
    s.video_id = id;
    const auto n = std::max(text.size(), face.size());
    for (std::size_t k = 0; k < n; ++k) {
        SidecarFrame f;
        f.timestamp_s = 1.0 + static_cast<double>(k);
        if (k < text.size()) {
            f.text_boxes = text[k];
        }
        if (k < face.size()) {
            f.face_boxes = face[k];
        }
        s.frames.push_back(std::move(f));
    }
    return s;
}

// Fates (stage thresholds: text 0.25, face 0.4, flow 0.05, cut 0.30, cap 0.3,
// redundancy 0.5, max caption 200 code points):
//   validate  r00 no caption, r01 caption of 201 chars               18 of 20 kept
//   text      r03 unions {3000,1000,500}/10^4 -> 0.30, r04 full frame 16 of 18
//   face      r05 one frame at 0.6 (r06 at 0.3 stays)                 15 of 16
//   motion    r07 static stripes, r09 flat gray; r08, r11 move        13 of 15
//   scene cut r02 is 4 s long, no clip survives; r10 (130 s) -> 3
//             clips, r11 cut at 9.5 s -> 2 clips                      12 of 13 videos, 15 records
//   balance   sports 7 of 15 over 0.3: cap 4 (T=12), then 3 (T=11),
//             fixpoint at 3 -> 4 sports dropped                        11 of 15
//   refine    r12 repeats its sentence (1.0); r06 sits at 0.5 exactly  10 of 11
// Assembly: 10 caption samples + 1 QA item on r08; the QA item on r00 is excluded.
inline Fixture write(const fs::path& root) {
    fs::remove_all(root);
    fs::create_directories(root / "sidecars");
    fs::create_directories(root / "frames");

    std::vector<VideoRecord> records;
    records.push_back(record(0, 30, "misc", ""));
    records.push_back(record(1, 30, "misc", std::string(201, 'a')));
    records.push_back(record(2, 4, "misc", "A short clip."));
    records.push_back(record(3, 30, "slides", "Text on screen."));
    records.push_back(record(4, 30, "slides", "A full page of text."));
    records.push_back(record(5, 30, "vlog", "A face talks."));
    records.push_back(record(6, 30, "news", "The cat sits. The dog sits."));
    records.push_back(record(7, 30, "still", "A frozen frame."));
    records.push_back(record(8, 30, "nature", "Waves roll in."));
    records.push_back(record(9, 30, "still", "A gray wall."));
    records.push_back(record(10, 130, "travel", "A long road trip."));
    records.push_back(record(11, 20, "cooking", "Chopping then frying."));
    records.push_back(record(12, 30, "pets", "A dog runs. A dog runs."));
    for (int i = 13; i < 20; ++i) {
        records.push_back(record(i, 30, "sports", fmt::format("Player {} scores a goal.", i)));
    }

    const auto s = root / "sidecars";
    write_sidecar(s / "r03.json", sidecar("r03",
                                          {{make_rect(0, 0, 100, 30)},
                                           {make_rect(0, 0, 100, 10)},
                                           {make_rect(0, 0, 50, 10)}},
                                          {}));
    write_sidecar(s / "r04.json", sidecar("r04", {{make_rect(0, 0, 100, 100)}, {}, {}}, {}));
    write_sidecar(s / "r05.json", sidecar("r05", {}, {{}, {}, {make_rect(0, 0, 100, 60)}, {}, {}}));
    const std::vector<Rect> third{make_rect(0, 0, 100, 30)};
    write_sidecar(s / "r06.json", sidecar("r06", {{}, {}, {}}, {third, third, third, third, third}));

    const auto f = root / "frames";
    frames(f / "r07", std::vector<GrayFrame>(5, texture(0, 0.5, 8, 0.2)));
    std::vector<GrayFrame> moving;
    for (int k = 0; k < 5; ++k) {
        moving.push_back(texture(k, 0.5, 8, 0.2));
    }
    frames(f / "r08", moving);
    frames(f / "r09", std::vector<GrayFrame>(5, GrayFrame(128, 128, 0.5)));
    std::vector<GrayFrame> cut;
    for (int k = 0; k < 20; ++k) {
        cut.push_back(texture(k, k < 10 ? 0.2 : 0.8));
    }
    frames(f / "r11", cut);

    write_manifest(root / "manifest.jsonl", records);
    {
        std::ofstream qa(root / "qa.jsonl");
        qa << R"({"video_id":"r08","task_type":"mc_vqa","question":"What moves?","options":["stripes","nothing"],"answer_index":0})"
           << "\n"
           << R"({"video_id":"r00","task_type":"oe_vqa","question":"What is shown?","answer":"Nothing."})"
           << "\n";
    }

    Fixture fx;
    auto& c = fx.config;
    c.input = root / "manifest.jsonl";
    c.output = root / "out";
    c.sidecar_dir = s;
    c.frame_dir = f;
    c.qa_input = root / "qa.jsonl";
    c.max_caption_len = 200;
    c.text_coverage_threshold = 0.25;
    c.face_coverage_threshold = 0.4;
    c.balance_cap = 0.3;
    c.seed = 7;
    c.jobs = 2;
    fx.stages = {
        {"validate", 20, 18, 2},      {"filter-text", 18, 16, 2}, {"filter-face", 16, 15, 1},
        {"filter-motion", 15, 13, 2}, {"scene-cut", 13, 12, 1},   {"balance", 15, 11, 4},
        {"refine-captions", 11, 10, 1},
    };
    fx.curated = 10;
    fx.samples = 11;
    return fx;
}

} // namespace fixture
