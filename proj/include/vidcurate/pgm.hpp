#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "vidcurate/motion.hpp"

namespace vidcurate {

// Binary P5 with maxval <= 255; samples are scaled to [0, 1].
GrayFrame read_pgm(const std::filesystem::path& path);
GrayFrame parse_pgm(std::string_view bytes);

// Writes 8-bit P5, rounding each sample to the nearest of 256 levels.
void write_pgm(const std::filesystem::path& path, const GrayFrame& frame);

struct FrameFile {
    double timestamp_s = 0;
    std::filesystem::path path;
};

// Timestamp encoded as the trailing digits of the file stem, in milliseconds
// (e.g. "frame_001500.pgm" -> 1.5 s). Throws DataError when there are none.
double timestamp_from_filename(const std::filesystem::path& path);

// All *.pgm files in `dir` ordered by timestamp. A missing directory yields
// an empty list; duplicate timestamps throw DataError.
std::vector<FrameFile> list_frames(const std::filesystem::path& dir);

} // namespace vidcurate
