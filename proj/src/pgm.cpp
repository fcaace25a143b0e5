#include "vidcurate/pgm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "vidcurate/errors.hpp"

namespace vidcurate {

namespace {

class HeaderReader {
public:
    explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

    int next_int() {
        skip_space_and_comments();
        const auto start = pos_;
        while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
            ++pos_;
        }
        if (start == pos_ || pos_ - start > 9) {
            throw DataError("PGM: malformed header");
        }
        return std::stoi(std::string(bytes_.substr(start, pos_ - start)));
    }

    // Exactly one whitespace byte separates maxval from the raster.
    std::size_t raster_offset() {
        if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
            throw DataError("PGM: missing whitespace before raster");
        }
        return pos_ + 1;
    }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            const char c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') {
                    ++pos_;
                }
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    std::string_view bytes_;
    std::size_t pos_ = 2;
};

} // namespace

GrayFrame parse_pgm(std::string_view bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
        throw DataError("PGM: not a binary P5 file");
    }
    HeaderReader header(bytes);
    const int width = header.next_int();
    const int height = header.next_int();
    const int maxval = header.next_int();
    if (width < 1 || height < 1) {
        throw DataError(fmt::format("PGM: bad dimensions {}x{}", width, height));
    }
    if (maxval < 1 || maxval > 255) {
        throw DataError(fmt::format("PGM: maxval {} is not 8-bit", maxval));
    }
    const auto offset = header.raster_offset();
    const auto count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (bytes.size() - offset < count) {
        throw DataError("PGM: truncated raster");
    }
    GrayFrame frame(width, height);
    for (std::size_t i = 0; i < count; ++i) {
        frame.pixels[i] = static_cast<unsigned char>(bytes[offset + i]) / static_cast<double>(maxval);
    }
    return frame;
}

GrayFrame read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError(fmt::format("cannot open {}", path.string()));
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_pgm(ss.str());
    } catch (const DataError& e) {
        throw DataError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

void write_pgm(const std::filesystem::path& path, const GrayFrame& frame) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError(fmt::format("cannot write {}", path.string()));
    }
    out << "P5\n" << frame.width << ' ' << frame.height << "\n255\n";
    std::string raster(frame.pixels.size(), '\0');
    for (std::size_t i = 0; i < frame.pixels.size(); ++i) {
        const double v = std::clamp(frame.pixels[i], 0.0, 1.0);
        raster[i] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
    }
    out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
}

double timestamp_from_filename(const std::filesystem::path& path) {
    const auto stem = path.stem().string();
    auto end = stem.size();
    auto start = end;
    while (start > 0 && std::isdigit(static_cast<unsigned char>(stem[start - 1]))) {
        --start;
    }
    if (start == end) {
        throw DataError(fmt::format("frame file {} carries no millisecond timestamp", path.string()));
    }
    return std::stoll(stem.substr(start, end - start)) / 1000.0;
}

std::vector<FrameFile> list_frames(const std::filesystem::path& dir) {
    std::vector<FrameFile> frames;
    std::error_code ec;
    if (dir.empty() || !std::filesystem::is_directory(dir, ec)) {
        return frames;
    }
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
            frames.push_back({timestamp_from_filename(entry.path()), entry.path()});
        }
    }
    std::sort(frames.begin(), frames.end(), [](const FrameFile& a, const FrameFile& b) {
        return a.timestamp_s < b.timestamp_s;
    });
    for (std::size_t i = 0; i + 1 < frames.size(); ++i) {
        if (frames[i].timestamp_s == frames[i + 1].timestamp_s) {
            throw DataError(fmt::format("duplicate frame timestamp {} s in {}", frames[i].timestamp_s, dir.string()));
        }
    }
    return frames;
}

} // namespace vidcurate
