#include "comotion/frame.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>

#include "comotion/errors.hpp"

namespace comotion {

namespace {

// Skips whitespace and '#' comment lines between PGM header tokens.
int next_header_int(std::istream& in, const std::string& path) {
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    if (c == EOF || !std::isdigit(c)) {
        throw FormatError("malformed PGM header in " + path);
    }
    int value = 0;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        c = in.get();
    }
    return value;
}

}  // namespace

Frame read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open PGM file " + path.string());

    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || m1 != '5') {
        throw FormatError("not a binary PGM (P5) file: " + path.string());
    }
    const int width = next_header_int(in, path.string());
    const int height = next_header_int(in, path.string());
    const int maxval = next_header_int(in, path.string());
    if (width <= 0 || height <= 0) {
        throw FormatError("bad PGM dimensions in " + path.string());
    }
    if (maxval <= 0 || maxval > 255) {
        throw FormatError("only 8-bit PGM supported: " + path.string());
    }

    Frame frame(width, height);
    const std::size_t n = frame.size();
    std::vector<std::uint8_t> raw(n);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) {
        throw FormatError("truncated PGM pixel data in " + path.string());
    }
    const double scale = 1.0 / maxval;
    for (std::size_t i = 0; i < n; ++i) frame.intensity[i] = raw[i] * scale;
    return frame;
}

void write_pgm(const Frame& frame, const std::filesystem::path& path) {
    validate_frame(frame);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open PGM file for writing " + path.string());
    out << "P5\n" << frame.width << " " << frame.height << "\n255\n";
    std::vector<std::uint8_t> raw(frame.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double v = std::clamp(frame.intensity[i], 0.0, 1.0);
        raw[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size()));
    if (!out) throw IoError("failed writing PGM " + path.string());
}

void validate_frame(const Frame& frame) {
    if (frame.width <= 0 || frame.height <= 0 ||
        frame.intensity.size() != static_cast<std::size_t>(frame.width) * frame.height) {
        throw FormatError("frame dimensions inconsistent with pixel buffer");
    }
    for (const double v : frame.intensity) {
        if (!std::isfinite(v)) throw FormatError("frame contains non-finite intensity");
    }
}

}  // namespace comotion
