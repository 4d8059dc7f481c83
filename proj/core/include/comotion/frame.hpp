#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace comotion {

// Grayscale frame, row-major, intensities in [0,1]. 8-bit PGM input maps to
// [0,1] by /255.
struct Frame {
    int width = 0;
    int height = 0;
    std::vector<double> intensity;

    Frame() = default;
    Frame(int w, int h, double fill = 0.0)
        : width(w), height(h), intensity(static_cast<std::size_t>(w) * h, fill) {}

    double at(int x, int y) const {
        return intensity[static_cast<std::size_t>(y) * width + x];
    }
    double& at(int x, int y) { return intensity[static_cast<std::size_t>(y) * width + x]; }

    std::size_t size() const { return intensity.size(); }
};

// Binary PGM (P5), 8-bit only.
Frame read_pgm(const std::filesystem::path& path);
void write_pgm(const Frame& frame, const std::filesystem::path& path);

// Throws FormatError unless all intensities are finite and dimensions are
// consistent with the pixel buffer.
void validate_frame(const Frame& frame);

}  // namespace comotion
