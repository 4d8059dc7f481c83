#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "comotion/vec2.hpp"

namespace comotion {

// 51 non-boundary landmarks per frame. When ingesting the common 68-point
// layout, the 17 face-boundary points are dropped and 17..67 renumber to
// 0..50.
inline constexpr int kLandmarkCount = 51;
inline constexpr int kFullLandmarkCount = 68;
inline constexpr int kBoundaryLandmarkCount = 17;

struct LandmarkFrame {
    int frame_index = 0;
    std::vector<Vec2> points;  // exactly kLandmarkCount, fixed anatomical order
};

struct LandmarkTrack {
    std::string video_id;
    std::vector<LandmarkFrame> frames;  // strictly increasing frame_index
    int dropped_frames = 0;             // frames discarded for missing landmarks
};

// CSV with header "frame,landmark,x,y"; rows in any order. landmark_count_in_file
// must be 51 or 68. Frames missing any landmark are discarded and counted in
// dropped_frames.
LandmarkTrack read_track(const std::filesystem::path& path, int landmark_count_in_file);

void write_track(const LandmarkTrack& track, const std::filesystem::path& path);

// Consecutive-index pairs (t, t+1) present in the track; gaps yield no pair.
std::vector<std::pair<int, int>> frame_pairs(const LandmarkTrack& track);

// Throws unless the track satisfies its invariants (>= 2 frames, strictly
// increasing indices, 51 finite points per frame).
void validate_track(const LandmarkTrack& track);

}  // namespace comotion
