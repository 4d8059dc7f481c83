#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "comotion/frame.hpp"
#include "comotion/motion_features.hpp"
#include "comotion/tracks.hpp"
#include "comotion/vec2.hpp"

namespace comotion {

// Schematic 51-landmark face: anatomical components, rest coordinates on a
// square canvas, and the upper/lower lip split used for talk motion.
struct FaceModel {
    std::array<Vec2, kLandmarkCount> rest_positions{};
    std::vector<std::vector<int>> groups;  // partition of [0, 51)
    std::vector<int> upper_lip;
    std::vector<int> lower_lip;
    int canvas = 256;

    // brows 0-9, nose 10-18, eyes 19-30, outer lip 31-42, inner lip 43-50
    static FaceModel standard();

    std::array<int, kLandmarkCount> group_of() const;
};

enum class SynthMode { real_like, fake_like };

// The discriminative structure is direction micro-bundles: every component
// rides the shared head motion with its own bounded offset process, so real
// pairs form one connected affinity graph whose clusters follow anatomy.
struct SynthConfig {
    int frames = 90;
    double global_motion_sigma = 0.8;   // head speed scale, px/frame
    double group_motion_sigma = 0.25;   // per-component offset step, px/frame
    double noise_sigma = 0.03;          // i.i.d. landmark jitter, px
    double talk_probability = 0.35;     // chance per frame of entering a talk segment
    SynthMode mode = SynthMode::real_like;
    double fake_decorrelation = 1.0;    // probability a landmark motion is re-aimed
    std::uint64_t rng_seed = 0;
};

struct SynthTrack {
    LandmarkTrack track;
    // exact per-landmark motion for pair (t, t+1); gate evaluated with the
    // default MotionGateConfig
    std::vector<MotionFeatureSet> motions;
};

// real_like: smooth global random walk + coherent per-group offsets +
// anti-correlated lip displacement during talk segments + jitter.
// fake_like: the same motions re-aimed in an independent uniform direction
// per landmark and frame with probability fake_decorrelation (magnitudes
// preserved exactly), then re-integrated into positions.
SynthTrack generate_track(const FaceModel& model, const SynthConfig& cfg);

// Renders a band-limited random texture deformed by a smooth RBF
// interpolation of the landmark displacements, so flow estimated near the
// landmarks approximates the ground-truth motion.
std::vector<Frame> render_frames(const FaceModel& model, const LandmarkTrack& track,
                                 std::uint64_t texture_seed);

}  // namespace comotion
