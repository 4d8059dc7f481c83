#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "comotion/flow.hpp"
#include "comotion/tracks.hpp"
#include "comotion/vec2.hpp"

namespace comotion {

struct MotionGateConfig {
    double fraction_p = 0.5;          // fraction of features that must move
    double magnitude_threshold = 0.85;  // pixels
    int window_stride_k = 3;          // Gaussian window half-width
    double gaussian_sigma = 1.5;      // window sigma, defaults to k/2
};

// Per frame pair: one 2-D motion vector per landmark plus the low-motion gate.
struct MotionFeatureSet {
    std::pair<int, int> pair_id{0, 0};  // (frame, frame+1)
    std::vector<Vec2> features;
    std::vector<double> magnitudes;
    bool passes_gate = false;
};

// Gaussian-weighted average of the flow field over the (2k+1)^2 window
// centered at each landmark rounded to the nearest pixel; window samples
// clamp at the flow borders.
MotionFeatureSet extract_features(const FlowField& flow, const LandmarkFrame& landmarks,
                                  const MotionGateConfig& cfg = MotionGateConfig{});

// Gate rule: at least ceil(fraction_p * n) features with magnitude >=
// magnitude_threshold.
bool evaluate_gate(const std::vector<double>& magnitudes, const MotionGateConfig& cfg);

// Fills magnitudes and the gate flag from raw feature vectors (used by the
// synthetic generator and the motion-CSV ingestion path).
MotionFeatureSet make_feature_set(std::pair<int, int> pair_id, std::vector<Vec2> features,
                                  const MotionGateConfig& cfg = MotionGateConfig{});

// Debug dump / ingestion CSV: header "pair,landmark,u,v,magnitude" (the
// magnitude column is optional on input).
void write_motion_csv(const std::vector<MotionFeatureSet>& sets,
                      const std::filesystem::path& path);
std::vector<MotionFeatureSet> read_motion_csv(const std::filesystem::path& path,
                                              const MotionGateConfig& cfg = MotionGateConfig{});

}  // namespace comotion
