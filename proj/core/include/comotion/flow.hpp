#pragma once

#include <filesystem>
#include <vector>

#include "comotion/frame.hpp"

namespace comotion {

// Dense per-pixel displacement between two frames, in pixels/frame. u is the
// horizontal component, v the vertical one, both row-major and sized like the
// source frames.
struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<double> u;
    std::vector<double> v;

    FlowField() = default;
    FlowField(int w, int h)
        : width(w),
          height(h),
          u(static_cast<std::size_t>(w) * h, 0.0),
          v(static_cast<std::size_t>(w) * h, 0.0) {}

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * width + x;
    }
    double u_at(int x, int y) const { return u[index(x, y)]; }
    double v_at(int x, int y) const { return v[index(x, y)]; }
};

struct FlowSolverConfig {
    double alpha = 0.1;             // smoothness weight
    double psi_epsilon = 1e-3;      // Charbonnier regularizer
    double gradient_weight = 1.0;   // gradient-constancy weight
    double pyramid_factor = 0.5;    // in (0,1)
    int pyramid_min_size = 16;      // smallest pyramid side, pixels
    int outer_iterations = 5;       // re-warp / re-linearize steps per level
    int inner_iterations = 30;      // lagged-diffusivity + SOR sweeps
    double sor_omega = 1.8;         // in (0,2)
};

// Per-level energy bookkeeping; initial is evaluated on the warm start
// upsampled from the coarser level, final after the outer iterations.
struct FlowLevelStats {
    int width = 0;
    int height = 0;
    double initial_energy = 0.0;
    double final_energy = 0.0;
};

struct FlowStats {
    std::vector<FlowLevelStats> levels;  // coarsest first
};

// Coarse-to-fine variational flow: Charbonnier-penalized brightness and
// gradient constancy plus Charbonnier smoothness, fixed-point linearization,
// SOR inner solver. Deterministic for fixed inputs and config.
FlowField estimate_flow(const Frame& a, const Frame& b,
                        const FlowSolverConfig& cfg = FlowSolverConfig{},
                        FlowStats* stats = nullptr);

// Samples b at (x + u, y + v) bilinearly; out-of-bounds samples clamp to the
// nearest border pixel.
Frame warp(const Frame& b, const FlowField& flow);

// Discretized total energy of a flow candidate: data + gradient constancy +
// alpha * smoothness, all Charbonnier-penalized. Exposed for the energy
// descent checks.
double flow_energy(const Frame& a, const Frame& b, const FlowField& flow,
                   const FlowSolverConfig& cfg);

// Middlebury .flo: float 202021.25 magic, int32 width/height, row-major
// interleaved float32 (u, v), little-endian.
FlowField read_flo(const std::filesystem::path& path);
void write_flo(const FlowField& flow, const std::filesystem::path& path);

}  // namespace comotion
