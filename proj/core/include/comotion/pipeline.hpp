#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "comotion/detect.hpp"
#include "comotion/flow.hpp"
#include "comotion/grouping.hpp"
#include "comotion/motion_features.hpp"
#include "comotion/pattern.hpp"
#include "comotion/synth.hpp"
#include "comotion/tracks.hpp"

namespace comotion {

// Every stage config plus the rho-per-pattern budget. One master seed feeds
// all stochastic stages through stage-offset derivation.
struct PipelineConfig {
    FlowSolverConfig flow;
    MotionGateConfig gate;
    GroupingConfig grouping;
    WeightMode weight_mode = WeightMode::ch;
    double epsilon = 1e-8;                // normalization smoothing
    std::size_t template_sample_size = 3000;
    int adaboost_rounds = 100;
    int n_pairs = 0;                      // 0 = use every surviving pair
    bool sample_rho_random = false;       // default: contiguous window
    std::uint64_t rng_seed = 0;
    int threads = 1;
};

struct PairStats {
    int pairs_total = 0;
    int pairs_used = 0;
    int pairs_gated = 0;
    double weight_min = 0.0;
    double weight_max = 0.0;
    double weight_mean = 0.0;
};

// Per-pair grouping: gate with cfg.gate, cluster with cfg.grouping (seed
// derived per pair index), weight by CH or k*CH. Gated pairs contribute
// nothing. Parallel over pairs; output order is pair order regardless of
// thread count.
std::vector<CorrelationMatrix> rhos_from_motions(const std::vector<MotionFeatureSet>& sets,
                                                 const PipelineConfig& cfg,
                                                 PairStats* stats = nullptr);

// Extracts per-pair motion features for every consecutive frame pair of the
// track; flow_provider(a, b) supplies the flow field of pair (a, b).
std::vector<MotionFeatureSet> motions_for_track(
    const LandmarkTrack& track,
    const std::function<FlowField(int, int)>& flow_provider, const PipelineConfig& cfg);

// First n (or a seeded random sample of n) of the surviving rhos; n <= 0 or
// n >= size keeps everything.
std::vector<CorrelationMatrix> select_rhos(const std::vector<CorrelationMatrix>& rhos,
                                           int n_pairs, bool random, std::uint64_t seed);

// Desk-scale mirror of the paper's evaluation protocol on synthetic tracks:
// anomaly detection against a pooled real template plus supervised AdaBoost,
// swept over the rho-per-pattern budget N.
struct BenchmarkConfig {
    int tracks_per_class = 200;
    int frames = 90;
    std::vector<int> n_values{1, 10, 35, 70};
    double holdout_fraction = 0.5;  // test share per class
    std::uint64_t seed = 42;
    SynthConfig synth;              // sigmas shared by both classes
    PipelineConfig pipeline;
};

struct BenchmarkPerN {
    int n = 0;
    double anomaly_auc = 0.0;
    double anomaly_accuracy = 0.0;   // at the Youden-optimal threshold
    double adaboost_accuracy = 0.0;  // held-out, threshold 0
};

struct BenchmarkResult {
    std::vector<BenchmarkPerN> per_n;
    int template_sources = 0;
    int train_per_class = 0;
    int test_per_class = 0;
};

// Writes template/patterns/models/score reports under out_dir when non-empty;
// byte-identical across runs for a fixed config.
BenchmarkResult run_benchmark(const BenchmarkConfig& cfg,
                              const std::filesystem::path& out_dir = {});

}  // namespace comotion
