#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "comotion/pattern.hpp"

namespace comotion {

// Pooled real-motion signature that anomaly scores compare against.
struct RealTemplate {
    NormalizedPattern pattern;
    int source_count = 0;  // number of pooled correlation matrices
};

// Deterministic sample of min(sample_size, available) correlation matrices
// without replacement.
std::vector<CorrelationMatrix> sample_rhos(const std::vector<CorrelationMatrix>& rhos,
                                           std::size_t sample_size, std::uint64_t rng_seed);

// Samples min(sample_size, available) correlation matrices without
// replacement, accumulates and normalizes them.
RealTemplate build_template(const std::vector<CorrelationMatrix>& rhos,
                            std::size_t sample_size, std::uint64_t rng_seed,
                            double epsilon = 1e-8);

// JS divergence to the template; higher = more anomalous.
double anomaly_score(const NormalizedPattern& p, const RealTemplate& t);

struct RocCurve {
    std::vector<std::pair<double, double>> points;  // (FPR, TPR), (0,0) .. (1,1)
    double auc = 0.0;
    double youden_threshold = 0.0;
    double youden_accuracy = 0.0;  // accuracy at the Youden-optimal threshold
};

// Threshold sweep over all distinct scores with fake as the positive class;
// trapezoidal AUC (ties contribute half).
RocCurve roc(const std::vector<double>& scores_real, const std::vector<double>& scores_fake);

// One-feature threshold classifier: vote = polarity * sign(x[feature] - threshold),
// fake is the positive class.
struct Stump {
    int feature = 0;
    double threshold = 0.0;
    int polarity = 1;  // +1 or -1
    double alpha = 0.0;
};

struct StumpEnsemble {
    std::vector<Stump> stumps;
    int rounds = 0;  // configured training rounds (stumps may stop early)
};

enum class Verdict { real, fake };

// Discrete AdaBoost over the 1275 triangle entries. labels: 1 = fake,
// 0 = real. Stops early when a round's best stump is no better than chance
// or the training error hits zero.
StumpEnsemble train_adaboost(const std::vector<NormalizedPattern>& patterns,
                             const std::vector<int>& labels, int rounds);

// Margin = sum of alpha-weighted stump votes; margin > 0 means fake, ties
// resolve to real.
std::pair<Verdict, double> classify(const StumpEnsemble& ensemble,
                                    const NormalizedPattern& p);

// Model file: JSON list of stumps {feature, threshold, polarity, alpha}.
void write_model(const StumpEnsemble& ensemble, const std::filesystem::path& path);
StumpEnsemble read_model(const std::filesystem::path& path);

}  // namespace comotion
