#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "comotion/grouping.hpp"

namespace comotion {

// Binary co-cluster matrix of one frame pair, stored by its inducing
// partition labels: rho(i,j) = 1 iff labels[i] == labels[j]. Kept compact
// because whole-corpus pools hold tens of thousands of these.
struct CorrelationMatrix {
    std::vector<std::uint8_t> labels;
    double weight = 0.0;  // grouping quality weight (CH score, or k * CH)
    int pair_index = 0;   // first frame of the pair

    int size() const { return static_cast<int>(labels.size()); }
    bool rho(int i, int j) const {
        return labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)];
    }
    Eigen::MatrixXd dense() const;
};

enum class WeightMode {
    ch,         // weight = CH score of the chosen partition (default)
    k_times_ch  // weight = k * CH, the literal printed accumulation rule
};

WeightMode parse_weight_mode(const std::string& name);
std::string to_string(WeightMode mode);

CorrelationMatrix correlation_matrix(const Partition& part, int pair_index = 0);

// Weighted sum of correlation matrices in pair_index order.
struct CoMotionPattern {
    Eigen::MatrixXd acc;       // n x n, symmetric, acc(i,i) == total_weight
    double total_weight = 0.0;
    int pair_count = 0;        // N, the pattern budget
};

CoMotionPattern accumulate(const std::vector<CorrelationMatrix>& rhos);

// Distribution over unordered landmark pairs: the strict lower triangle of
// the accumulated pattern, additively smoothed and L1-normalized.
struct NormalizedPattern {
    int n = 0;                // matrix side the triangle came from
    std::vector<double> p;    // size n(n-1)/2, row-major (i > j), sums to 1
    bool smoothed = false;

    static std::size_t tri_size(int n) {
        return static_cast<std::size_t>(n) * (n - 1) / 2;
    }
    static std::size_t tri_index(int i, int j) {  // requires i > j
        return static_cast<std::size_t>(i) * (i - 1) / 2 + j;
    }
};

NormalizedPattern normalize(const CoMotionPattern& pattern, double epsilon = 1e-8);

// Jensen-Shannon divergence with natural log; in [0, ln 2].
double js_divergence(const NormalizedPattern& p, const NormalizedPattern& q);

// Pattern file: CSV of acc/total_weight plus a JSON sidecar carrying
// video_id, N, total_weight and weight_mode (and optional gate statistics).
struct PatternFileMeta {
    std::string video_id;
    WeightMode weight_mode = WeightMode::ch;
    int pairs_used = 0;
    int pairs_gated = 0;
    double weight_min = 0.0;
    double weight_max = 0.0;
    double weight_mean = 0.0;
};

void write_pattern(const CoMotionPattern& pattern, const PatternFileMeta& meta,
                   const std::filesystem::path& csv_path);
std::pair<CoMotionPattern, PatternFileMeta> read_pattern(
    const std::filesystem::path& csv_path);

// Sidecar path convention: same stem with .json extension.
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

// 8-bit PGM heatmap of acc/total_weight, min-max scaled.
void write_heatmap(const CoMotionPattern& pattern, const std::filesystem::path& pgm_path);

}  // namespace comotion
