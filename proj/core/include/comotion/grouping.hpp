#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "comotion/motion_features.hpp"
#include "comotion/vec2.hpp"

namespace comotion {

// Symmetric nonnegative affinity: clamped pairwise inner products of the
// motion features. Negative correlations clamp to zero so the normalized
// Laplacian stays well-posed; anti-parallel features then sit in disjoint
// graph components.
using AffinityMatrix = Eigen::MatrixXd;

struct GroupingConfig {
    int k_min = 2;
    int k_max = 8;
    int kmeans_restarts = 10;
    int kmeans_max_iters = 300;
    std::uint64_t rng_seed = 0;
    double degree_floor = 1e-12;
};

struct Partition {
    std::vector<int> labels;   // one label in [0, k) per feature
    int k = 0;
    double ch_score = 0.0;     // Calinski-Harabasz value of the chosen k
    Eigen::MatrixXd embedding; // n x k row-normalized spectral embedding
};

AffinityMatrix affinity(std::span<const Vec2> features);
AffinityMatrix affinity(const MotionFeatureSet& features);

// Normalized spectral clustering at fixed k: symmetric normalized Laplacian,
// k smallest-eigenvalue eigenvectors, row normalization, seeded k-means++
// with restarts. Rows of zero-degree features embed to zero.
Partition spectral_partition(const AffinityMatrix& a, int k, const GroupingConfig& cfg);

// Standard Calinski-Harabasz index [tr(B)/(k-1)] / [tr(W)/(n-k)]; returns the
// 1e12 sentinel when the within-cluster scatter is exactly zero.
double ch_index(const Eigen::MatrixXd& points, const std::vector<int>& labels, int k);

// Runs spectral_partition for every k in [k_min, k_max] and returns the
// CH-maximizing partition; ties break toward smaller k.
Partition best_partition(const AffinityMatrix& a, const GroupingConfig& cfg);
Partition best_partition(const MotionFeatureSet& features, const GroupingConfig& cfg);

inline constexpr double kChSentinel = 1e12;

}  // namespace comotion
