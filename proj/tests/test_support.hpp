#pragma once

// Shared generators and independent oracles. The oracles evaluate the
// definitions directly (two-loop scatter traces, pairwise rank counts, the
// literal divergence sums) and stay independent of the library code paths
// they check.

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "comotion/frame.hpp"
#include "comotion/rng.hpp"
#include "comotion/vec2.hpp"

namespace testsupport {

// Band-limited periodic texture: integer cycle counts <= max_cycles keep the
// coarsest pyramid level below Nyquist, so circular shifts are recoverable.
class ShiftTexture {
public:
    ShiftTexture(std::uint64_t seed, int width, int height, int waves = 16,
                 int max_cycles = 6)
        : width_(width), height_(height) {
        comotion::Rng rng(seed);
        double amp_sum = 0.0;
        for (int i = 0; i < waves; ++i) {
            int cx = 0, cy = 0;
            while (cx == 0 && cy == 0) {
                cx = static_cast<int>(rng.index(2 * max_cycles + 1)) - max_cycles;
                cy = static_cast<int>(rng.index(2 * max_cycles + 1)) - max_cycles;
            }
            Wave w;
            w.fx = 2.0 * std::numbers::pi * cx / width;
            w.fy = 2.0 * std::numbers::pi * cy / height;
            w.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
            w.amp = rng.uniform(0.5, 1.0);
            amp_sum += w.amp;
            waves_.push_back(w);
        }
        scale_ = 0.4 / amp_sum;
    }

    double operator()(double x, double y) const {
        double v = 0.0;
        for (const auto& w : waves_) v += w.amp * std::sin(w.fx * x + w.fy * y + w.phase);
        return 0.5 + scale_ * v;
    }

    comotion::Frame frame(double shift_x = 0.0, double shift_y = 0.0) const {
        comotion::Frame f(width_, height_);
        for (int y = 0; y < height_; ++y) {
            for (int x = 0; x < width_; ++x) f.at(x, y) = (*this)(x - shift_x, y - shift_y);
        }
        return f;
    }

private:
    struct Wave {
        double fx, fy, phase, amp;
    };
    int width_, height_;
    std::vector<Wave> waves_;
    double scale_;
};

// 51 features in three direction bundles 120 degrees apart; the planted
// labels are the ground truth for grouping recovery checks.
struct BundleSample {
    std::vector<comotion::Vec2> features;
    std::vector<int> labels;
};

inline BundleSample direction_bundles(std::uint64_t seed, int n = 51, int bundles = 3,
                                      double noise_rel = 0.05) {
    comotion::Rng rng(seed);
    BundleSample out;
    const double base = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (int i = 0; i < n; ++i) {
        const int g = i % bundles;
        const double angle = base + g * 2.0 * std::numbers::pi / bundles;
        const double mag = rng.uniform(1.0, 2.0);
        comotion::Vec2 m{mag * std::cos(angle), mag * std::sin(angle)};
        m.x += rng.normal(0.0, noise_rel * mag);
        m.y += rng.normal(0.0, noise_rel * mag);
        out.features.push_back(m);
        out.labels.push_back(g);
    }
    return out;
}

// best label agreement over all relabelings (brute force over permutations,
// fine for k <= 8)
inline double label_agreement(const std::vector<int>& truth, const std::vector<int>& pred,
                              int k) {
    std::vector<int> perm(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) perm[static_cast<std::size_t>(i)] = i;
    std::size_t best = 0;
    do {
        std::size_t agree = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const int t = truth[i];
            if (t < k && perm[static_cast<std::size_t>(t)] == pred[i]) ++agree;
        }
        best = std::max(best, agree);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return static_cast<double>(best) / static_cast<double>(truth.size());
}

// literal two-loop evaluation of the scatter-trace ratio
inline double ch_oracle(const Eigen::MatrixXd& points, const std::vector<int>& labels, int k) {
    const Eigen::Index n = points.rows();
    const Eigen::Index d = points.cols();
    Eigen::MatrixXd within = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd between = Eigen::MatrixXd::Zero(d, d);
    Eigen::RowVectorXd global = points.colwise().mean();
    for (int c = 0; c < k; ++c) {
        Eigen::RowVectorXd centroid = Eigen::RowVectorXd::Zero(d);
        int count = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (labels[static_cast<std::size_t>(i)] == c) {
                centroid += points.row(i);
                ++count;
            }
        }
        centroid /= count;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (labels[static_cast<std::size_t>(i)] == c) {
                const Eigen::RowVectorXd diff = points.row(i) - centroid;
                within += diff.transpose() * diff;
            }
        }
        const Eigen::RowVectorXd diff = centroid - global;
        between += count * (diff.transpose() * diff);
    }
    if (within.trace() == 0.0) return 1e12;
    return (between.trace() / (k - 1)) / (within.trace() / (n - k));
}

// pairwise Mann-Whitney statistic, fake as the positive class, ties at 1/2
inline double mann_whitney_auc(const std::vector<double>& real,
                               const std::vector<double>& fake) {
    double wins = 0.0;
    for (const double f : fake) {
        for (const double r : real) {
            if (f > r) wins += 1.0;
            else if (f == r) wins += 0.5;
        }
    }
    return wins / (static_cast<double>(real.size()) * static_cast<double>(fake.size()));
}

// literal evaluation of the symmetrized divergence with natural log
inline double js_oracle(const std::vector<double>& p, const std::vector<double>& q) {
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        if (p[i] > 0.0) d += 0.5 * p[i] * std::log(p[i] / m);
        if (q[i] > 0.0) d += 0.5 * q[i] * std::log(q[i] / m);
    }
    return d;
}

// all set partitions of [0, n) into exactly k non-empty blocks, as restricted
// growth strings
inline void partitions_into_k(int n, int k, const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    std::function<void(int, int)> rec = [&](int i, int used) {
        if (i == n) {
            if (used == k) fn(labels);
            return;
        }
        for (int l = 0; l <= std::min(used, k - 1); ++l) {
            labels[static_cast<std::size_t>(i)] = l;
            rec(i + 1, std::max(used, l + 1));
        }
    };
    rec(0, 0);
}

// unique scratch directory under the system temp root
inline std::filesystem::path temp_dir(const std::string& tag) {
    const auto dir =
        std::filesystem::temp_directory_path() / ("comotion_test_" + tag + "_" +
                                                  std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testsupport
