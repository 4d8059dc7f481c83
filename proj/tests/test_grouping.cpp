#include <doctest.h>

#include <numbers>
#include <set>
#include <span>

#include "comotion/grouping.hpp"
#include "comotion/rng.hpp"
#include "test_support.hpp"

using namespace comotion;

namespace {

bool valid_partition(const Partition& part, int n) {
    if (static_cast<int>(part.labels.size()) != n) return false;
    std::vector<int> counts(static_cast<std::size_t>(part.k), 0);
    for (const int l : part.labels) {
        if (l < 0 || l >= part.k) return false;
        ++counts[static_cast<std::size_t>(l)];
    }
    for (const int c : counts) {
        if (c == 0) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("affinity is the clamped inner product") {
    const std::vector<Vec2> features{{1, 0}, {2, 0}, {0, 1}, {-1, 0}};
    const AffinityMatrix a = affinity(std::span<const Vec2>(features));
    CHECK(a(0, 1) == doctest::Approx(2.0));      // parallel
    CHECK(a(0, 2) == doctest::Approx(0.0));      // orthogonal
    CHECK(a(0, 3) == doctest::Approx(0.0));      // anti-parallel, clamped from -1
    CHECK(a(1, 1) == doctest::Approx(4.0));      // diagonal is the squared norm
    CHECK((a - a.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.minCoeff() >= 0.0);
}

TEST_CASE("spectral partition separates a block-diagonal affinity") {
    AffinityMatrix a = AffinityMatrix::Zero(4, 4);
    a(0, 0) = a(1, 1) = a(2, 2) = a(3, 3) = 1.0;
    a(0, 1) = a(1, 0) = 1.0;
    a(2, 3) = a(3, 2) = 1.0;
    GroupingConfig cfg;
    const Partition part = spectral_partition(a, 2, cfg);
    REQUIRE(valid_partition(part, 4));
    CHECK(part.labels[0] == part.labels[1]);
    CHECK(part.labels[2] == part.labels[3]);
    CHECK(part.labels[0] != part.labels[2]);
}

TEST_CASE("identical zero features fall back to an index split") {
    // all-zero affinity: every row embeds to zero, k-means can never fill two
    // clusters, and the deterministic fallback splits by index
    const AffinityMatrix a = AffinityMatrix::Zero(6, 6);
    GroupingConfig cfg;
    const Partition part = spectral_partition(a, 2, cfg);
    REQUIRE(valid_partition(part, 6));
    CHECK(part.labels == std::vector<int>{0, 0, 0, 1, 1, 1});
}

TEST_CASE("identical nonzero features produce a valid deterministic partition") {
    const std::vector<Vec2> features(8, Vec2{1.0, 0.5});
    const AffinityMatrix a = affinity(std::span<const Vec2>(features));
    GroupingConfig cfg;
    const Partition p1 = spectral_partition(a, 2, cfg);
    const Partition p2 = spectral_partition(a, 2, cfg);
    REQUIRE(valid_partition(p1, 8));
    CHECK(p1.labels == p2.labels);
}

TEST_CASE("orthogonal features under the identity affinity yield a valid partition") {
    const AffinityMatrix a = AffinityMatrix::Identity(6, 6);
    GroupingConfig cfg;
    const Partition part = spectral_partition(a, 2, cfg);
    CHECK(valid_partition(part, 6));
}

TEST_CASE("ch_index matches the worked example exactly") {
    Eigen::MatrixXd points(4, 2);
    points << 0, 0, 0, 1, 10, 0, 10, 1;
    const std::vector<int> labels{0, 0, 1, 1};
    CHECK(ch_index(points, labels, 2) == doctest::Approx(200.0).epsilon(1e-12));
}

TEST_CASE("ch_index returns the capped sentinel for perfect separation") {
    Eigen::MatrixXd points(4, 2);
    points << 0, 0, 0, 0, 5, 5, 5, 5;
    const std::vector<int> labels{0, 0, 1, 1};
    CHECK(ch_index(points, labels, 2) == kChSentinel);
}

TEST_CASE("ch_index preconditions") {
    Eigen::MatrixXd points(4, 2);
    points.setRandom();
    CHECK_THROWS_AS(ch_index(points, {0, 0, 0, 0}, 1), std::invalid_argument);
    CHECK_THROWS_AS(ch_index(points, {0, 1, 2, 3}, 4), std::invalid_argument);
    CHECK_THROWS_AS(ch_index(points, {0, 0, 1, 5}, 3), std::invalid_argument);
    CHECK_THROWS_AS(ch_index(points, {0, 0, 1, 1}, 3), std::invalid_argument);  // empty cluster
}

TEST_CASE("ch_index equals the two-loop scatter oracle") {
    Rng rng(1234);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 10 + static_cast<int>(rng.index(40));
        const int d = 2 + static_cast<int>(rng.index(6));
        const int k = 2 + static_cast<int>(rng.index(4));
        Eigen::MatrixXd points(n, d);
        std::vector<int> labels(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const int c = i < k ? i : static_cast<int>(rng.index(k));  // no empty clusters
            labels[static_cast<std::size_t>(i)] = c;
            for (int j = 0; j < d; ++j) points(i, j) = c * 3.0 + rng.normal(0.0, 1.0);
        }
        const double expected = testsupport::ch_oracle(points, labels, k);
        CHECK(ch_index(points, labels, k) == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("true labels beat random relabelings on separated data") {
    Rng rng(77);
    int wins = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 30, k = 3;
        Eigen::MatrixXd points(n, 2);
        std::vector<int> labels(n);
        for (int i = 0; i < n; ++i) {
            const int c = i % k;
            labels[static_cast<std::size_t>(i)] = c;
            points(i, 0) = c * 6.0 + rng.normal(0.0, 1.0);
            points(i, 1) = rng.normal(0.0, 1.0);
        }
        std::vector<int> shuffled = labels;
        for (std::size_t i = shuffled.size(); i > 1; --i) {
            std::swap(shuffled[i - 1], shuffled[rng.index(i)]);
        }
        bool shuffled_valid = true;
        std::vector<int> counts(k, 0);
        for (const int l : shuffled) ++counts[static_cast<std::size_t>(l)];
        for (const int c : counts) shuffled_valid &= c > 0;
        if (!shuffled_valid) {
            ++wins;  // degenerate shuffle cannot outscore
            continue;
        }
        if (ch_index(points, labels, k) >= ch_index(points, shuffled, k)) ++wins;
    }
    CHECK(wins >= 95);
}

TEST_CASE("best_partition recovers three direction bundles") {
    const auto sample = testsupport::direction_bundles(5);
    GroupingConfig cfg;
    cfg.rng_seed = 5;
    const Partition part = best_partition(affinity(std::span<const Vec2>(sample.features)), cfg);
    REQUIRE(part.k == 3);
    CHECK(testsupport::label_agreement(sample.labels, part.labels, 3) >= 0.95);
}

TEST_CASE("anti-parallel bundles separate through the clamp") {
    // lips case: two bundles pointing in opposite directions
    std::vector<Vec2> features;
    Rng rng(9);
    for (int i = 0; i < 4; ++i) {
        features.push_back({1.5 + rng.normal(0.0, 0.05), rng.normal(0.0, 0.05)});
    }
    for (int i = 0; i < 4; ++i) {
        features.push_back({-1.5 + rng.normal(0.0, 0.05), rng.normal(0.0, 0.05)});
    }
    const AffinityMatrix a = affinity(std::span<const Vec2>(features));
    // clamping removes every cross-bundle edge
    for (int i = 0; i < 4; ++i) {
        for (int j = 4; j < 8; ++j) CHECK(a(i, j) == 0.0);
    }
    GroupingConfig cfg;
    cfg.k_max = 4;
    const Partition part = best_partition(a, cfg);
    std::set<int> first(part.labels.begin(), part.labels.begin() + 4);
    std::set<int> second(part.labels.begin() + 4, part.labels.end());
    CHECK(first.size() == 1);
    CHECK(second.size() == 1);
    CHECK(*first.begin() != *second.begin());
}

TEST_CASE("degenerate search range returns the only candidate") {
    const auto sample = testsupport::direction_bundles(11);
    GroupingConfig cfg;
    cfg.k_min = 2;
    cfg.k_max = 2;
    const Partition part = best_partition(affinity(std::span<const Vec2>(sample.features)), cfg);
    CHECK(part.k == 2);
}

TEST_CASE("grouping is deterministic for a fixed seed") {
    const auto sample = testsupport::direction_bundles(21);
    const AffinityMatrix a = affinity(std::span<const Vec2>(sample.features));
    GroupingConfig cfg;
    cfg.rng_seed = 99;
    const Partition p1 = best_partition(a, cfg);
    const Partition p2 = best_partition(a, cfg);
    CHECK(p1.labels == p2.labels);
    CHECK(p1.k == p2.k);
    CHECK(p1.ch_score == p2.ch_score);
}

TEST_CASE("bundle labels are invariant to feature scaling") {
    const auto sample = testsupport::direction_bundles(31);
    GroupingConfig cfg;
    cfg.rng_seed = 31;
    std::vector<std::vector<int>> results;
    for (const double c : {0.5, 1.0, 4.0}) {
        std::vector<Vec2> scaled;
        for (const auto& m : sample.features) scaled.push_back(m * c);
        results.push_back(
            best_partition(affinity(std::span<const Vec2>(scaled)), cfg).labels);
    }
    CHECK(results[0] == results[1]);
    CHECK(results[1] == results[2]);
}

TEST_CASE("all-zero degrees are treated as gated out") {
    const AffinityMatrix a = AffinityMatrix::Zero(51, 51);
    GroupingConfig cfg;
    CHECK_THROWS_AS(best_partition(a, cfg), std::invalid_argument);
}

TEST_CASE("spectral partition validates its inputs") {
    GroupingConfig cfg;
    AffinityMatrix bad = AffinityMatrix::Ones(4, 4);
    bad(0, 1) = 2.0;  // asymmetric
    CHECK_THROWS_AS(spectral_partition(bad, 2, cfg), std::invalid_argument);

    AffinityMatrix negative = AffinityMatrix::Ones(4, 4);
    negative(0, 1) = negative(1, 0) = -0.5;
    CHECK_THROWS_AS(spectral_partition(negative, 2, cfg), std::invalid_argument);

    const AffinityMatrix ok = AffinityMatrix::Ones(4, 4);
    CHECK_THROWS_AS(spectral_partition(ok, 1, cfg), std::invalid_argument);
    CHECK_THROWS_AS(spectral_partition(ok, 4, cfg), std::invalid_argument);
}
