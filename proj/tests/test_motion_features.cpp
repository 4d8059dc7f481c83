#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "comotion/motion_features.hpp"
#include "comotion/rng.hpp"
#include "test_support.hpp"

using namespace comotion;

namespace {

LandmarkFrame grid_landmarks(int frame_index, int width, int height) {
    LandmarkFrame lm;
    lm.frame_index = frame_index;
    Rng rng(static_cast<std::uint64_t>(frame_index) + 7);
    for (int i = 0; i < kLandmarkCount; ++i) {
        lm.points.push_back({rng.uniform(10.0, width - 10.0), rng.uniform(10.0, height - 10.0)});
    }
    return lm;
}

FlowField uniform_flow(int w, int h, double u, double v) {
    FlowField f(w, h);
    std::fill(f.u.begin(), f.u.end(), u);
    std::fill(f.v.begin(), f.v.end(), v);
    return f;
}

}  // namespace

TEST_CASE("uniform flow gives the same feature everywhere") {
    const FlowField flow = uniform_flow(128, 128, 2.0, -1.0);
    const LandmarkFrame lm = grid_landmarks(0, 128, 128);
    for (double sigma : {0.5, 1.5, 4.0}) {
        MotionGateConfig cfg;
        cfg.gaussian_sigma = sigma;
        const MotionFeatureSet set = extract_features(flow, lm, cfg);
        REQUIRE(set.features.size() == 51);
        for (const auto& m : set.features) {
            CHECK(m.x == doctest::Approx(2.0).epsilon(1e-12));
            CHECK(m.y == doctest::Approx(-1.0).epsilon(1e-12));
        }
        CHECK(set.pair_id == std::pair<int, int>{0, 1});
    }
}

TEST_CASE("zero flow fails the gate") {
    const FlowField flow(128, 128);
    const MotionFeatureSet set = extract_features(flow, grid_landmarks(3, 128, 128));
    CHECK_FALSE(set.passes_gate);
    for (const double m : set.magnitudes) CHECK(m == 0.0);
}

TEST_CASE("gate counts exactly ceil(p * n) moving features") {
    // 26 of 51 features at magnitude 1.0 pass with the defaults (26 = ceil(25.5))
    std::vector<Vec2> features(kLandmarkCount, Vec2{0.0, 0.0});
    for (int i = 0; i < 26; ++i) features[static_cast<std::size_t>(i)] = Vec2{1.0, 0.0};
    MotionFeatureSet set = make_feature_set({0, 1}, features);
    CHECK(set.passes_gate);

    features[25] = Vec2{0.0, 0.0};  // 25 moving
    set = make_feature_set({0, 1}, features);
    CHECK_FALSE(set.passes_gate);
}

TEST_CASE("feature extraction matches a direct window evaluation") {
    Rng rng(99);
    FlowField flow(64, 64);
    for (std::size_t i = 0; i < flow.u.size(); ++i) {
        flow.u[i] = rng.normal(0.0, 1.0);
        flow.v[i] = rng.normal(0.0, 1.0);
    }
    LandmarkFrame lm;
    lm.frame_index = 0;
    for (int i = 0; i < kLandmarkCount; ++i) {
        lm.points.push_back({rng.uniform(0.0, 63.9), rng.uniform(0.0, 63.9)});
    }
    MotionGateConfig cfg;
    const MotionFeatureSet set = extract_features(flow, lm, cfg);

    for (int i = 0; i < kLandmarkCount; ++i) {
        const int cx = static_cast<int>(std::lround(lm.points[i].x));
        const int cy = static_cast<int>(std::lround(lm.points[i].y));
        double wsum = 0.0, u = 0.0, v = 0.0;
        for (int wy = -cfg.window_stride_k; wy <= cfg.window_stride_k; ++wy) {
            for (int wx = -cfg.window_stride_k; wx <= cfg.window_stride_k; ++wx) {
                const double g = std::exp(-(wx * wx + wy * wy) /
                                          (2.0 * cfg.gaussian_sigma * cfg.gaussian_sigma));
                const int sx = std::clamp(cx + wx, 0, flow.width - 1);
                const int sy = std::clamp(cy + wy, 0, flow.height - 1);
                wsum += g;
                u += g * flow.u_at(sx, sy);
                v += g * flow.v_at(sx, sy);
            }
        }
        CHECK(set.features[i].x == doctest::Approx(u / wsum).epsilon(1e-12));
        CHECK(set.features[i].y == doctest::Approx(v / wsum).epsilon(1e-12));
        CHECK(set.magnitudes[i] == doctest::Approx(set.features[i].norm()).epsilon(1e-12));
    }
}

TEST_CASE("features are linear in the flow") {
    Rng rng(5);
    FlowField flow(64, 64);
    for (std::size_t i = 0; i < flow.u.size(); ++i) {
        flow.u[i] = rng.normal(0.0, 2.0);
        flow.v[i] = rng.normal(0.0, 2.0);
    }
    const LandmarkFrame lm = grid_landmarks(0, 64, 64);
    const MotionFeatureSet base = extract_features(flow, lm);

    SUBCASE("power-of-two scale is exact") {
        FlowField doubled = flow;
        for (auto& v : doubled.u) v *= 2.0;
        for (auto& v : doubled.v) v *= 2.0;
        const MotionFeatureSet scaled = extract_features(doubled, lm);
        for (int i = 0; i < kLandmarkCount; ++i) {
            CHECK(scaled.features[i].x == 2.0 * base.features[i].x);
            CHECK(scaled.features[i].y == 2.0 * base.features[i].y);
        }
    }
    SUBCASE("general scale to tolerance") {
        const double c = 1.7;
        FlowField scaled_flow = flow;
        for (auto& v : scaled_flow.u) v *= c;
        for (auto& v : scaled_flow.v) v *= c;
        const MotionFeatureSet scaled = extract_features(scaled_flow, lm);
        for (int i = 0; i < kLandmarkCount; ++i) {
            CHECK(scaled.features[i].x == doctest::Approx(c * base.features[i].x).epsilon(1e-12));
            CHECK(scaled.features[i].y == doctest::Approx(c * base.features[i].y).epsilon(1e-12));
        }
    }
}

TEST_CASE("features depend only on the landmark windows") {
    MotionGateConfig cfg;
    FlowField flow(128, 128);
    LandmarkFrame lm;
    lm.frame_index = 0;
    for (int i = 0; i < kLandmarkCount; ++i) {
        lm.points.push_back({20.0 + (i % 8) * 12.0, 20.0 + (i / 8) * 12.0});
    }
    const MotionFeatureSet before = extract_features(flow, lm, cfg);

    // poke flow far outside every window
    FlowField poked = flow;
    for (int y = 110; y < 128; ++y) {
        for (int x = 110; x < 128; ++x) {
            poked.u[poked.index(x, y)] = 50.0;
            poked.v[poked.index(x, y)] = -50.0;
        }
    }
    const MotionFeatureSet after = extract_features(poked, lm, cfg);
    for (int i = 0; i < kLandmarkCount; ++i) {
        CHECK(after.features[i].x == before.features[i].x);
        CHECK(after.features[i].y == before.features[i].y);
    }
}

TEST_CASE("raising the magnitude threshold never un-gates") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Vec2> features;
        for (int i = 0; i < kLandmarkCount; ++i) {
            features.push_back({rng.normal(0.0, 1.0), rng.normal(0.0, 1.0)});
        }
        bool previous = true;
        for (double threshold : {0.1, 0.5, 0.85, 1.2, 2.0}) {
            MotionGateConfig cfg;
            cfg.magnitude_threshold = threshold;
            const bool now = make_feature_set({0, 1}, features, cfg).passes_gate;
            if (!previous) CHECK_FALSE(now);
            previous = now;
        }
    }
}

TEST_CASE("landmarks outside the flow bounds are rejected") {
    const FlowField flow(64, 64);
    LandmarkFrame lm;
    lm.frame_index = 0;
    lm.points.assign(kLandmarkCount, Vec2{10.0, 10.0});
    lm.points[7] = Vec2{64.0, 10.0};
    CHECK_THROWS_AS(extract_features(flow, lm), std::invalid_argument);
}

TEST_CASE("motion csv round trip") {
    const auto dir = testsupport::temp_dir("motioncsv");
    Rng rng(8);
    std::vector<MotionFeatureSet> sets;
    for (int pair = 0; pair < 3; ++pair) {
        std::vector<Vec2> features;
        for (int i = 0; i < kLandmarkCount; ++i) {
            features.push_back({rng.normal(0.0, 1.5), rng.normal(0.0, 1.5)});
        }
        sets.push_back(make_feature_set({pair, pair + 1}, std::move(features)));
    }
    write_motion_csv(sets, dir / "m.csv");
    const auto back = read_motion_csv(dir / "m.csv");
    REQUIRE(back.size() == sets.size());
    for (std::size_t p = 0; p < sets.size(); ++p) {
        CHECK(back[p].pair_id == sets[p].pair_id);
        CHECK(back[p].passes_gate == sets[p].passes_gate);
        for (int i = 0; i < kLandmarkCount; ++i) {
            CHECK(back[p].features[i].x == doctest::Approx(sets[p].features[i].x).epsilon(1e-15));
        }
    }
    std::filesystem::remove_all(dir);
}
