#include "comotion/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "comotion/rng.hpp"

namespace comotion {

namespace {

constexpr double kPi = std::numbers::pi;

// sigma of the magnitude-preserving per-landmark direction jitter, radians
constexpr double kAngularJitterSigma = 0.09;

// half-width of each component's fixed direction fan, radians
constexpr double kFanHalfAngle = 0.12;

void ellipse_arc(std::array<Vec2, kLandmarkCount>& rest, int first, int count, Vec2 center,
                 double rx, double ry, double theta_start, double theta_step) {
    for (int i = 0; i < count; ++i) {
        const double theta = theta_start + i * theta_step;
        rest[static_cast<std::size_t>(first + i)] =
            Vec2{center.x + rx * std::cos(theta), center.y - ry * std::sin(theta)};
    }
}

inline double reflect_into(double v, double lo, double hi) {
    if (v > hi) v = 2.0 * hi - v;
    if (v < lo) v = 2.0 * lo - v;
    return std::clamp(v, lo, hi);
}

}  // namespace

FaceModel FaceModel::standard() {
    FaceModel model;
    auto& rest = model.rest_positions;

    // brows: two five-point arcs
    for (int i = 0; i < 5; ++i) {
        const double arc = 4.0 * std::sin(kPi * i / 4.0);
        rest[static_cast<std::size_t>(i)] = Vec2{66.0 + 11.0 * i, 92.0 - arc};
        rest[static_cast<std::size_t>(5 + i)] = Vec2{146.0 + 11.0 * i, 92.0 - arc};
    }
    // nose: bridge 10-13, base 14-18
    for (int i = 0; i < 4; ++i) {
        rest[static_cast<std::size_t>(10 + i)] = Vec2{128.0, 104.0 + 10.0 * i};
    }
    for (int i = 0; i < 5; ++i) {
        rest[static_cast<std::size_t>(14 + i)] =
            Vec2{112.0 + 8.0 * i, 146.0 + 2.0 * std::sin(kPi * i / 4.0)};
    }
    // eyes: six points each
    ellipse_arc(rest, 19, 6, Vec2{96.0, 112.0}, 13.0, 6.0, kPi, -kPi / 3.0);
    ellipse_arc(rest, 25, 6, Vec2{160.0, 112.0}, 13.0, 6.0, kPi, -kPi / 3.0);
    // outer lip: upper arc 31-37 (corners included), lower arc 38-42
    ellipse_arc(rest, 31, 7, Vec2{128.0, 182.0}, 26.0, 11.0, kPi, -kPi / 6.0);
    ellipse_arc(rest, 38, 5, Vec2{128.0, 182.0}, 26.0, 11.0, -kPi / 6.0, -kPi / 6.0);
    // inner lip: upper 43-47, lower 48-50
    ellipse_arc(rest, 43, 5, Vec2{128.0, 182.0}, 17.0, 5.0, kPi, -kPi / 4.0);
    ellipse_arc(rest, 48, 3, Vec2{128.0, 182.0}, 17.0, 5.0, -kPi / 4.0, -kPi / 4.0);

    auto range = [](int lo, int hi) {
        std::vector<int> v;
        for (int i = lo; i <= hi; ++i) v.push_back(i);
        return v;
    };
    model.groups = {range(0, 9), range(10, 18), range(19, 30), range(31, 42), range(43, 50)};
    model.upper_lip = range(31, 37);
    for (int i = 43; i <= 47; ++i) model.upper_lip.push_back(i);
    model.lower_lip = range(38, 42);
    for (int i = 48; i <= 50; ++i) model.lower_lip.push_back(i);
    return model;
}

std::array<int, kLandmarkCount> FaceModel::group_of() const {
    std::array<int, kLandmarkCount> out{};
    out.fill(-1);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (const int i : groups[g]) out[static_cast<std::size_t>(i)] = static_cast<int>(g);
    }
    for (const int g : out) {
        if (g < 0) throw std::invalid_argument("face model groups do not cover all landmarks");
    }
    return out;
}

SynthTrack generate_track(const FaceModel& model, const SynthConfig& cfg) {
    if (cfg.frames < 2) throw std::invalid_argument("generate_track: frames must be >= 2");
    if (cfg.global_motion_sigma < 0.0 || cfg.group_motion_sigma < 0.0 ||
        cfg.noise_sigma < 0.0 ||
        !(cfg.talk_probability >= 0.0 && cfg.talk_probability <= 1.0) ||
        !(cfg.fake_decorrelation >= 0.0 && cfg.fake_decorrelation <= 1.0)) {
        throw std::invalid_argument("generate_track: invalid configuration");
    }

    const auto group_of = model.group_of();
    const int T = cfg.frames;

    Rng rng_head(derive_seed(cfg.rng_seed, 101));
    Rng rng_groups(derive_seed(cfg.rng_seed, 102));
    Rng rng_talk(derive_seed(cfg.rng_seed, 103));
    Rng rng_jitter(derive_seed(cfg.rng_seed, 104));

    // Head translation: polar random walk whose speed never stalls. Component
    // offsets ride on it with per-step magnitude capped well below the head
    // speed, keeping all motion directions inside one half-plane: real frame
    // pairs stay connected in the clamped affinity graph while components
    // still separate as direction micro-bundles. Lips oscillate anti-phase
    // along the perpendicular during talk segments.
    const double speed_lo = 1.25 * cfg.global_motion_sigma;
    const double speed_hi = 2.75 * cfg.global_motion_sigma;
    double theta = rng_head.uniform(0.0, 2.0 * kPi);
    double base_speed = rng_head.uniform(speed_lo, speed_hi);
    const double face_limit = 8.0;
    Vec2 face_offset{rng_head.uniform(-0.5 * face_limit, 0.5 * face_limit),
                     rng_head.uniform(-0.5 * face_limit, 0.5 * face_limit)};

    const std::size_t n_groups = model.groups.size();
    const double group_limit = 5.0;
    const double group_reversion = 0.12;
    // start the offset processes near stationarity so every window of the
    // track looks alike
    const double group_stationary = cfg.group_motion_sigma / std::sqrt(2.0 * group_reversion);
    std::vector<Vec2> group_offset(n_groups);
    for (auto& offset : group_offset) {
        offset = Vec2{rng_groups.normal(0.0, group_stationary),
                      rng_groups.normal(0.0, group_stationary)};
    }

    const double talk_enter = cfg.talk_probability * 0.5;
    const double talk_exit = 0.15;
    bool talking = talk_enter + talk_exit > 0.0
                       ? rng_talk.bernoulli(talk_enter / (talk_enter + talk_exit))
                       : false;
    double talk_phase = rng_talk.uniform(0.0, 2.0 * kPi);
    double lip_delta = talking ? 1.5 * std::sin(talk_phase) : 0.0;

    std::vector<std::array<Vec2, kLandmarkCount>> positions(static_cast<std::size_t>(T));
    std::array<bool, kLandmarkCount> is_upper{}, is_lower{};
    for (const int i : model.upper_lip) is_upper[static_cast<std::size_t>(i)] = true;
    for (const int i : model.lower_lip) is_lower[static_cast<std::size_t>(i)] = true;

    for (int t = 0; t < T; ++t) {
        if (t > 0) {
            theta += rng_head.normal(0.0, 0.35);
            base_speed = reflect_into(base_speed + rng_head.normal(0.0, 0.35 * cfg.global_motion_sigma),
                                      speed_lo, speed_hi);
            Vec2 head_step{base_speed * std::cos(theta), base_speed * std::sin(theta)};
            if (std::abs(face_offset.x + head_step.x) > face_limit ||
                std::abs(face_offset.y + head_step.y) > face_limit) {
                theta += kPi;
                head_step = Vec2{-head_step.x, -head_step.y};
            }
            face_offset += head_step;

            for (auto& offset : group_offset) {
                Vec2 step{-group_reversion * offset.x + rng_groups.normal(0.0, cfg.group_motion_sigma),
                          -group_reversion * offset.y + rng_groups.normal(0.0, cfg.group_motion_sigma)};
                const double cap = 0.38 * base_speed;
                const double norm = step.norm();
                if (norm > cap) step = step * (cap / norm);
                if (std::abs(offset.x + step.x) > group_limit ||
                    std::abs(offset.y + step.y) > group_limit) {
                    step = Vec2{-step.x, -step.y};
                }
                offset += step;
            }
        }
        if (talking) {
            if (rng_talk.bernoulli(0.15)) talking = false;
        } else {
            if (rng_talk.bernoulli(cfg.talk_probability * 0.5)) {
                talking = true;
                talk_phase = 0.0;
            }
        }
        if (talking) {
            talk_phase += 0.7;
            lip_delta = 1.5 * std::sin(talk_phase);
        } else {
            lip_delta *= 0.7;
        }
        const double lip = std::clamp(lip_delta, -0.6 * base_speed, 0.6 * base_speed);
        const Vec2 perp{-std::sin(theta), std::cos(theta)};

        auto& pos = positions[static_cast<std::size_t>(t)];
        for (int i = 0; i < kLandmarkCount; ++i) {
            Vec2 p = model.rest_positions[static_cast<std::size_t>(i)];
            p += face_offset;
            p += group_offset[static_cast<std::size_t>(group_of[static_cast<std::size_t>(i)])];
            if (is_upper[static_cast<std::size_t>(i)]) p += perp * -lip;
            if (is_lower[static_cast<std::size_t>(i)]) p += perp * lip;
            p.x += rng_jitter.normal(0.0, cfg.noise_sigma);
            p.y += rng_jitter.normal(0.0, cfg.noise_sigma);
            pos[static_cast<std::size_t>(i)] = p;
        }
    }

    // exact per-pair motions
    std::vector<std::array<Vec2, kLandmarkCount>> motions(static_cast<std::size_t>(T - 1));
    for (int t = 0; t + 1 < T; ++t) {
        for (int i = 0; i < kLandmarkCount; ++i) {
            motions[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] =
                positions[static_cast<std::size_t>(t + 1)][static_cast<std::size_t>(i)] -
                positions[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
        }
    }

    // Per-landmark direction structure, magnitude-preserving. The fixed
    // within-group fan models non-rigid articulation and guarantees a spread
    // floor so no frame pair ever clusters "too perfectly"; the random part
    // mimics the angular error of estimated flow.
    std::array<double, kLandmarkCount> fan{};
    for (const auto& group : model.groups) {
        const auto size = group.size();
        for (std::size_t r = 0; r < size; ++r) {
            const double frac = size > 1 ? static_cast<double>(r) / (size - 1) : 0.5;
            fan[static_cast<std::size_t>(group[r])] = (frac - 0.5) * 2.0 * kFanHalfAngle;
        }
    }
    Rng rng_angle(derive_seed(cfg.rng_seed, 106));
    for (auto& frame_motion : motions) {
        for (int i = 0; i < kLandmarkCount; ++i) {
            auto& m = frame_motion[static_cast<std::size_t>(i)];
            const double theta =
                fan[static_cast<std::size_t>(i)] + rng_angle.normal(0.0, kAngularJitterSigma);
            const double c = std::cos(theta), s = std::sin(theta);
            m = Vec2{c * m.x - s * m.y, s * m.x + c * m.y};
        }
    }

    if (cfg.mode == SynthMode::fake_like) {
        // re-aim motions independently in a uniform direction, preserving
        // magnitudes: frame-by-frame synthesis with no temporal coherence
        Rng rng_fake(derive_seed(cfg.rng_seed, 105));
        for (auto& frame_motion : motions) {
            for (auto& m : frame_motion) {
                if (rng_fake.bernoulli(cfg.fake_decorrelation)) {
                    const double theta = rng_fake.uniform(0.0, 2.0 * kPi);
                    const double c = std::cos(theta), s = std::sin(theta);
                    m = Vec2{c * m.x - s * m.y, s * m.x + c * m.y};
                }
            }
        }
    }

    // re-integrate positions from the first frame, reflecting at the canvas
    // margin (negation keeps magnitudes intact)
    {
        const double margin = 8.0;
        const double hi = static_cast<double>(model.canvas) - margin;
        for (int t = 0; t + 1 < T; ++t) {
            for (int i = 0; i < kLandmarkCount; ++i) {
                auto& m = motions[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
                const Vec2 cur = positions[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
                if (cur.x + m.x < margin || cur.x + m.x > hi) m.x = -m.x;
                if (cur.y + m.y < margin || cur.y + m.y > hi) m.y = -m.y;
                positions[static_cast<std::size_t>(t + 1)][static_cast<std::size_t>(i)] = cur + m;
            }
        }
    }

    SynthTrack out;
    out.track.video_id = cfg.mode == SynthMode::real_like ? "synth_real" : "synth_fake";
    out.track.frames.reserve(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
        LandmarkFrame lf;
        lf.frame_index = t;
        lf.points.assign(positions[static_cast<std::size_t>(t)].begin(),
                         positions[static_cast<std::size_t>(t)].end());
        out.track.frames.push_back(std::move(lf));
    }
    out.motions.reserve(static_cast<std::size_t>(T - 1));
    for (int t = 0; t + 1 < T; ++t) {
        std::vector<Vec2> features(motions[static_cast<std::size_t>(t)].begin(),
                                   motions[static_cast<std::size_t>(t)].end());
        out.motions.push_back(make_feature_set({t, t + 1}, std::move(features)));
    }
    return out;
}

namespace {

// band-limited periodic-free texture: fixed sum of random sinusoids,
// evaluated analytically anywhere
struct Texture {
    struct Wave {
        double fx, fy, phase, amp;
    };
    std::vector<Wave> waves;
    double offset = 0.5;
    double scale = 0.4;

    explicit Texture(std::uint64_t seed, int n_waves = 40) {
        Rng rng(seed);
        waves.reserve(static_cast<std::size_t>(n_waves));
        double amp_sum = 0.0;
        for (int i = 0; i < n_waves; ++i) {
            const double freq = rng.uniform(0.02, 0.12);
            const double angle = rng.uniform(0.0, 2.0 * kPi);
            Wave w;
            w.fx = 2.0 * kPi * freq * std::cos(angle);
            w.fy = 2.0 * kPi * freq * std::sin(angle);
            w.phase = rng.uniform(0.0, 2.0 * kPi);
            w.amp = rng.uniform(0.5, 1.0);
            amp_sum += w.amp;
            waves.push_back(w);
        }
        scale = 0.4 / amp_sum;
    }

    double operator()(double x, double y) const {
        double v = 0.0;
        for (const auto& w : waves) v += w.amp * std::sin(w.fx * x + w.fy * y + w.phase);
        return offset + scale * v;
    }
};

}  // namespace

std::vector<Frame> render_frames(const FaceModel& model, const LandmarkTrack& track,
                                 std::uint64_t texture_seed) {
    validate_track(track);
    const int canvas = model.canvas;
    const Texture tex(derive_seed(texture_seed, rng_stage::kTexture));
    const double sigma_r = 15.0;
    const double inv_two_sigma2 = 1.0 / (2.0 * sigma_r * sigma_r);

    std::vector<Frame> frames;
    frames.reserve(track.frames.size());
    for (const auto& lf : track.frames) {
        std::array<Vec2, kLandmarkCount> disp;
        for (int i = 0; i < kLandmarkCount; ++i) {
            disp[static_cast<std::size_t>(i)] =
                lf.points[static_cast<std::size_t>(i)] -
                model.rest_positions[static_cast<std::size_t>(i)];
        }
        Frame frame(canvas, canvas);
        for (int y = 0; y < canvas; ++y) {
            for (int x = 0; x < canvas; ++x) {
                double wsum = 0.0, dx = 0.0, dy = 0.0;
                for (int i = 0; i < kLandmarkCount; ++i) {
                    const Vec2& r = model.rest_positions[static_cast<std::size_t>(i)];
                    const double ddx = x - r.x;
                    const double ddy = y - r.y;
                    const double w = std::exp(-(ddx * ddx + ddy * ddy) * inv_two_sigma2);
                    wsum += w;
                    dx += w * disp[static_cast<std::size_t>(i)].x;
                    dy += w * disp[static_cast<std::size_t>(i)].y;
                }
                frame.at(x, y) = tex(x - dx / wsum, y - dy / wsum);
            }
        }
        frames.push_back(std::move(frame));
    }
    return frames;
}

}  // namespace comotion
