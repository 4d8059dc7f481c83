#include "comotion/motion_features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "comotion/errors.hpp"

namespace comotion {

namespace {

void validate_gate_config(const MotionGateConfig& cfg) {
    if (!(cfg.fraction_p > 0.0 && cfg.fraction_p <= 1.0) || !(cfg.magnitude_threshold > 0.0) ||
        cfg.window_stride_k < 1 || !(cfg.gaussian_sigma > 0.0)) {
        throw std::invalid_argument("invalid motion gate configuration");
    }
}

}  // namespace

bool evaluate_gate(const std::vector<double>& magnitudes, const MotionGateConfig& cfg) {
    const std::size_t needed = static_cast<std::size_t>(
        std::ceil(cfg.fraction_p * static_cast<double>(magnitudes.size())));
    std::size_t moving = 0;
    for (const double m : magnitudes) {
        if (m >= cfg.magnitude_threshold) ++moving;
    }
    return moving >= needed;
}

MotionFeatureSet make_feature_set(std::pair<int, int> pair_id, std::vector<Vec2> features,
                                  const MotionGateConfig& cfg) {
    validate_gate_config(cfg);
    MotionFeatureSet set;
    set.pair_id = pair_id;
    set.features = std::move(features);
    set.magnitudes.reserve(set.features.size());
    for (const auto& f : set.features) set.magnitudes.push_back(f.norm());
    set.passes_gate = evaluate_gate(set.magnitudes, cfg);
    return set;
}

MotionFeatureSet extract_features(const FlowField& flow, const LandmarkFrame& landmarks,
                                  const MotionGateConfig& cfg) {
    validate_gate_config(cfg);
    if (flow.width <= 0 || flow.height <= 0 ||
        flow.u.size() != static_cast<std::size_t>(flow.width) * flow.height ||
        flow.v.size() != flow.u.size()) {
        throw std::invalid_argument("extract_features: invalid flow field");
    }

    const int k = cfg.window_stride_k;
    const double inv_two_sigma2 = 1.0 / (2.0 * cfg.gaussian_sigma * cfg.gaussian_sigma);

    std::vector<Vec2> features;
    features.reserve(landmarks.points.size());
    for (const auto& lm : landmarks.points) {
        if (!(lm.x >= 0.0 && lm.x < flow.width && lm.y >= 0.0 && lm.y < flow.height)) {
            throw std::invalid_argument("extract_features: landmark outside flow bounds");
        }
        const int cx = static_cast<int>(std::lround(lm.x));
        const int cy = static_cast<int>(std::lround(lm.y));
        double wsum = 0.0, usum = 0.0, vsum = 0.0;
        for (int wy = -k; wy <= k; ++wy) {
            for (int wx = -k; wx <= k; ++wx) {
                const double g = std::exp(-(wx * wx + wy * wy) * inv_two_sigma2);
                const int sx = std::clamp(cx + wx, 0, flow.width - 1);
                const int sy = std::clamp(cy + wy, 0, flow.height - 1);
                const std::size_t i = flow.index(sx, sy);
                wsum += g;
                usum += g * flow.u[i];
                vsum += g * flow.v[i];
            }
        }
        features.emplace_back(usum / wsum, vsum / wsum);
    }
    return make_feature_set({landmarks.frame_index, landmarks.frame_index + 1},
                            std::move(features), cfg);
}

void write_motion_csv(const std::vector<MotionFeatureSet>& sets,
                      const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open motion CSV for writing " + path.string());
    out << "pair,landmark,u,v,magnitude\n";
    char buf[120];
    for (const auto& set : sets) {
        for (std::size_t i = 0; i < set.features.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%d,%zu,%.17g,%.17g,%.17g\n", set.pair_id.first, i,
                          set.features[i].x, set.features[i].y, set.magnitudes[i]);
            out << buf;
        }
    }
    if (!out) throw IoError("failed writing motion CSV " + path.string());
}

std::vector<MotionFeatureSet> read_motion_csv(const std::filesystem::path& path,
                                              const MotionGateConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open motion CSV " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty motion CSV " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "pair,landmark,u,v" && line != "pair,landmark,u,v,magnitude") {
        throw FormatError("motion CSV must start with header 'pair,landmark,u,v[,magnitude]': " +
                          path.string());
    }

    std::map<int, std::map<int, Vec2>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 4 && fields.size() != 5) {
            throw FormatError("malformed motion row at line " + std::to_string(line_no) + " in " +
                              path.string());
        }
        try {
            const int pair = std::stoi(fields[0]);
            const int landmark = std::stoi(fields[1]);
            const double u = std::stod(fields[2]);
            const double v = std::stod(fields[3]);
            if (landmark < 0 || landmark >= kLandmarkCount || !std::isfinite(u) ||
                !std::isfinite(v)) {
                throw std::invalid_argument("range");
            }
            rows[pair][landmark] = Vec2{u, v};
        } catch (const std::exception&) {
            throw FormatError("malformed motion row at line " + std::to_string(line_no) + " in " +
                              path.string());
        }
    }

    std::vector<MotionFeatureSet> sets;
    for (const auto& [pair, points] : rows) {
        if (points.size() != static_cast<std::size_t>(kLandmarkCount)) continue;
        std::vector<Vec2> features;
        features.reserve(kLandmarkCount);
        for (int i = 0; i < kLandmarkCount; ++i) features.push_back(points.at(i));
        sets.push_back(make_feature_set({pair, pair + 1}, std::move(features), cfg));
    }
    if (sets.empty()) throw EmptyInputError("no complete motion rows in " + path.string());
    return sets;
}

}  // namespace comotion
