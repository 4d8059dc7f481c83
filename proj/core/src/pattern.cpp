#include "comotion/pattern.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "comotion/errors.hpp"
#include "comotion/frame.hpp"

namespace comotion {

Eigen::MatrixXd CorrelationMatrix::dense() const {
    const int n = size();
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) m(i, j) = rho(i, j) ? 1.0 : 0.0;
    }
    return m;
}

WeightMode parse_weight_mode(const std::string& name) {
    if (name == "ch") return WeightMode::ch;
    if (name == "k-times-ch") return WeightMode::k_times_ch;
    throw ConfigError("unknown weight mode '" + name + "' (expected ch | k-times-ch)");
}

std::string to_string(WeightMode mode) {
    return mode == WeightMode::ch ? "ch" : "k-times-ch";
}

CorrelationMatrix correlation_matrix(const Partition& part, int pair_index) {
    CorrelationMatrix rho;
    rho.pair_index = pair_index;
    rho.weight = part.ch_score;
    rho.labels.reserve(part.labels.size());
    for (const int l : part.labels) {
        if (l < 0 || l > 255) throw std::invalid_argument("partition label out of range");
        rho.labels.push_back(static_cast<std::uint8_t>(l));
    }
    return rho;
}

CoMotionPattern accumulate(const std::vector<CorrelationMatrix>& rhos) {
    if (rhos.empty()) throw EmptyInputError("accumulate: empty correlation matrix list");
    const int n = rhos.front().size();

    // canonical summation order is by pair_index (stable for equal indices)
    std::vector<const CorrelationMatrix*> ordered;
    ordered.reserve(rhos.size());
    for (const auto& r : rhos) ordered.push_back(&r);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const auto* a, const auto* b) { return a->pair_index < b->pair_index; });

    CoMotionPattern pattern;
    pattern.acc = Eigen::MatrixXd::Zero(n, n);
    for (const auto* r : ordered) {
        if (r->size() != n) {
            throw std::invalid_argument("accumulate: correlation matrix size mismatch");
        }
        if (!(r->weight >= 0.0)) {
            throw std::invalid_argument("accumulate: negative or NaN weight");
        }
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j <= i; ++j) {
                if (r->rho(i, j)) {
                    pattern.acc(i, j) += r->weight;
                }
            }
        }
        pattern.total_weight += r->weight;
        ++pattern.pair_count;
    }
    // mirror the lower triangle
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < i; ++j) pattern.acc(j, i) = pattern.acc(i, j);
    }
    return pattern;
}

NormalizedPattern normalize(const CoMotionPattern& pattern, double epsilon) {
    if (!(pattern.total_weight > 0.0)) {
        throw std::invalid_argument("normalize: pattern total weight must be positive");
    }
    if (epsilon < 0.0) throw std::invalid_argument("normalize: epsilon must be >= 0");
    const int n = static_cast<int>(pattern.acc.rows());
    if (n < 2 || pattern.acc.cols() != n) {
        throw std::invalid_argument("normalize: invalid pattern matrix");
    }

    NormalizedPattern out;
    out.n = n;
    out.smoothed = epsilon > 0.0;
    out.p.resize(NormalizedPattern::tri_size(n));
    const double eps_add = epsilon * pattern.acc.maxCoeff();
    double sum = 0.0;
    std::size_t idx = 0;
    for (int i = 1; i < n; ++i) {
        for (int j = 0; j < i; ++j) {
            const double v = pattern.acc(i, j) + eps_add;
            out.p[idx++] = v;
            sum += v;
        }
    }
    if (!(sum > 0.0)) {
        throw std::invalid_argument("normalize: pattern triangle sums to zero");
    }
    for (double& v : out.p) v /= sum;
    return out;
}

double js_divergence(const NormalizedPattern& p, const NormalizedPattern& q) {
    if (p.p.size() != q.p.size() || p.n != q.n) {
        throw std::invalid_argument("js_divergence: pattern dimensions differ");
    }
    auto check_normalized = [](const NormalizedPattern& x) {
        double sum = 0.0;
        for (const double v : x.p) {
            if (!(v >= 0.0)) throw std::invalid_argument("js_divergence: negative entry");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-6) {
            throw std::invalid_argument("js_divergence: input not normalized");
        }
    };
    check_normalized(p);
    check_normalized(q);

    double d = 0.0;
    for (std::size_t i = 0; i < p.p.size(); ++i) {
        const double pi = p.p[i];
        const double qi = q.p[i];
        const double mi = 0.5 * (pi + qi);
        if (pi > 0.0) d += 0.5 * pi * std::log(pi / mi);
        if (qi > 0.0) d += 0.5 * qi * std::log(qi / mi);
    }
    return d;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
    std::filesystem::path p = csv_path;
    p.replace_extension(".json");
    return p;
}

void write_pattern(const CoMotionPattern& pattern, const PatternFileMeta& meta,
                   const std::filesystem::path& csv_path) {
    if (!(pattern.total_weight > 0.0)) {
        throw std::invalid_argument("write_pattern: total weight must be positive");
    }
    const int n = static_cast<int>(pattern.acc.rows());
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw IoError("cannot open pattern CSV for writing " + csv_path.string());
    char buf[40];
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", pattern.acc(i, j) / pattern.total_weight);
            out << buf << (j + 1 < n ? "," : "\n");
        }
    }
    if (!out) throw IoError("failed writing pattern CSV " + csv_path.string());

    nlohmann::json sidecar{
        {"video_id", meta.video_id},
        {"n_pairs", pattern.pair_count},
        {"total_weight", pattern.total_weight},
        {"weight_mode", to_string(meta.weight_mode)},
        {"pairs_used", meta.pairs_used},
        {"pairs_gated", meta.pairs_gated},
        {"weight_min", meta.weight_min},
        {"weight_max", meta.weight_max},
        {"weight_mean", meta.weight_mean},
    };
    std::ofstream jout(sidecar_path(csv_path), std::ios::binary);
    if (!jout) {
        throw IoError("cannot open pattern sidecar for writing " +
                      sidecar_path(csv_path).string());
    }
    jout << sidecar.dump(2) << "\n";
    if (!jout) throw IoError("failed writing pattern sidecar");
}

std::pair<CoMotionPattern, PatternFileMeta> read_pattern(
    const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw IoError("cannot open pattern CSV " + csv_path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            try {
                row.push_back(std::stod(field));
            } catch (const std::exception&) {
                throw FormatError("malformed pattern CSV entry in " + csv_path.string());
            }
        }
        rows.push_back(std::move(row));
    }
    const int n = static_cast<int>(rows.size());
    if (n < 2) throw FormatError("pattern CSV too small in " + csv_path.string());
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != n) {
            throw FormatError("pattern CSV is not square in " + csv_path.string());
        }
    }

    std::ifstream jin(sidecar_path(csv_path));
    if (!jin) throw IoError("cannot open pattern sidecar " + sidecar_path(csv_path).string());
    nlohmann::json sidecar;
    try {
        jin >> sidecar;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed pattern sidecar " + sidecar_path(csv_path).string() + ": " +
                          e.what());
    }

    CoMotionPattern pattern;
    PatternFileMeta meta;
    try {
        meta.video_id = sidecar.at("video_id").get<std::string>();
        pattern.pair_count = sidecar.at("n_pairs").get<int>();
        pattern.total_weight = sidecar.at("total_weight").get<double>();
        meta.weight_mode = parse_weight_mode(sidecar.at("weight_mode").get<std::string>());
        meta.pairs_used = sidecar.value("pairs_used", pattern.pair_count);
        meta.pairs_gated = sidecar.value("pairs_gated", 0);
        meta.weight_min = sidecar.value("weight_min", 0.0);
        meta.weight_max = sidecar.value("weight_max", 0.0);
        meta.weight_mean = sidecar.value("weight_mean", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("pattern sidecar missing fields " +
                          sidecar_path(csv_path).string() + ": " + e.what());
    }
    if (!(pattern.total_weight > 0.0)) {
        throw FormatError("pattern sidecar total_weight must be positive in " +
                          sidecar_path(csv_path).string());
    }

    pattern.acc.resize(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            pattern.acc(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
                                pattern.total_weight;
        }
    }
    return {std::move(pattern), std::move(meta)};
}

void write_heatmap(const CoMotionPattern& pattern, const std::filesystem::path& pgm_path) {
    if (!(pattern.total_weight > 0.0)) {
        throw std::invalid_argument("write_heatmap: total weight must be positive");
    }
    const int n = static_cast<int>(pattern.acc.rows());
    const Eigen::MatrixXd normalized = pattern.acc / pattern.total_weight;
    const double lo = normalized.minCoeff();
    const double hi = normalized.maxCoeff();
    const double span = std::max(hi - lo, std::numeric_limits<double>::min());
    Frame img(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) img.at(j, i) = (normalized(i, j) - lo) / span;
    }
    write_pgm(img, pgm_path);
}

}  // namespace comotion
