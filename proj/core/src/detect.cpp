#include "comotion/detect.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "comotion/errors.hpp"
#include "comotion/rng.hpp"

namespace comotion {

std::vector<CorrelationMatrix> sample_rhos(const std::vector<CorrelationMatrix>& rhos,
                                           std::size_t sample_size, std::uint64_t rng_seed) {
    if (rhos.empty()) throw EmptyInputError("sample_rhos: empty correlation matrix list");
    if (sample_size == 0) throw std::invalid_argument("sample_rhos: sample_size must be >= 1");

    std::vector<std::size_t> order(rhos.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t take = std::min(sample_size, rhos.size());
    Rng rng(rng_seed);
    // partial Fisher-Yates, deterministic across platforms
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.index(order.size() - i));
        std::swap(order[i], order[j]);
    }
    std::vector<CorrelationMatrix> sampled;
    sampled.reserve(take);
    for (std::size_t i = 0; i < take; ++i) sampled.push_back(rhos[order[i]]);
    return sampled;
}

RealTemplate build_template(const std::vector<CorrelationMatrix>& rhos,
                            std::size_t sample_size, std::uint64_t rng_seed, double epsilon) {
    const auto sampled = sample_rhos(rhos, sample_size, rng_seed);
    RealTemplate tpl;
    tpl.source_count = static_cast<int>(sampled.size());
    tpl.pattern = normalize(accumulate(sampled), epsilon);
    return tpl;
}

double anomaly_score(const NormalizedPattern& p, const RealTemplate& t) {
    return js_divergence(p, t.pattern);
}

RocCurve roc(const std::vector<double>& scores_real, const std::vector<double>& scores_fake) {
    if (scores_real.empty() || scores_fake.empty()) {
        throw EmptyInputError("roc: both score lists must be non-empty");
    }

    // sort all scores descending, grouping ties so they contribute diagonal
    // segments (half credit under the trapezoid rule)
    struct Entry {
        double score;
        bool fake;
    };
    std::vector<Entry> entries;
    entries.reserve(scores_real.size() + scores_fake.size());
    for (const double s : scores_real) entries.push_back({s, false});
    for (const double s : scores_fake) entries.push_back({s, true});
    for (const auto& e : entries) {
        if (!std::isfinite(e.score)) throw std::invalid_argument("roc: non-finite score");
    }
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.score > b.score; });

    const double n_real = static_cast<double>(scores_real.size());
    const double n_fake = static_cast<double>(scores_fake.size());

    RocCurve curve;
    curve.points.emplace_back(0.0, 0.0);
    double tp = 0.0, fp = 0.0;
    // threshold above every score (nothing flagged fake) is a valid candidate
    double best_youden = 0.0;
    curve.youden_threshold = std::numeric_limits<double>::infinity();
    curve.youden_accuracy = n_real / (n_real + n_fake);
    std::size_t i = 0;
    while (i < entries.size()) {
        std::size_t j = i;
        while (j < entries.size() && entries[j].score == entries[i].score) {
            if (entries[j].fake) {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            ++j;
        }
        const double fpr = fp / n_real;
        const double tpr = tp / n_fake;
        curve.points.emplace_back(fpr, tpr);
        // classify as fake when score >= this threshold
        const double youden = tpr - fpr;
        if (youden > best_youden) {
            best_youden = youden;
            curve.youden_threshold = entries[i].score;
            curve.youden_accuracy = (tp + (n_real - fp)) / (n_real + n_fake);
        }
        i = j;
    }

    double auc = 0.0;
    for (std::size_t k = 1; k < curve.points.size(); ++k) {
        const auto& [x0, y0] = curve.points[k - 1];
        const auto& [x1, y1] = curve.points[k];
        auc += (x1 - x0) * 0.5 * (y0 + y1);
    }
    curve.auc = auc;
    return curve;
}

namespace {

inline int stump_vote(const Stump& s, const NormalizedPattern& p) {
    const double v = p.p[static_cast<std::size_t>(s.feature)];
    const int side = v >= s.threshold ? 1 : -1;
    return s.polarity * side;
}

}  // namespace

StumpEnsemble train_adaboost(const std::vector<NormalizedPattern>& patterns,
                             const std::vector<int>& labels, int rounds) {
    const std::size_t n = patterns.size();
    if (n == 0 || labels.size() != n) {
        throw std::invalid_argument("train_adaboost: empty input or label count mismatch");
    }
    if (rounds < 1) throw std::invalid_argument("train_adaboost: rounds must be >= 1");
    bool has_real = false, has_fake = false;
    for (const int y : labels) {
        if (y == 0) has_real = true;
        else if (y == 1) has_fake = true;
        else throw std::invalid_argument("train_adaboost: labels must be 0 (real) or 1 (fake)");
    }
    if (!has_real || !has_fake) {
        throw std::invalid_argument("train_adaboost: both classes must be present");
    }
    const std::size_t dims = patterns.front().p.size();
    for (const auto& p : patterns) {
        if (p.p.size() != dims) {
            throw std::invalid_argument("train_adaboost: pattern dimension mismatch");
        }
    }

    // per-feature sample order, sorted once and reused every round
    std::vector<std::vector<std::uint32_t>> sorted(dims);
    for (std::size_t f = 0; f < dims; ++f) {
        auto& idx = sorted[f];
        idx.resize(n);
        std::iota(idx.begin(), idx.end(), 0u);
        std::sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
            const double va = patterns[a].p[f];
            const double vb = patterns[b].p[f];
            if (va != vb) return va < vb;
            return a < b;
        });
    }

    std::vector<double> weights(n, 1.0 / static_cast<double>(n));
    std::vector<int> sign(n);
    for (std::size_t i = 0; i < n; ++i) sign[i] = labels[i] == 1 ? 1 : -1;

    StumpEnsemble ensemble;
    ensemble.rounds = rounds;

    for (int round = 0; round < rounds; ++round) {
        Stump best;
        double best_err = std::numeric_limits<double>::infinity();

        double total_fake = 0.0, total_real = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (sign[i] > 0) total_fake += weights[i];
            else total_real += weights[i];
        }

        for (std::size_t f = 0; f < dims; ++f) {
            const auto& idx = sorted[f];
            // threshold below every value: polarity +1 predicts all fake
            double err_plus = total_real;  // misclassified reals
            {
                const double thr = patterns[idx[0]].p[f] - 1.0;
                if (err_plus < best_err) {
                    best_err = err_plus;
                    best = {static_cast<int>(f), thr, 1, 0.0};
                }
                const double err_minus = 1.0 - err_plus;
                if (err_minus < best_err) {
                    best_err = err_minus;
                    best = {static_cast<int>(f), thr, -1, 0.0};
                }
            }
            // move the threshold up past each sample; those below predict -polarity
            for (std::size_t r = 0; r < n; ++r) {
                const std::size_t i = idx[r];
                // sample i now falls below the threshold: predicted real for
                // polarity +1, so a fake below adds error, a real below removes it
                if (sign[i] > 0) err_plus += weights[i];
                else err_plus -= weights[i];
                if (r + 1 < n && patterns[idx[r + 1]].p[f] == patterns[i].p[f]) continue;
                const double v_here = patterns[i].p[f];
                const double v_next = r + 1 < n ? patterns[idx[r + 1]].p[f] : v_here + 1.0;
                const double thr = 0.5 * (v_here + v_next);
                if (err_plus < best_err) {
                    best_err = err_plus;
                    best = {static_cast<int>(f), thr, 1, 0.0};
                }
                const double err_minus = 1.0 - err_plus;
                if (err_minus < best_err) {
                    best_err = err_minus;
                    best = {static_cast<int>(f), thr, -1, 0.0};
                }
            }
        }

        if (best_err >= 0.5 - 1e-12) break;  // no stump beats chance
        const double clamped = std::clamp(best_err, 1e-12, 1.0 - 1e-12);
        best.alpha = 0.5 * std::log((1.0 - clamped) / clamped);
        ensemble.stumps.push_back(best);

        if (best_err <= 1e-12) break;  // perfect separation

        double wsum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const int vote = stump_vote(best, patterns[i]);
            weights[i] *= std::exp(-best.alpha * sign[i] * vote);
            wsum += weights[i];
        }
        for (double& w : weights) w /= wsum;
    }
    return ensemble;
}

std::pair<Verdict, double> classify(const StumpEnsemble& ensemble, const NormalizedPattern& p) {
    double margin = 0.0;
    for (const auto& s : ensemble.stumps) {
        if (s.feature < 0 || static_cast<std::size_t>(s.feature) >= p.p.size()) {
            throw std::invalid_argument("classify: stump feature out of range");
        }
        margin += s.alpha * stump_vote(s, p);
    }
    return {margin > 0.0 ? Verdict::fake : Verdict::real, margin};
}

void write_model(const StumpEnsemble& ensemble, const std::filesystem::path& path) {
    nlohmann::json stumps = nlohmann::json::array();
    for (const auto& s : ensemble.stumps) {
        stumps.push_back({{"feature", s.feature},
                          {"threshold", s.threshold},
                          {"polarity", s.polarity},
                          {"alpha", s.alpha}});
    }
    nlohmann::json model{{"rounds", ensemble.rounds}, {"stumps", stumps}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open model file for writing " + path.string());
    out << model.dump(2) << "\n";
    if (!out) throw IoError("failed writing model file " + path.string());
}

StumpEnsemble read_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model file " + path.string());
    nlohmann::json model;
    try {
        in >> model;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed model file " + path.string() + ": " + e.what());
    }
    StumpEnsemble ensemble;
    try {
        ensemble.rounds = model.at("rounds").get<int>();
        for (const auto& s : model.at("stumps")) {
            Stump stump;
            stump.feature = s.at("feature").get<int>();
            stump.threshold = s.at("threshold").get<double>();
            stump.polarity = s.at("polarity").get<int>();
            stump.alpha = s.at("alpha").get<double>();
            if ((stump.polarity != 1 && stump.polarity != -1) || !std::isfinite(stump.alpha)) {
                throw FormatError("invalid stump in model file " + path.string());
            }
            ensemble.stumps.push_back(stump);
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("model file missing fields " + path.string() + ": " + e.what());
    }
    return ensemble;
}

}  // namespace comotion
