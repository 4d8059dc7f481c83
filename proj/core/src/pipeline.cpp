#include "comotion/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "comotion/errors.hpp"
#include "comotion/parallel.hpp"
#include "comotion/rng.hpp"

namespace comotion {

std::vector<CorrelationMatrix> rhos_from_motions(const std::vector<MotionFeatureSet>& sets,
                                                 const PipelineConfig& cfg, PairStats* stats) {
    const std::uint64_t grouping_master = derive_seed(cfg.rng_seed, rng_stage::kGrouping);
    std::vector<std::optional<CorrelationMatrix>> slots(sets.size());

    parallel_for(sets.size(), cfg.threads, [&](std::size_t idx) {
        const auto& set = sets[idx];
        if (!evaluate_gate(set.magnitudes, cfg.gate)) return;
        GroupingConfig grouping = cfg.grouping;
        grouping.rng_seed =
            derive_seed(grouping_master, static_cast<std::uint64_t>(set.pair_id.first));
        const Partition part = best_partition(affinity(set), grouping);
        CorrelationMatrix rho = correlation_matrix(part, set.pair_id.first);
        if (cfg.weight_mode == WeightMode::k_times_ch) rho.weight *= part.k;
        slots[idx] = std::move(rho);
    });

    std::vector<CorrelationMatrix> rhos;
    rhos.reserve(sets.size());
    PairStats st;
    st.pairs_total = static_cast<int>(sets.size());
    st.weight_min = std::numeric_limits<double>::infinity();
    double weight_sum = 0.0;
    for (auto& slot : slots) {
        if (!slot.has_value()) {
            ++st.pairs_gated;
            continue;
        }
        ++st.pairs_used;
        st.weight_min = std::min(st.weight_min, slot->weight);
        st.weight_max = std::max(st.weight_max, slot->weight);
        weight_sum += slot->weight;
        rhos.push_back(std::move(*slot));
    }
    if (st.pairs_used > 0) {
        st.weight_mean = weight_sum / st.pairs_used;
    } else {
        st.weight_min = 0.0;
    }
    if (stats) *stats = st;
    return rhos;
}

std::vector<MotionFeatureSet> motions_for_track(
    const LandmarkTrack& track, const std::function<FlowField(int, int)>& flow_provider,
    const PipelineConfig& cfg) {
    validate_track(track);
    const auto pairs = frame_pairs(track);
    std::vector<MotionFeatureSet> sets(pairs.size());
    // landmark frame lookup for the first frame of each pair
    std::vector<const LandmarkFrame*> first_frames(pairs.size(), nullptr);
    std::size_t cursor = 0;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        while (track.frames[cursor].frame_index != pairs[p].first) ++cursor;
        first_frames[p] = &track.frames[cursor];
    }
    parallel_for(pairs.size(), cfg.threads, [&](std::size_t p) {
        const FlowField flow = flow_provider(pairs[p].first, pairs[p].second);
        sets[p] = extract_features(flow, *first_frames[p], cfg.gate);
    });
    return sets;
}

std::vector<CorrelationMatrix> select_rhos(const std::vector<CorrelationMatrix>& rhos,
                                           int n_pairs, bool random, std::uint64_t seed) {
    if (n_pairs <= 0 || static_cast<std::size_t>(n_pairs) >= rhos.size()) return rhos;
    const std::size_t take = static_cast<std::size_t>(n_pairs);
    if (!random) {
        return {rhos.begin(), rhos.begin() + static_cast<std::ptrdiff_t>(take)};
    }
    std::vector<std::size_t> order(rhos.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.index(order.size() - i));
        std::swap(order[i], order[j]);
    }
    std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take));
    std::sort(chosen.begin(), chosen.end());
    std::vector<CorrelationMatrix> out;
    out.reserve(take);
    for (const std::size_t i : chosen) out.push_back(rhos[i]);
    return out;
}

namespace {

struct TrackArtifacts {
    std::string id;
    std::vector<CorrelationMatrix> rhos;
    PairStats stats;
};

void write_scores_csv(const std::filesystem::path& path,
                      const std::vector<std::pair<std::string, double>>& real_scores,
                      const std::vector<std::pair<std::string, double>>& fake_scores) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open score report for writing " + path.string());
    out << "video_id,score,label\n";
    char buf[64];
    for (const auto& [id, score] : real_scores) {
        std::snprintf(buf, sizeof(buf), "%.17g", score);
        out << id << "," << buf << ",real\n";
    }
    for (const auto& [id, score] : fake_scores) {
        std::snprintf(buf, sizeof(buf), "%.17g", score);
        out << id << "," << buf << ",fake\n";
    }
    if (!out) throw IoError("failed writing score report " + path.string());
}

}  // namespace

BenchmarkResult run_benchmark(const BenchmarkConfig& cfg,
                              const std::filesystem::path& out_dir) {
    if (cfg.tracks_per_class < 4) {
        throw std::invalid_argument("run_benchmark: need at least 4 tracks per class");
    }
    if (cfg.frames < 3) throw std::invalid_argument("run_benchmark: need at least 3 frames");
    if (cfg.n_values.empty()) throw std::invalid_argument("run_benchmark: empty N sweep");
    if (!(cfg.holdout_fraction > 0.0 && cfg.holdout_fraction < 1.0)) {
        throw std::invalid_argument("run_benchmark: holdout fraction must be in (0,1)");
    }

    const bool writing = !out_dir.empty();
    if (writing) {
        std::filesystem::create_directories(out_dir / "patterns");
    }

    // generate both classes and reduce each track to its correlation matrices
    const int per_class = cfg.tracks_per_class;
    std::vector<TrackArtifacts> tracks(static_cast<std::size_t>(2 * per_class));
    parallel_for(tracks.size(), cfg.pipeline.threads, [&](std::size_t idx) {
        const bool fake = idx >= static_cast<std::size_t>(per_class);
        const int i = static_cast<int>(fake ? idx - per_class : idx);
        const std::uint64_t track_uid =
            static_cast<std::uint64_t>(i) + (fake ? 1000000ULL : 0ULL);

        SynthConfig synth = cfg.synth;
        synth.frames = cfg.frames;
        synth.mode = fake ? SynthMode::fake_like : SynthMode::real_like;
        synth.rng_seed = derive_seed(derive_seed(cfg.seed, rng_stage::kSynth), track_uid);

        PipelineConfig pipeline = cfg.pipeline;
        pipeline.threads = 1;  // parallelism lives at track level here
        pipeline.rng_seed = derive_seed(cfg.seed, track_uid);

        const SynthTrack synth_track = generate_track(FaceModel::standard(), synth);

        TrackArtifacts art;
        char id[32];
        std::snprintf(id, sizeof(id), "%s_%04d", fake ? "fake" : "real", i);
        art.id = id;
        art.rhos = rhos_from_motions(synth_track.motions, pipeline, &art.stats);
        tracks[idx] = std::move(art);
    });

    const int test_count = std::max(
        1, static_cast<int>(std::lround(per_class * cfg.holdout_fraction)));
    const int train_count = per_class - test_count;
    if (train_count < 1) {
        throw std::invalid_argument("run_benchmark: holdout leaves no training tracks");
    }

    auto track_at = [&](bool fake, int i) -> const TrackArtifacts& {
        return tracks[static_cast<std::size_t>(fake ? per_class + i : i)];
    };

    // template from the training real tracks' pooled rhos
    std::vector<CorrelationMatrix> real_pool;
    for (int i = 0; i < train_count; ++i) {
        const auto& art = track_at(false, i);
        real_pool.insert(real_pool.end(), art.rhos.begin(), art.rhos.end());
    }
    if (real_pool.empty()) {
        throw EmptyInputError("run_benchmark: no surviving real pairs for the template");
    }
    const std::uint64_t template_seed = derive_seed(cfg.seed, rng_stage::kTemplateSampling);
    const RealTemplate tpl = build_template(real_pool, cfg.pipeline.template_sample_size,
                                            template_seed, cfg.pipeline.epsilon);

    BenchmarkResult result;
    result.template_sources = tpl.source_count;
    result.train_per_class = train_count;
    result.test_per_class = test_count;

    for (const int n : cfg.n_values) {
        // patterns for every track at this budget
        std::vector<std::optional<NormalizedPattern>> patterns(tracks.size());
        parallel_for(tracks.size(), cfg.pipeline.threads, [&](std::size_t idx) {
            const auto& art = tracks[idx];
            if (art.rhos.empty()) return;
            const auto chosen =
                select_rhos(art.rhos, n, cfg.pipeline.sample_rho_random,
                            derive_seed(cfg.seed, rng_stage::kSplit + idx));
            const CoMotionPattern pattern = accumulate(chosen);
            patterns[idx] = normalize(pattern, cfg.pipeline.epsilon);
            if (writing) {
                PatternFileMeta meta;
                meta.video_id = art.id;
                meta.weight_mode = cfg.pipeline.weight_mode;
                meta.pairs_used = art.stats.pairs_used;
                meta.pairs_gated = art.stats.pairs_gated;
                meta.weight_min = art.stats.weight_min;
                meta.weight_max = art.stats.weight_max;
                meta.weight_mean = art.stats.weight_mean;
                char name[64];
                std::snprintf(name, sizeof(name), "%s_n%03d.csv", art.id.c_str(), n);
                write_pattern(pattern, meta, out_dir / "patterns" / name);
            }
        });

        // anomaly detection on the held-out tracks
        std::vector<std::pair<std::string, double>> real_scores, fake_scores;
        std::vector<double> real_values, fake_values;
        for (int i = train_count; i < per_class; ++i) {
            for (const bool fake : {false, true}) {
                const auto idx = static_cast<std::size_t>(fake ? per_class + i : i);
                if (!patterns[idx].has_value()) continue;
                const double score = anomaly_score(*patterns[idx], tpl);
                auto& scores = fake ? fake_scores : real_scores;
                auto& values = fake ? fake_values : real_values;
                scores.emplace_back(tracks[idx].id, score);
                values.push_back(score);
            }
        }
        if (real_values.empty() || fake_values.empty()) {
            throw EmptyInputError("run_benchmark: a test class produced no patterns");
        }
        const RocCurve curve = roc(real_values, fake_values);

        // supervised classification, trained on the training halves
        std::vector<NormalizedPattern> train_x;
        std::vector<int> train_y;
        for (int i = 0; i < train_count; ++i) {
            for (const bool fake : {false, true}) {
                const auto idx = static_cast<std::size_t>(fake ? per_class + i : i);
                if (!patterns[idx].has_value()) continue;
                train_x.push_back(*patterns[idx]);
                train_y.push_back(fake ? 1 : 0);
            }
        }
        const StumpEnsemble model =
            train_adaboost(train_x, train_y, cfg.pipeline.adaboost_rounds);

        int correct = 0, total = 0;
        for (int i = train_count; i < per_class; ++i) {
            for (const bool fake : {false, true}) {
                const auto idx = static_cast<std::size_t>(fake ? per_class + i : i);
                if (!patterns[idx].has_value()) continue;
                const auto [verdict, margin] = classify(model, *patterns[idx]);
                (void)margin;
                const bool predicted_fake = verdict == Verdict::fake;
                if (predicted_fake == fake) ++correct;
                ++total;
            }
        }

        BenchmarkPerN per_n;
        per_n.n = n;
        per_n.anomaly_auc = curve.auc;
        per_n.anomaly_accuracy = curve.youden_accuracy;
        per_n.adaboost_accuracy = total > 0 ? static_cast<double>(correct) / total : 0.0;
        result.per_n.push_back(per_n);

        if (writing) {
            char name[64];
            std::snprintf(name, sizeof(name), "scores_n%03d.csv", n);
            write_scores_csv(out_dir / name, real_scores, fake_scores);
            std::snprintf(name, sizeof(name), "model_n%03d.json", n);
            write_model(model, out_dir / name);
        }
    }

    if (writing) {
        PatternFileMeta meta;
        meta.video_id = "template";
        meta.weight_mode = cfg.pipeline.weight_mode;
        meta.pairs_used = tpl.source_count;
        const auto sampled =
            sample_rhos(real_pool, cfg.pipeline.template_sample_size, template_seed);
        write_pattern(accumulate(sampled), meta, out_dir / "template.csv");
    }
    return result;
}

}  // namespace comotion
