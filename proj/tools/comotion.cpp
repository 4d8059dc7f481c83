// comotion: co-motion pattern extraction and deep-fake detection pipeline.
//
// Subcommands: flow, pattern, detect, train, classify, synth, report.
// Every subcommand accepts --config with flat `key = value` lines mirroring
// its long options; command line flags take precedence over the file.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "comotion/errors.hpp"
#include "comotion/parallel.hpp"
#include "comotion/pipeline.hpp"
#include "comotion/rng.hpp"

namespace fs = std::filesystem;
using namespace comotion;

namespace {

template <typename T>
T parse_value(const std::string& raw) {
    std::istringstream in(raw);
    T value{};
    in >> value;
    if (in.fail() || !(in >> std::ws).eof()) {
        throw ConfigError("cannot parse config value '" + raw + "'");
    }
    return value;
}

template <>
std::string parse_value<std::string>(const std::string& raw) {
    return raw;
}

template <>
std::vector<int> parse_value<std::vector<int>>(const std::string& raw) {
    std::vector<int> values;
    std::stringstream ss(raw);
    std::string field;
    while (std::getline(ss, field, ',')) values.push_back(parse_value<int>(field));
    return values;
}

// Long options registered here are also settable from the flat config file;
// an option given on the command line wins over the file.
class ConfigurableCommand {
public:
    explicit ConfigurableCommand(CLI::App* cmd) : cmd_(cmd) {
        cmd_->add_option("--config", config_path_, "flat key = value config file");
    }

    template <typename T>
    CLI::Option* option(const std::string& name, T& target, const std::string& help) {
        auto* opt = cmd_->add_option("--" + name, target, help);
        setters_[name] = [&target](const std::string& raw) { target = parse_value<T>(raw); };
        return opt;
    }

    void apply_config() const {
        if (config_path_.empty()) return;
        std::ifstream in(config_path_);
        if (!in) throw IoError("cannot open config file " + config_path_);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(" \t");
                const auto e = s.find_last_not_of(" \t");
                return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
            };
            if (trim(line).empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw ConfigError("config line " + std::to_string(line_no) +
                                  " is not 'key = value'");
            }
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            const auto it = setters_.find(key);
            if (it == setters_.end()) {
                throw ConfigError("unknown config key '" + key + "'");
            }
            if (cmd_->count("--" + key) == 0) it->second(value);
        }
    }

    CLI::App* app() { return cmd_; }

private:
    CLI::App* cmd_;
    std::string config_path_;
    std::map<std::string, std::function<void(const std::string&)>> setters_;
};

struct Options {
    PipelineConfig pipeline;
    SynthConfig synth;
    std::string weight_mode = "ch";
    std::string sample_rho = "contiguous";
    std::uint64_t seed = 0;
    int threads = 1;
};

void add_flow_options(ConfigurableCommand& cmd, FlowSolverConfig& cfg) {
    cmd.option("alpha", cfg.alpha, "smoothness weight");
    cmd.option("psi-epsilon", cfg.psi_epsilon, "Charbonnier regularizer");
    cmd.option("gradient-weight", cfg.gradient_weight, "gradient constancy weight");
    cmd.option("pyramid-factor", cfg.pyramid_factor, "pyramid downsampling factor");
    cmd.option("pyramid-min-size", cfg.pyramid_min_size, "smallest pyramid side");
    cmd.option("outer-iterations", cfg.outer_iterations, "re-warp steps per level");
    cmd.option("inner-iterations", cfg.inner_iterations, "relag + SOR sweeps per warp");
    cmd.option("sor-omega", cfg.sor_omega, "SOR relaxation factor");
}

void add_gate_options(ConfigurableCommand& cmd, MotionGateConfig& cfg) {
    cmd.option("fraction-p", cfg.fraction_p, "moving-feature fraction for the gate");
    cmd.option("magnitude-threshold", cfg.magnitude_threshold,
               "per-feature magnitude threshold, px");
    cmd.option("window-stride-k", cfg.window_stride_k, "Gaussian window half-width");
    cmd.option("gaussian-sigma", cfg.gaussian_sigma, "Gaussian window sigma");
}

void add_grouping_options(ConfigurableCommand& cmd, GroupingConfig& cfg) {
    cmd.option("k-min", cfg.k_min, "smallest cluster count");
    cmd.option("k-max", cfg.k_max, "largest cluster count");
    cmd.option("kmeans-restarts", cfg.kmeans_restarts, "k-means restarts");
    cmd.option("kmeans-max-iters", cfg.kmeans_max_iters, "k-means iteration cap");
    cmd.option("degree-floor", cfg.degree_floor, "Laplacian degree floor");
}

void add_synth_options(ConfigurableCommand& cmd, SynthConfig& cfg) {
    cmd.option("global-motion-sigma", cfg.global_motion_sigma, "head speed scale, px/frame");
    cmd.option("group-motion-sigma", cfg.group_motion_sigma, "component offset step, px");
    cmd.option("noise-sigma", cfg.noise_sigma, "i.i.d. landmark jitter, px");
    cmd.option("talk-probability", cfg.talk_probability, "talk segment entry chance");
    cmd.option("fake-decorrelation", cfg.fake_decorrelation,
               "motion re-aim probability in fake mode");
}

void add_common(ConfigurableCommand& cmd, Options& opt) {
    cmd.option("seed", opt.seed, "master seed for all stochastic stages");
    cmd.option("threads", opt.threads, "worker threads for pair-level parallelism");
}

std::vector<fs::path> list_files(const fs::path& dir, const std::string& ext) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ext) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

int parse_frame_index(const fs::path& file) {
    const std::string stem = file.stem().string();
    try {
        std::size_t used = 0;
        const int value = std::stoi(stem, &used);
        if (used != stem.size() || value < 0) throw FormatError("");
        return value;
    } catch (const std::exception&) {
        throw FormatError("frame file name must be a zero-padded index: " + file.string());
    }
}

std::string flo_name(int a, int b) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "flow_%06d_%06d.flo", a, b);
    return buf;
}

// ---------------------------------------------------------------- flow ----

int cmd_flow(const fs::path& frames_dir, const fs::path& out_dir, const Options& opt) {
    const auto files = list_files(frames_dir, ".pgm");
    if (files.size() < 2) {
        throw EmptyInputError("need at least 2 PGM frames in " + frames_dir.string());
    }
    fs::create_directories(out_dir);

    std::vector<std::pair<int, int>> pairs;
    for (std::size_t i = 1; i < files.size(); ++i) {
        pairs.emplace_back(parse_frame_index(files[i - 1]), parse_frame_index(files[i]));
    }
    parallel_for(pairs.size(), opt.threads, [&](std::size_t p) {
        const Frame a = read_pgm(files[p]);
        const Frame b = read_pgm(files[p + 1]);
        const FlowField flow = estimate_flow(a, b, opt.pipeline.flow);
        write_flo(flow, out_dir / flo_name(pairs[p].first, pairs[p].second));
    });
    std::cout << "wrote " << pairs.size() << " flow fields to " << out_dir.string() << "\n";
    return 0;
}

// ------------------------------------------------------------- pattern ----

int cmd_pattern(const std::string& frames_dir, const std::string& flo_dir,
                const std::string& motion_csv, const std::string& landmarks_csv,
                int landmark_count, const fs::path& out_csv, const std::string& heatmap,
                const std::string& diagnostics, const std::string& dump_motion,
                const std::string& video_id, Options& opt) {
    opt.pipeline.rng_seed = opt.seed;
    opt.pipeline.threads = opt.threads;
    opt.pipeline.weight_mode = parse_weight_mode(opt.weight_mode);
    if (opt.sample_rho != "random" && opt.sample_rho != "contiguous") {
        throw ConfigError("sample-rho must be contiguous or random");
    }
    opt.pipeline.sample_rho_random = opt.sample_rho == "random";

    std::vector<MotionFeatureSet> motions;
    std::string id = video_id;
    if (!motion_csv.empty()) {
        motions = read_motion_csv(motion_csv, opt.pipeline.gate);
        if (id.empty()) id = fs::path(motion_csv).stem().string();
    } else {
        if (landmarks_csv.empty()) {
            throw ConfigError("--landmarks is required with --frames or --flo input");
        }
        const LandmarkTrack track = read_track(landmarks_csv, landmark_count);
        if (id.empty()) id = track.video_id;
        if (!frames_dir.empty()) {
            std::map<int, fs::path> by_index;
            for (const auto& f : list_files(frames_dir, ".pgm")) {
                by_index[parse_frame_index(f)] = f;
            }
            motions = motions_for_track(
                track,
                [&](int a, int b) {
                    const auto ita = by_index.find(a);
                    const auto itb = by_index.find(b);
                    if (ita == by_index.end() || itb == by_index.end()) {
                        throw IoError("missing frame file for pair " + std::to_string(a) +
                                      "," + std::to_string(b));
                    }
                    return estimate_flow(read_pgm(ita->second), read_pgm(itb->second),
                                         opt.pipeline.flow);
                },
                opt.pipeline);
        } else if (!flo_dir.empty()) {
            motions = motions_for_track(
                track,
                [&](int a, int b) { return read_flo(fs::path(flo_dir) / flo_name(a, b)); },
                opt.pipeline);
        } else {
            throw ConfigError("one of --frames, --flo or --motion is required");
        }
    }

    if (!dump_motion.empty()) write_motion_csv(motions, dump_motion);

    PairStats stats;
    const auto rhos = rhos_from_motions(motions, opt.pipeline, &stats);
    if (rhos.empty()) throw EmptyInputError("zero surviving pairs after the motion gate");

    const auto chosen = select_rhos(rhos, opt.pipeline.n_pairs, opt.pipeline.sample_rho_random,
                                    derive_seed(opt.seed, rng_stage::kSplit));
    const CoMotionPattern pattern = accumulate(chosen);

    PatternFileMeta meta;
    meta.video_id = id;
    meta.weight_mode = opt.pipeline.weight_mode;
    meta.pairs_used = stats.pairs_used;
    meta.pairs_gated = stats.pairs_gated;
    meta.weight_min = stats.weight_min;
    meta.weight_max = stats.weight_max;
    meta.weight_mean = stats.weight_mean;
    if (out_csv.has_parent_path()) fs::create_directories(out_csv.parent_path());
    write_pattern(pattern, meta, out_csv);
    if (!heatmap.empty()) write_heatmap(pattern, heatmap);

    if (!diagnostics.empty()) {
        nlohmann::json diag = nlohmann::json::array();
        for (const auto& rho : chosen) {
            int k = 0;
            for (const auto l : rho.labels) k = std::max(k, static_cast<int>(l) + 1);
            const double ch = opt.pipeline.weight_mode == WeightMode::k_times_ch
                                  ? rho.weight / k
                                  : rho.weight;
            diag.push_back({{"pair", rho.pair_index},
                            {"k", k},
                            {"ch_score", ch},
                            {"labels", rho.labels}});
        }
        std::ofstream out(diagnostics, std::ios::binary);
        if (!out) throw IoError("cannot open diagnostics file " + diagnostics);
        out << diag.dump(2) << "\n";
    }

    std::cout << "pattern " << id << ": pairs_used " << stats.pairs_used << ", pairs_gated "
              << stats.pairs_gated << ", N " << pattern.pair_count << ", total_weight "
              << pattern.total_weight << "\n";
    return 0;
}

// -------------------------------------------------------------- detect ----

std::vector<fs::path> pattern_files(const std::vector<std::string>& patterns,
                                    const std::string& dir) {
    std::vector<fs::path> files;
    for (const auto& p : patterns) files.emplace_back(p);
    if (!dir.empty()) {
        const auto listed = list_files(dir, ".csv");
        files.insert(files.end(), listed.begin(), listed.end());
    }
    return files;
}

struct LoadedPattern {
    std::string id;
    NormalizedPattern normalized;
};

std::vector<LoadedPattern> load_patterns(const std::vector<fs::path>& files, double epsilon) {
    std::vector<LoadedPattern> out;
    out.reserve(files.size());
    for (const auto& f : files) {
        auto [pattern, meta] = read_pattern(f);
        out.push_back({meta.video_id.empty() ? f.stem().string() : meta.video_id,
                       normalize(pattern, epsilon)});
    }
    if (out.empty()) throw EmptyInputError("no pattern files given");
    return out;
}

// Weighted merge of pattern files, equivalent to pooling their correlation
// matrices (rho-level subsampling is not recoverable from pattern files).
int build_template_from_patterns(const std::string& real_dir, const fs::path& template_out) {
    const auto files = pattern_files({}, real_dir);
    if (files.empty()) throw EmptyInputError("no pattern files in " + real_dir);
    CoMotionPattern merged;
    bool first = true;
    PatternFileMeta meta;
    for (const auto& f : files) {
        auto [pattern, file_meta] = read_pattern(f);
        if (first) {
            merged = pattern;
            meta.weight_mode = file_meta.weight_mode;
            first = false;
        } else {
            if (pattern.acc.rows() != merged.acc.rows()) {
                throw FormatError("pattern size mismatch in " + f.string());
            }
            merged.acc += pattern.acc;
            merged.total_weight += pattern.total_weight;
            merged.pair_count += pattern.pair_count;
        }
        meta.pairs_used += file_meta.pairs_used;
        meta.pairs_gated += file_meta.pairs_gated;
    }
    meta.video_id = "template";
    if (template_out.has_parent_path()) fs::create_directories(template_out.parent_path());
    write_pattern(merged, meta, template_out);
    std::cout << "template from " << files.size() << " patterns, N " << merged.pair_count
              << "\n";
    return 0;
}

int cmd_detect(const std::string& template_file, const std::vector<std::string>& patterns,
               const std::string& pattern_dir, const std::string& real_dir,
               const std::string& fake_dir, double threshold, const std::string& roc_out,
               const std::string& scores_out, const Options& opt) {
    if (template_file.empty()) throw ConfigError("missing template (--template)");
    auto [tpl_pattern, tpl_meta] = read_pattern(template_file);
    RealTemplate tpl;
    tpl.pattern = normalize(tpl_pattern, opt.pipeline.epsilon);
    tpl.source_count = tpl_pattern.pair_count;

    struct Row {
        std::string id;
        double score;
        std::string label;
    };
    std::vector<Row> rows;
    std::vector<double> scores_real, scores_fake;

    if (!real_dir.empty() || !fake_dir.empty()) {
        for (const auto& [dir, label] :
             std::vector<std::pair<std::string, std::string>>{{real_dir, "real"},
                                                              {fake_dir, "fake"}}) {
            if (dir.empty()) continue;
            for (const auto& lp : load_patterns(pattern_files({}, dir), opt.pipeline.epsilon)) {
                const double score = anomaly_score(lp.normalized, tpl);
                rows.push_back({lp.id, score, label});
                (label == "fake" ? scores_fake : scores_real).push_back(score);
            }
        }
    } else {
        const auto files = pattern_files(patterns, pattern_dir);
        for (const auto& lp : load_patterns(files, opt.pipeline.epsilon)) {
            const double score = anomaly_score(lp.normalized, tpl);
            std::string label = "unknown";
            if (std::isfinite(threshold)) label = score > threshold ? "fake" : "real";
            rows.push_back({lp.id, score, label});
        }
    }

    if (scores_out.empty()) throw ConfigError("missing --out for the score report");
    std::ofstream out(scores_out, std::ios::binary);
    if (!out) throw IoError("cannot open score report " + scores_out);
    out << "video_id,score,label\n";
    char buf[48];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%.17g", row.score);
        out << row.id << "," << buf << "," << row.label << "\n";
    }

    if (!scores_real.empty() && !scores_fake.empty()) {
        const RocCurve curve = roc(scores_real, scores_fake);
        std::printf("auc %.6f\n", curve.auc);
        std::printf("youden_threshold %.9g accuracy %.6f\n", curve.youden_threshold,
                    curve.youden_accuracy);
        if (!roc_out.empty()) {
            std::ofstream rout(roc_out, std::ios::binary);
            if (!rout) throw IoError("cannot open ROC file " + roc_out);
            rout << "fpr,tpr\n";
            for (const auto& [fpr, tpr] : curve.points) {
                std::snprintf(buf, sizeof(buf), "%.17g,%.17g", fpr, tpr);
                rout << buf << "\n";
            }
        }
    } else if (!roc_out.empty()) {
        throw ConfigError("--roc needs both --real and --fake pattern directories");
    }
    return 0;
}

// ------------------------------------------------------- train/classify ----

int cmd_train(const std::string& real_dir, const std::string& fake_dir,
              const fs::path& model_out, const Options& opt) {
    std::vector<NormalizedPattern> x;
    std::vector<int> y;
    for (const auto& lp : load_patterns(pattern_files({}, real_dir), opt.pipeline.epsilon)) {
        x.push_back(lp.normalized);
        y.push_back(0);
    }
    for (const auto& lp : load_patterns(pattern_files({}, fake_dir), opt.pipeline.epsilon)) {
        x.push_back(lp.normalized);
        y.push_back(1);
    }
    const StumpEnsemble model = train_adaboost(x, y, opt.pipeline.adaboost_rounds);
    if (model_out.has_parent_path()) fs::create_directories(model_out.parent_path());
    write_model(model, model_out);
    std::cout << "trained " << model.stumps.size() << " stumps on " << x.size()
              << " patterns\n";
    return 0;
}

int cmd_classify(const std::string& model_file, const std::vector<std::string>& patterns,
                 const std::string& pattern_dir, const std::string& real_dir,
                 const std::string& fake_dir, const std::string& report_out,
                 const Options& opt) {
    const StumpEnsemble model = read_model(model_file);
    std::ofstream out(report_out, std::ios::binary);
    if (!out) throw IoError("cannot open report " + report_out);
    out << "video_id,margin,prediction,label\n";

    int correct = 0, total = 0;
    char buf[48];
    auto classify_set = [&](const std::vector<fs::path>& files, const std::string& label) {
        for (const auto& lp : load_patterns(files, opt.pipeline.epsilon)) {
            const auto [verdict, margin] = classify(model, lp.normalized);
            const std::string prediction = verdict == Verdict::fake ? "fake" : "real";
            std::snprintf(buf, sizeof(buf), "%.17g", margin);
            out << lp.id << "," << buf << "," << prediction << "," << label << "\n";
            if (!label.empty()) {
                ++total;
                if (prediction == label) ++correct;
            }
        }
    };
    if (!real_dir.empty() || !fake_dir.empty()) {
        if (!real_dir.empty()) classify_set(pattern_files({}, real_dir), "real");
        if (!fake_dir.empty()) classify_set(pattern_files({}, fake_dir), "fake");
        std::printf("accuracy %.6f (%d/%d)\n", total ? double(correct) / total : 0.0, correct,
                    total);
    } else {
        classify_set(pattern_files(patterns, pattern_dir), "");
    }
    return 0;
}

// --------------------------------------------------------------- synth ----

int cmd_synth(const fs::path& out_dir, int tracks, bool render, const std::string& mode,
              Options& opt) {
    opt.synth.mode = mode == "fake" ? SynthMode::fake_like : SynthMode::real_like;
    fs::create_directories(out_dir);
    const FaceModel model = FaceModel::standard();
    for (int i = 0; i < tracks; ++i) {
        SynthConfig cfg = opt.synth;
        cfg.rng_seed = derive_seed(derive_seed(opt.seed, rng_stage::kSynth),
                                   static_cast<std::uint64_t>(i));
        SynthTrack synth_track = generate_track(model, cfg);
        char prefix[48];
        std::snprintf(prefix, sizeof(prefix), "track_%03d", i);
        synth_track.track.video_id =
            std::string(cfg.mode == SynthMode::real_like ? "real_" : "fake_") +
            std::to_string(i);
        write_track(synth_track.track, out_dir / (std::string(prefix) + "_landmarks.csv"));
        write_motion_csv(synth_track.motions, out_dir / (std::string(prefix) + "_motion.csv"));
        if (render) {
            const fs::path frame_dir = out_dir / (std::string(prefix) + "_frames");
            fs::create_directories(frame_dir);
            const auto frames = render_frames(model, synth_track.track,
                                              derive_seed(cfg.rng_seed, rng_stage::kTexture));
            for (std::size_t t = 0; t < frames.size(); ++t) {
                char name[24];
                std::snprintf(name, sizeof(name), "%06zu.pgm", t);
                write_pgm(frames[t], frame_dir / name);
            }
        }
    }
    std::cout << "wrote " << tracks << " synthetic tracks to " << out_dir.string() << "\n";
    return 0;
}

// -------------------------------------------------------------- report ----

int cmd_report(const fs::path& out_dir, int tracks_per_class, int frames,
               const std::vector<int>& n_values, double holdout, Options& opt) {
    BenchmarkConfig cfg;
    cfg.tracks_per_class = tracks_per_class;
    cfg.frames = frames;
    if (!n_values.empty()) cfg.n_values = n_values;
    cfg.holdout_fraction = holdout;
    cfg.seed = opt.seed;
    cfg.synth = opt.synth;
    cfg.pipeline = opt.pipeline;
    cfg.pipeline.rng_seed = opt.seed;
    cfg.pipeline.threads = opt.threads;
    cfg.pipeline.weight_mode = parse_weight_mode(opt.weight_mode);
    cfg.pipeline.sample_rho_random = opt.sample_rho == "random";

    const BenchmarkResult result = run_benchmark(cfg, out_dir);
    std::printf("synthetic benchmark: %d tracks/class, %d frames, seed %llu\n",
                tracks_per_class, frames, static_cast<unsigned long long>(opt.seed));
    std::printf("template: %d correlation matrices; train %d, test %d per class\n",
                result.template_sources, result.train_per_class, result.test_per_class);
    std::printf("%6s %12s %16s %16s\n", "N", "anomaly_auc", "anomaly_accuracy",
                "adaboost_accuracy");
    for (const auto& per_n : result.per_n) {
        std::printf("%6d %12.4f %16.4f %16.4f\n", per_n.n, per_n.anomaly_auc,
                    per_n.anomaly_accuracy, per_n.adaboost_accuracy);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"co-motion pattern pipeline for exposing deep-faked face videos"};
    app.require_subcommand(1);
    Options opt;

    // flow
    ConfigurableCommand flow_cmd(
        app.add_subcommand("flow", "estimate dense flow for consecutive frames"));
    std::string frames_dir, out_dir;
    flow_cmd.app()->add_option("--frames", frames_dir, "directory of zero-padded PGM frames")
        ->required();
    flow_cmd.app()->add_option("--out", out_dir, "output directory for .flo files")->required();
    add_flow_options(flow_cmd, opt.pipeline.flow);
    add_common(flow_cmd, opt);

    // pattern
    ConfigurableCommand pattern_cmd(
        app.add_subcommand("pattern", "build a co-motion pattern for one video"));
    std::string p_frames, p_flo, p_motion, p_landmarks, p_heatmap, p_diag, p_dump, p_video_id;
    std::string p_out;
    int landmark_count = 68;
    pattern_cmd.app()->add_option("--frames", p_frames,
                                  "PGM frame directory (flow estimated here)");
    pattern_cmd.app()->add_option("--flo", p_flo, "directory of precomputed flow_A_B.flo");
    pattern_cmd.app()->add_option("--motion", p_motion,
                                  "per-pair motion CSV (pair,landmark,u,v)");
    pattern_cmd.app()->add_option("--landmarks", p_landmarks,
                                  "landmark CSV (frame,landmark,x,y)");
    pattern_cmd.option("landmark-count", landmark_count, "landmarks per frame in the CSV (51|68)")
        ->check(CLI::IsMember({51, 68}));
    pattern_cmd.app()->add_option("--out", p_out, "output pattern CSV")->required();
    pattern_cmd.app()->add_option("--heatmap", p_heatmap, "optional heatmap PGM");
    pattern_cmd.app()->add_option("--diagnostics", p_diag, "optional per-pair grouping JSON");
    pattern_cmd.app()->add_option("--dump-motion", p_dump, "optional motion feature CSV dump");
    pattern_cmd.app()->add_option("--video-id", p_video_id, "video id recorded in the sidecar");
    pattern_cmd.option("n-pairs", opt.pipeline.n_pairs, "rho budget per pattern (0 = all)");
    pattern_cmd.option("sample-rho", opt.sample_rho, "contiguous | random");
    pattern_cmd.option("weight-mode", opt.weight_mode, "ch | k-times-ch");
    pattern_cmd.option("epsilon", opt.pipeline.epsilon, "normalization smoothing");
    add_flow_options(pattern_cmd, opt.pipeline.flow);
    add_gate_options(pattern_cmd, opt.pipeline.gate);
    add_grouping_options(pattern_cmd, opt.pipeline.grouping);
    add_common(pattern_cmd, opt);

    // detect
    ConfigurableCommand detect_cmd(
        app.add_subcommand("detect", "anomaly-score patterns against a template"));
    std::string d_template, d_pattern_dir, d_real, d_fake, d_roc, d_scores, d_template_out;
    std::vector<std::string> d_patterns;
    bool d_build_template = false;
    double d_threshold = std::numeric_limits<double>::quiet_NaN();
    detect_cmd.app()->add_flag("--build-template", d_build_template,
                               "pool --real pattern files into a template");
    detect_cmd.app()->add_option("--template-out", d_template_out,
                                 "output template pattern CSV");
    detect_cmd.app()->add_option("--template", d_template, "template pattern CSV");
    detect_cmd.app()->add_option("--patterns", d_patterns, "pattern CSV files to score");
    detect_cmd.app()->add_option("--pattern-dir", d_pattern_dir, "directory of pattern CSVs");
    detect_cmd.app()->add_option("--real", d_real, "directory of real pattern CSVs");
    detect_cmd.app()->add_option("--fake", d_fake, "directory of fake pattern CSVs");
    detect_cmd.option("threshold", d_threshold, "decision threshold on the JS score");
    detect_cmd.app()->add_option("--roc", d_roc, "write the ROC sweep CSV here");
    detect_cmd.app()->add_option("--out", d_scores, "score report CSV");
    detect_cmd.option("epsilon", opt.pipeline.epsilon, "normalization smoothing");
    add_common(detect_cmd, opt);

    // train
    ConfigurableCommand train_cmd(
        app.add_subcommand("train", "train the AdaBoost classifier"));
    std::string t_real, t_fake, t_model;
    train_cmd.app()->add_option("--real", t_real, "directory of real pattern CSVs")->required();
    train_cmd.app()->add_option("--fake", t_fake, "directory of fake pattern CSVs")->required();
    train_cmd.app()->add_option("--out", t_model, "model JSON output")->required();
    train_cmd.option("rounds", opt.pipeline.adaboost_rounds, "boosting rounds");
    train_cmd.option("epsilon", opt.pipeline.epsilon, "normalization smoothing");
    add_common(train_cmd, opt);

    // classify
    ConfigurableCommand classify_cmd(
        app.add_subcommand("classify", "classify patterns with a model"));
    std::string c_model, c_pattern_dir, c_real, c_fake, c_report;
    std::vector<std::string> c_patterns;
    classify_cmd.app()->add_option("--model", c_model, "model JSON")->required();
    classify_cmd.app()->add_option("--patterns", c_patterns, "pattern CSV files");
    classify_cmd.app()->add_option("--pattern-dir", c_pattern_dir, "directory of pattern CSVs");
    classify_cmd.app()->add_option("--real", c_real, "directory of real pattern CSVs");
    classify_cmd.app()->add_option("--fake", c_fake, "directory of fake pattern CSVs");
    classify_cmd.app()->add_option("--out", c_report, "report CSV")->required();
    classify_cmd.option("epsilon", opt.pipeline.epsilon, "normalization smoothing");
    add_common(classify_cmd, opt);

    // synth
    ConfigurableCommand synth_cmd(
        app.add_subcommand("synth", "generate synthetic labeled tracks"));
    std::string s_out, s_mode = "real";
    int s_tracks = 1;
    bool s_render = false;
    synth_cmd.app()->add_option("--out", s_out, "output directory")->required();
    synth_cmd.option("tracks", s_tracks, "number of tracks");
    synth_cmd.option("frames", opt.synth.frames, "frames per track");
    synth_cmd.option("mode", s_mode, "real | fake")->check(CLI::IsMember({"real", "fake"}));
    synth_cmd.app()->add_flag("--render", s_render, "render textured PGM frames");
    add_synth_options(synth_cmd, opt.synth);
    add_common(synth_cmd, opt);

    // report
    ConfigurableCommand report_cmd(
        app.add_subcommand("report", "run the synthetic end-to-end benchmark"));
    std::string r_out;
    int r_tracks = 200, r_frames = 90;
    double r_holdout = 0.5;
    std::vector<int> r_n_values;
    report_cmd.app()->add_option("--out", r_out, "artifact output directory");
    report_cmd.option("tracks-per-class", r_tracks, "tracks per class");
    report_cmd.option("frames", r_frames, "frames per track");
    report_cmd.option("n-list", r_n_values, "rho budgets to sweep")->delimiter(',');
    report_cmd.option("holdout", r_holdout, "held-out fraction per class");
    report_cmd.option("weight-mode", opt.weight_mode, "ch | k-times-ch");
    report_cmd.option("sample-rho", opt.sample_rho, "contiguous | random");
    report_cmd.option("rounds", opt.pipeline.adaboost_rounds, "boosting rounds");
    report_cmd.option("template-sample", opt.pipeline.template_sample_size,
                      "rho sample size for the template");
    report_cmd.option("epsilon", opt.pipeline.epsilon, "normalization smoothing");
    add_synth_options(report_cmd, opt.synth);
    add_gate_options(report_cmd, opt.pipeline.gate);
    add_grouping_options(report_cmd, opt.pipeline.grouping);
    add_common(report_cmd, opt);

    try {
        app.parse(argc, argv);
        for (auto* cmd : {&flow_cmd, &pattern_cmd, &detect_cmd, &train_cmd, &classify_cmd,
                          &synth_cmd, &report_cmd}) {
            if (cmd->app()->parsed()) cmd->apply_config();
        }

        if (flow_cmd.app()->parsed()) return cmd_flow(frames_dir, out_dir, opt);
        if (pattern_cmd.app()->parsed()) {
            return cmd_pattern(p_frames, p_flo, p_motion, p_landmarks, landmark_count, p_out,
                               p_heatmap, p_diag, p_dump, p_video_id, opt);
        }
        if (detect_cmd.app()->parsed()) {
            if (d_build_template) {
                if (d_real.empty() || d_template_out.empty()) {
                    throw ConfigError("--build-template needs --real and --template-out");
                }
                const int rc = build_template_from_patterns(d_real, d_template_out);
                if (d_scores.empty() && d_fake.empty()) return rc;
                d_template = d_template_out;
            }
            return cmd_detect(d_template, d_patterns, d_pattern_dir, d_real, d_fake,
                              d_threshold, d_roc, d_scores, opt);
        }
        if (train_cmd.app()->parsed()) return cmd_train(t_real, t_fake, t_model, opt);
        if (classify_cmd.app()->parsed()) {
            return cmd_classify(c_model, c_patterns, c_pattern_dir, c_real, c_fake, c_report,
                                opt);
        }
        if (synth_cmd.app()->parsed()) return cmd_synth(s_out, s_tracks, s_render, s_mode, opt);
        if (report_cmd.app()->parsed()) {
            return cmd_report(r_out, r_tracks, r_frames, r_n_values, r_holdout, opt);
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const Error& e) {
        std::cerr << e.code() << ": " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "E_ARG: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "E_INTERNAL: " << e.what() << "\n";
        return 3;
    }
}
