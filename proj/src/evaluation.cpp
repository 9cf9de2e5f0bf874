#include "earsift/evaluation.hpp"

#include "earsift/errors.hpp"
#include "earsift/random.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace earsift {

using nlohmann::json;

namespace {

std::string fmt_full(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt2(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

} // namespace

Dataset load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        raise_io("file-not-found", "cannot open manifest " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        raise_data("parse-failure", path.string() + ": " + e.what());
    }
    if (!j.is_array())
        raise_data("parse-failure", path.string() + ": manifest must be a JSON list");

    const auto base = path.parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : base / fp;
    };

    Dataset ds;
    std::set<std::string> seen;
    try {
        for (const json& js : j) {
            DatasetSubject subject;
            subject.subject_id = js.at("subject_id").get<std::string>();
            if (!seen.insert(subject.subject_id).second)
                raise_data("parse-failure", "duplicate subject_id " + subject.subject_id);
            subject.reference = resolve(js.at("reference").get<std::string>());
            for (const json& jp : js.at("probes"))
                subject.probes.push_back(resolve(jp.get<std::string>()));
            if (subject.probes.empty())
                raise_data("parse-failure", subject.subject_id + " has no probes");
            if (js.contains("mask") && !js.at("mask").is_null())
                subject.mask = resolve(js.at("mask").get<std::string>());
            ds.subjects.push_back(std::move(subject));
        }
    } catch (const json::exception& e) {
        raise_data("parse-failure", path.string() + ": " + e.what());
    }
    return ds;
}

void save_manifest(const Dataset& ds, const std::filesystem::path& path) {
    const auto base = path.parent_path();
    auto relativize = [&](const std::filesystem::path& p) {
        const auto rel = p.lexically_relative(base);
        return (!rel.empty() && rel.native()[0] != '.') ? rel.generic_string()
                                                        : p.generic_string();
    };

    json j = json::array();
    for (const DatasetSubject& s : ds.subjects) {
        json js;
        js["subject_id"] = s.subject_id;
        js["reference"] = relativize(s.reference);
        json probes = json::array();
        for (const auto& p : s.probes)
            probes.push_back(relativize(p));
        js["probes"] = std::move(probes);
        if (s.mask)
            js["mask"] = relativize(*s.mask);
        j.push_back(std::move(js));
    }
    std::ofstream out(path);
    if (!out)
        raise_io("io-failure", "cannot write " + path.string());
    out << j.dump(1) << "\n";
}

// ---------------------------------------------------------------------------
// synthetic dataset
// ---------------------------------------------------------------------------

namespace {

Eigen::Vector3d hsv_to_rgb(double h, double s, double v) {
    h = h - std::floor(h);
    const double c = v * s;
    const double hp = h * 6.0;
    const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(hp) % 6) {
        case 0: r = c; g = x; break;
        case 1: r = x; g = c; break;
        case 2: g = c; b = x; break;
        case 3: g = x; b = c; break;
        case 4: r = x; b = c; break;
        default: r = c; b = x; break;
    }
    const double m = v - c;
    return {r + m, g + m, b + m};
}

struct Blob {
    double cx, cy, sx, sy;
    Eigen::Vector3d color;
};

struct Wave {
    double fx, fy, phase, amp;
};

// Continuous scene: smooth color blobs over a background plus band-limited
// luminance texture. Probes are rendered by sampling the same scene through
// a small rigid transform, so their content matches exactly.
struct Scene {
    Eigen::Vector3d background;
    std::vector<Blob> blobs;
    std::vector<Wave> waves;
    double texture_amp;
};

constexpr int kSynthWidth = 237;
constexpr int kSynthHeight = 125;

Scene make_scene(Rng& rng) {
    Scene scene;
    scene.background = hsv_to_rgb(rng.next_double(), rng.uniform(0.15, 0.35), rng.uniform(0.45, 0.7));

    const int n_blobs = 2 + static_cast<int>(rng.next_below(3)); // 2..4
    for (int b = 0; b < n_blobs; ++b) {
        Blob blob;
        blob.cx = rng.uniform(0.15, 0.85) * kSynthWidth;
        blob.cy = rng.uniform(0.15, 0.85) * kSynthHeight;
        blob.sx = rng.uniform(14.0, 42.0);
        blob.sy = rng.uniform(14.0, 42.0);
        blob.color = hsv_to_rgb(rng.next_double(), rng.uniform(0.3, 0.7), rng.uniform(0.35, 0.9));
        scene.blobs.push_back(blob);
    }

    double amp_sum = 0.0;
    for (int k = 0; k < 24; ++k) {
        Wave w;
        const double angle = rng.uniform(0.0, M_PI);
        const double freq = rng.uniform(0.02, 0.10); // cycles per pixel
        w.fx = freq * std::cos(angle);
        w.fy = freq * std::sin(angle);
        w.phase = rng.uniform(0.0, 2.0 * M_PI);
        w.amp = rng.uniform(0.5, 1.0);
        amp_sum += w.amp;
        scene.waves.push_back(w);
    }
    scene.texture_amp = 0.35 / amp_sum;
    return scene;
}

struct RigidTransform {
    double angle = 0.0; // radians
    double tx = 0.0;
    double ty = 0.0;
};

ColorImage render_scene(const Scene& scene, const RigidTransform& t, double brightness,
                        std::uint64_t noise_seed) {
    ColorImage img;
    img.width = kSynthWidth;
    img.height = kSynthHeight;
    img.data.resize(img.pixel_count() * 3);

    const double cx = 0.5 * (kSynthWidth - 1);
    const double cy = 0.5 * (kSynthHeight - 1);
    const double ca = std::cos(t.angle), sa = std::sin(t.angle);
    Rng noise(noise_seed);

    for (int y = 0; y < kSynthHeight; ++y) {
        for (int x = 0; x < kSynthWidth; ++x) {
            const double dx = x - cx, dy = y - cy;
            const double xs = ca * dx - sa * dy + cx + t.tx;
            const double ys = sa * dx + ca * dy + cy + t.ty;

            Eigen::Vector3d color = scene.background;
            double weight_total = 1.0;
            Eigen::Vector3d weighted = scene.background;
            for (const Blob& b : scene.blobs) {
                const double ex = (xs - b.cx) / b.sx;
                const double ey = (ys - b.cy) / b.sy;
                const double w = std::exp(-0.5 * (ex * ex + ey * ey));
                weighted += w * b.color;
                weight_total += w;
            }
            color = weighted / weight_total;

            double texture = 0.0;
            for (const Wave& w : scene.waves)
                texture += w.amp * std::sin(2.0 * M_PI * (w.fx * xs + w.fy * ys) + w.phase);
            texture *= scene.texture_amp;

            for (int c = 0; c < 3; ++c) {
                double v = (color[c] + texture) * brightness + 0.004 * noise.next_gaussian();
                img.at(x, y, c) = std::clamp(v, 0.0, 1.0);
            }
        }
    }
    return img;
}

} // namespace

Dataset generate_synthetic_dataset(int n_subjects, const std::filesystem::path& out_dir,
                                   std::uint64_t seed, int probes_per_subject) {
    if (n_subjects < 2)
        raise_usage("invalid-parameter", "need at least 2 subjects");
    if (probes_per_subject < 1)
        raise_usage("invalid-parameter", "need at least 1 probe per subject");

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
        raise_io("io-failure", "cannot create " + out_dir.string() + ": " + ec.message());

    Dataset ds;
    for (int s = 0; s < n_subjects; ++s) {
        char id[16];
        std::snprintf(id, sizeof id, "s%03d", s + 1);

        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
        const Scene scene = make_scene(rng);

        DatasetSubject subject;
        subject.subject_id = id;
        subject.reference = out_dir / (std::string(id) + "_ref.png");
        save_png(render_scene(scene, RigidTransform{}, 1.0,
                              derive_seed(seed, 1000003ULL * (s + 1))),
                 subject.reference);

        for (int p = 0; p < probes_per_subject; ++p) {
            RigidTransform t;
            t.angle = rng.uniform(-5.0, 5.0) * M_PI / 180.0;
            t.tx = rng.uniform(-3.0, 3.0);
            t.ty = rng.uniform(-3.0, 3.0);
            const double brightness = rng.uniform(0.95, 1.05);
            const auto probe_path =
                out_dir / (std::string(id) + "_probe" + std::to_string(p + 1) + ".png");
            save_png(render_scene(scene, t, brightness,
                                  derive_seed(seed, 2000003ULL * (s + 1) + p)),
                     probe_path);
            subject.probes.push_back(probe_path);
        }
        ds.subjects.push_back(std::move(subject));
    }

    save_manifest(ds, out_dir / "manifest.json");
    return ds;
}

// ---------------------------------------------------------------------------
// protocol
// ---------------------------------------------------------------------------

namespace {

struct EnrolledSubject {
    std::string subject_id;
    // per mode: reference template (self- or global-gated) and per-probe
    // color analyses ready for pair-wise gating
    std::map<SegmentationMode, Template> reference_templates;
    std::map<SegmentationMode, ColorAnalysis> reference_analysis;
    std::vector<std::map<SegmentationMode, ColorAnalysis>> probe_analysis;
};

MatchResult run_match(const Template& probe, const Template& ref, Strategy strategy,
                      const Config& config) {
    return strategy == Strategy::nn ? match_nn(probe, ref, config.match.ratio)
                                    : match_ed(probe, ref, config.match.d_abs);
}

} // namespace

std::vector<ProtocolRun> run_protocol_matrix(const Dataset& ds, const Config& config,
                                             const std::vector<SegmentationMode>& modes,
                                             const std::vector<Strategy>& strategies,
                                             std::vector<std::string>* warnings) {
    if (ds.subjects.empty())
        raise_data("empty-dataset", "no subjects in dataset");

    // Global gate model, when requested.
    MixtureModel global_model;
    if (config.gate_mode == GateMode::global) {
        if (config.global_model_path.empty())
            raise_usage("invalid-parameter", "gate_mode=global requires gate.global_model");
        global_model = load_model(config.global_model_path);
    }
    const MixtureModel* gate_global =
        config.gate_mode == GateMode::global ? &global_model : nullptr;

    std::vector<EnrolledSubject> enrolled;
    for (const DatasetSubject& subject : ds.subjects) {
        try {
            EnrolledSubject e;
            e.subject_id = subject.subject_id;

            std::optional<Mask> mask;
            if (subject.mask)
                mask = load_mask(*subject.mask);
            const Mask* mask_ptr = mask ? &*mask : nullptr;

            const ColorImage ref_img = load_image(subject.reference);
            const ImageFeatures ref_features = compute_features(ref_img, mask_ptr, config.sift);
            for (SegmentationMode mode : modes) {
                const int k = mode == SegmentationMode::prior ? 1 : config.k;
                ColorAnalysis analysis = analyze_colors(ref_features, k, config.seed);
                e.reference_templates[mode] =
                    assemble_template(analysis, subject.subject_id, mode, gate_global,
                                      config.tau_kl, config.w_min)
                        .tmpl;
                e.reference_analysis[mode] = std::move(analysis);
            }

            for (const auto& probe_path : subject.probes) {
                const ColorImage probe_img = load_image(probe_path);
                const ImageFeatures probe_features =
                    compute_features(probe_img, mask_ptr, config.sift);
                std::map<SegmentationMode, ColorAnalysis> per_mode;
                for (SegmentationMode mode : modes) {
                    const int k = mode == SegmentationMode::prior ? 1 : config.k;
                    per_mode[mode] = analyze_colors(probe_features, k, config.seed);
                }
                e.probe_analysis.push_back(std::move(per_mode));
            }
            enrolled.push_back(std::move(e));
        } catch (const Error& err) {
            if (warnings)
                warnings->push_back("subject " + subject.subject_id +
                                    " excluded: " + err.what());
        }
    }
    if (enrolled.empty())
        raise_data("empty-dataset", "every subject failed enrollment");

    std::vector<ProtocolRun> runs;
    for (SegmentationMode mode : modes) {
        // Pair scores are strategy-independent up to the matcher, so build
        // the gated probe templates once per (probe, reference).
        for (Strategy strategy : strategies) {
            ProtocolRun run;
            run.mode = mode;
            run.strategy = strategy;
            runs.push_back(std::move(run));
        }
    }

    for (const EnrolledSubject& probe_subject : enrolled) {
        for (std::size_t p = 0; p < probe_subject.probe_analysis.size(); ++p) {
            for (const EnrolledSubject& ref_subject : enrolled) {
                for (SegmentationMode mode : modes) {
                    const ColorAnalysis& probe_colors = probe_subject.probe_analysis[p].at(mode);
                    const Template& ref_tmpl = ref_subject.reference_templates.at(mode);

                    // Gate probe regions against the reference model
                    // (or the global model) before fusing.
                    const MixtureModel* gate_ref =
                        gate_global ? gate_global : &ref_tmpl.source_model;
                    Template probe_tmpl;
                    bool empty_probe = false;
                    try {
                        probe_tmpl = assemble_template(probe_colors, probe_subject.subject_id,
                                                       mode, gate_ref, config.tau_kl,
                                                       config.w_min)
                                         .tmpl;
                    } catch (const Error&) {
                        empty_probe = true; // no keypoints survive: score 0
                    }

                    for (ProtocolRun& run : runs) {
                        if (run.mode != mode)
                            continue;
                        ScoreEntry entry;
                        entry.probe_subject = probe_subject.subject_id;
                        entry.ref_subject = ref_subject.subject_id;
                        if (!empty_probe) {
                            const MatchResult result =
                                run_match(probe_tmpl, ref_tmpl, run.strategy, config);
                            entry.score = result.normalized_score;
                            entry.match_count = result.match_count;
                        }
                        if (probe_subject.subject_id == ref_subject.subject_id)
                            run.scores.genuine.push_back(entry);
                        else
                            run.scores.impostor.push_back(entry);
                    }
                }
            }
        }
    }

    for (ProtocolRun& run : runs) {
        run.roc = compute_roc(run.scores);
        run.op = operating_point(run.roc);
        auto mean_matches = [](const std::vector<ScoreEntry>& entries) {
            if (entries.empty())
                return 0.0;
            double sum = 0.0;
            for (const ScoreEntry& e : entries)
                sum += e.match_count;
            return sum / static_cast<double>(entries.size());
        };
        run.mean_genuine_match_count = mean_matches(run.scores.genuine);
        run.mean_impostor_match_count = mean_matches(run.scores.impostor);
    }
    return runs;
}

ScoreSet run_protocol(const Dataset& ds, const Config& config, SegmentationMode mode,
                      Strategy strategy, std::vector<std::string>* warnings) {
    return run_protocol_matrix(ds, config, {mode}, {strategy}, warnings).front().scores;
}

// ---------------------------------------------------------------------------
// ROC and operating point
// ---------------------------------------------------------------------------

RocCurve compute_roc(const ScoreSet& scores) {
    if (scores.genuine.empty() || scores.impostor.empty())
        raise_data("empty-scores", "need at least one genuine and one impostor score");

    std::vector<double> genuine, impostor, thresholds;
    for (const ScoreEntry& e : scores.genuine)
        genuine.push_back(e.score);
    for (const ScoreEntry& e : scores.impostor)
        impostor.push_back(e.score);
    std::sort(genuine.begin(), genuine.end());
    std::sort(impostor.begin(), impostor.end());

    thresholds = genuine;
    thresholds.insert(thresholds.end(), impostor.begin(), impostor.end());
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    // sentinel above every score so the curve starts at (0,0)
    thresholds.insert(thresholds.begin(), thresholds.front() + 1.0);

    RocCurve curve;
    curve.points.reserve(thresholds.size());
    for (double t : thresholds) {
        const auto ge = [t](const std::vector<double>& v) {
            return static_cast<double>(v.end() - std::lower_bound(v.begin(), v.end(), t)) /
                   static_cast<double>(v.size());
        };
        curve.points.push_back({t, ge(genuine), ge(impostor)});
    }
    return curve;
}

double accuracy_from_rates(double fp_pct, double fnr_pct) {
    return 100.0 - 0.5 * (fp_pct + fnr_pct);
}

OperatingPoint operating_point(const RocCurve& curve) {
    if (curve.points.empty())
        raise_data("empty-scores", "ROC curve has no points");

    std::size_t best = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        const double cost = std::max(1.0 - curve.points[i].tp, curve.points[i].fp);
        if (cost < best_cost) { // strict: ties keep the larger threshold
            best_cost = cost;
            best = i;
        }
    }

    OperatingPoint op;
    op.threshold = curve.points[best].threshold;
    op.fp_pct = 100.0 * curve.points[best].fp;
    op.fnr_pct = 100.0 * (1.0 - curve.points[best].tp);
    op.accuracy_pct = accuracy_from_rates(op.fp_pct, op.fnr_pct);
    return op;
}

std::string format_table_row(double accuracy_pct, double fp_pct, double fnr_pct) {
    return fmt2(accuracy_pct) + " " + fmt2(fp_pct) + " " + fmt2(fnr_pct);
}

EvalReport compare_sessions(const std::vector<ProtocolRun>& runs) {
    const std::array<std::pair<SegmentationMode, Strategy>, 4> order = {{
        {SegmentationMode::prior, Strategy::ed},
        {SegmentationMode::prior, Strategy::nn},
        {SegmentationMode::after, Strategy::ed},
        {SegmentationMode::after, Strategy::nn},
    }};

    EvalReport report;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto [mode, strategy] = order[i];
        const auto it = std::find_if(runs.begin(), runs.end(), [&](const ProtocolRun& r) {
            return r.mode == mode && r.strategy == strategy;
        });
        if (it == runs.end())
            raise_data("missing-configuration",
                       std::string("no run for ") + segmentation_mode_name(mode) + "/" +
                           strategy_name(strategy));
        report.rows[i] = {mode, strategy, it->op.accuracy_pct, it->op.fp_pct, it->op.fnr_pct,
                          it->mean_impostor_match_count};
    }
    report.delta_accuracy_ed = report.rows[2].accuracy_pct - report.rows[0].accuracy_pct;
    report.delta_accuracy_nn = report.rows[3].accuracy_pct - report.rows[1].accuracy_pct;
    return report;
}

// ---------------------------------------------------------------------------
// calibration
// ---------------------------------------------------------------------------

CalibrationResult calibrate_thresholds(const Dataset& ds, const Config& config,
                                       SegmentationMode mode, Strategy strategy,
                                       std::vector<std::string>* warnings) {
    const auto runs = run_protocol_matrix(ds, config, {mode}, {strategy}, warnings);
    CalibrationResult result;
    result.op = runs.front().op;
    result.psi = result.op.threshold;

    // Genuine probe-region KLs against the own-subject color model. SIFT is
    // irrelevant here, so this pass only fits mixtures.
    std::vector<double> kls;
    for (const DatasetSubject& subject : ds.subjects) {
        try {
            std::optional<Mask> mask;
            if (subject.mask)
                mask = load_mask(*subject.mask);

            const ColorImage ref_img = load_image(subject.reference);
            const PixelSet ref_pixels = masked_pixels(
                ref_img, mask ? *mask : Mask::all_true(ref_img.width, ref_img.height));
            const MixtureModel ref_model = fit_gmm(ref_pixels, config.k, config.seed);

            for (const auto& probe_path : subject.probes) {
                const ColorImage probe_img = load_image(probe_path);
                const PixelSet probe_pixels = masked_pixels(
                    probe_img, mask ? *mask : Mask::all_true(probe_img.width, probe_img.height));
                const MixtureModel probe_model = fit_gmm(probe_pixels, config.k, config.seed);
                for (const GaussianComponent& c : probe_model.components)
                    kls.push_back(min_component_kl(c, ref_model));
            }
        } catch (const Error& err) {
            if (warnings)
                warnings->push_back("subject " + subject.subject_id +
                                    " skipped in tau_kl sweep: " + err.what());
        }
    }
    if (kls.empty()) {
        result.tau_kl_suggestion = config.tau_kl;
    } else {
        std::sort(kls.begin(), kls.end());
        const std::size_t idx =
            std::min(kls.size() - 1, static_cast<std::size_t>(0.95 * kls.size()));
        result.tau_kl_suggestion = std::max(kls[idx], 1e-6);
    }
    return result;
}

void check_disjoint(const Dataset& calibration, const Dataset& evaluation) {
    std::set<std::string> calib_subjects, calib_paths;
    auto canonical = [](const std::filesystem::path& p) {
        std::error_code ec;
        const auto c = std::filesystem::weakly_canonical(p, ec);
        return ec ? p.lexically_normal().string() : c.string();
    };
    for (const DatasetSubject& s : calibration.subjects) {
        calib_subjects.insert(s.subject_id);
        calib_paths.insert(canonical(s.reference));
        for (const auto& p : s.probes)
            calib_paths.insert(canonical(p));
    }
    for (const DatasetSubject& s : evaluation.subjects) {
        if (calib_subjects.count(s.subject_id))
            raise_data("overlap-detected", "subject " + s.subject_id + " appears in both sets");
        std::vector<std::filesystem::path> paths = s.probes;
        paths.push_back(s.reference);
        for (const auto& p : paths)
            if (calib_paths.count(canonical(p)))
                raise_data("overlap-detected", p.string() + " appears in both sets");
    }
}

// ---------------------------------------------------------------------------
// output files
// ---------------------------------------------------------------------------

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        raise_io("io-failure", "cannot write " + path.string());
    return out;
}

} // namespace

void write_scores_csv(const std::vector<ProtocolRun>& runs, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "probe_id,ref_id,genuine,strategy,mode,score\n";
    for (const ProtocolRun& run : runs) {
        auto emit = [&](const std::vector<ScoreEntry>& entries, int genuine) {
            for (const ScoreEntry& e : entries)
                out << e.probe_subject << "," << e.ref_subject << "," << genuine << ","
                    << strategy_name(run.strategy) << "," << segmentation_mode_name(run.mode)
                    << "," << fmt_full(e.score) << "\n";
        };
        emit(run.scores.genuine, 1);
        emit(run.scores.impostor, 0);
    }
}

void write_roc_csv(const std::vector<ProtocolRun>& runs, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "strategy,mode,threshold,tp,fp\n";
    for (const ProtocolRun& run : runs)
        for (const RocPoint& p : run.roc.points)
            out << strategy_name(run.strategy) << "," << segmentation_mode_name(run.mode) << ","
                << fmt_full(p.threshold) << "," << fmt_full(p.tp) << "," << fmt_full(p.fp)
                << "\n";
}

void write_report_csv(const EvalReport& report, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "mode,strategy,accuracy,false_positive,true_negative,"
           "mean_impostor_match_count,delta_accuracy_vs_prior\n";
    for (const ReportRow& row : report.rows) {
        out << segmentation_mode_name(row.mode) << "," << strategy_name(row.strategy) << ","
            << fmt_full(row.accuracy_pct) << "," << fmt_full(row.fp_pct) << ","
            << fmt_full(row.fnr_pct) << "," << fmt_full(row.mean_impostor_match_count) << ",";
        if (row.mode == SegmentationMode::after)
            out << fmt_full(row.strategy == Strategy::ed ? report.delta_accuracy_ed
                                                         : report.delta_accuracy_nn);
        out << "\n";
    }
}

EvalReport read_report_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        raise_io("file-not-found", "cannot open " + path.string());

    EvalReport report;
    std::string line;
    std::getline(in, line); // header
    int row_index = 0;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        if (row_index >= 4)
            raise_data("parse-failure", "report has more than 4 rows");
        std::istringstream ss(line);
        std::string field;
        ReportRow row;
        std::getline(ss, field, ',');
        row.mode = parse_segmentation_mode(field);
        std::getline(ss, field, ',');
        row.strategy = parse_strategy(field);
        std::getline(ss, field, ',');
        row.accuracy_pct = std::stod(field);
        std::getline(ss, field, ',');
        row.fp_pct = std::stod(field);
        std::getline(ss, field, ',');
        row.fnr_pct = std::stod(field);
        std::getline(ss, field, ',');
        row.mean_impostor_match_count = std::stod(field);
        if (std::getline(ss, field, ',') && !field.empty()) {
            if (row.strategy == Strategy::ed)
                report.delta_accuracy_ed = std::stod(field);
            else
                report.delta_accuracy_nn = std::stod(field);
        }
        report.rows[row_index++] = row;
    }
    if (row_index != 4)
        raise_data("parse-failure", "report must have 4 rows");
    return report;
}

void write_summary(const std::vector<ProtocolRun>& runs, const EvalReport* report,
                   const std::vector<std::string>& warnings, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "ear verification evaluation summary\n";
    out << "====================================\n\n";

    for (const ProtocolRun& run : runs) {
        out << "configuration: strategy=" << strategy_name(run.strategy)
            << " mode=" << segmentation_mode_name(run.mode) << "\n";
        out << "  genuine scores:  " << run.scores.genuine.size() << "\n";
        out << "  impostor scores: " << run.scores.impostor.size() << "\n";
        out << "  operating threshold: " << fmt_full(run.op.threshold) << "\n";
        out << "  accuracy% / FP% / FNR%: "
            << format_table_row(run.op.accuracy_pct, run.op.fp_pct, run.op.fnr_pct) << "\n";
        out << "  mean match count (genuine / impostor): " << fmt2(run.mean_genuine_match_count)
            << " / " << fmt2(run.mean_impostor_match_count) << "\n\n";
    }

    if (report) {
        out << "comparison (accuracy%, FP%, TN%*)\n";
        for (const ReportRow& row : report->rows)
            out << "  " << segmentation_mode_name(row.mode) << " segmentation, "
                << strategy_name(row.strategy) << ": "
                << format_table_row(row.accuracy_pct, row.fp_pct, row.fnr_pct) << "\n";
        out << "  accuracy delta after-prior (ED): " << fmt2(report->delta_accuracy_ed)
            << " percentage points\n";
        out << "  accuracy delta after-prior (NN): " << fmt2(report->delta_accuracy_nn)
            << " percentage points\n";
        out << "  * the TN column reports the false-negative rate (1-TP); a true\n"
               "    true-negative rate would be the complement of FP.\n";
    }

    if (!warnings.empty()) {
        out << "\nwarnings:\n";
        for (const std::string& w : warnings)
            out << "  " << w << "\n";
    }
}

} // namespace earsift
