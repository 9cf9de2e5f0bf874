#include "earsift/errors.hpp"
#include "earsift/evaluation.hpp"
#include "earsift/pipeline.hpp"
#include "earsift/template_io.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

using namespace earsift;
using nlohmann::json;

struct GlobalOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> mode;
    std::optional<std::string> strategy;
};

Config resolve_config(const GlobalOptions& opts) {
    Config cfg;
    if (!opts.config_path.empty()) {
        cfg = Config::load(opts.config_path);
    } else if (const char* env = std::getenv("EARSIFT_CONFIG"); env && *env) {
        cfg = Config::load(env);
    }
    if (opts.seed)
        cfg.seed = *opts.seed;
    if (opts.strategy)
        cfg.match.strategy = parse_strategy(*opts.strategy);
    cfg.validate();
    return cfg;
}

SegmentationMode resolve_mode(const GlobalOptions& opts) {
    return opts.mode ? parse_segmentation_mode(*opts.mode) : SegmentationMode::after;
}

std::optional<Mask> maybe_load_mask(const std::string& path) {
    if (path.empty())
        return std::nullopt;
    return load_mask(path);
}

std::optional<MixtureModel> maybe_global_model(const Config& cfg) {
    if (cfg.gate_mode != GateMode::global)
        return std::nullopt;
    if (cfg.global_model_path.empty())
        raise_usage("invalid-parameter",
                    "gate_mode=global requires gate.global_model in the config");
    return load_model(cfg.global_model_path);
}

int cmd_enroll(const GlobalOptions& opts, const std::string& image_path,
               const std::string& mask_path, std::string subject, const std::string& out_path) {
    const Config cfg = resolve_config(opts);
    const SegmentationMode mode = resolve_mode(opts);
    if (subject.empty())
        subject = std::filesystem::path(image_path).stem().string();

    const ColorImage img = load_image(image_path);
    const auto mask = maybe_load_mask(mask_path);
    const auto global_model = maybe_global_model(cfg);

    const TemplateFile file = enroll_image(img, mask ? &*mask : nullptr, cfg, mode, subject,
                                           global_model ? &*global_model : nullptr);
    save_template(file, out_path);

    int kept = 0;
    for (const RegionSummary& r : file.regions)
        kept += r.kept ? 1 : 0;
    std::cout << "enrolled " << subject << ": " << file.regions.size() << " regions (" << kept
              << " kept), " << file.tmpl.keypoints.size() << " keypoints -> " << out_path
              << "\n";
    return 0;
}

int cmd_verify(const GlobalOptions& opts, const std::string& probe_path,
               const std::string& template_path, const std::string& mask_path,
               std::optional<double> psi_override) {
    const Config cfg = resolve_config(opts);
    const SegmentationMode mode = resolve_mode(opts);
    const double psi = psi_override ? *psi_override : cfg.match.psi;

    const TemplateFile ref = load_template(template_path);
    if (ref.config_fingerprint != cfg.fingerprint())
        std::cerr << "warning: template " << template_path
                  << " was enrolled under a different config (fingerprint "
                  << ref.config_fingerprint << " vs " << cfg.fingerprint() << ")\n";

    const ColorImage probe_img = load_image(probe_path);
    const auto mask = maybe_load_mask(mask_path);
    const auto global_model = maybe_global_model(cfg);
    const MixtureModel* gate_ref = global_model ? &*global_model : &ref.model;

    const ImageFeatures features = compute_features(probe_img, mask ? &*mask : nullptr, cfg.sift);
    const int k = mode == SegmentationMode::prior ? 1 : cfg.k;
    const ColorAnalysis analysis = analyze_colors(features, k, cfg.seed);
    const Template probe = assemble_template(analysis, "probe", mode,
                                             mode == SegmentationMode::prior ? nullptr : gate_ref,
                                             cfg.tau_kl, cfg.w_min)
                               .tmpl;

    const MatchResult result = cfg.match.strategy == Strategy::nn
                                   ? match_nn(probe, ref.tmpl, cfg.match.ratio)
                                   : match_ed(probe, ref.tmpl, cfg.match.d_abs);
    const Decision decision = decide(result, psi);

    json out;
    out["strategy"] = strategy_name(result.strategy);
    out["match_count"] = result.match_count;
    out["d_final"] = result.d_final;
    out["normalized_score"] = result.normalized_score;
    out["psi"] = decision.psi;
    out["accept"] = decision.accept;
    std::cout << out.dump() << "\n";
    return decision.accept ? 0 : 1;
}

int cmd_segment(const GlobalOptions& opts, const std::string& image_path,
                const std::string& mask_path, const std::string& reference_path,
                const std::string& out_prefix) {
    const Config cfg = resolve_config(opts);
    const ColorImage img = load_image(image_path);
    const auto mask = maybe_load_mask(mask_path);

    const ImageFeatures features = compute_features(img, mask ? &*mask : nullptr, cfg.sift);
    const ColorAnalysis analysis = analyze_colors(features, cfg.k, cfg.seed);

    MixtureModel reference = analysis.model;
    if (!reference_path.empty())
        reference = load_model(reference_path);
    else if (const auto global_model = maybe_global_model(cfg))
        reference = *global_model;
    const SegmentationResult gated =
        gate_regions(analysis.seg, reference, cfg.tau_kl, cfg.w_min);

    // label map: component index per pixel, 255 = outside mask
    std::vector<std::uint8_t> labels(features.mask.bits.size(), 255);
    for (const SliceRegion& r : gated.regions)
        for (const auto& [x, y] : r.pixel_locations)
            labels[static_cast<std::size_t>(y) * img.width + x] =
                static_cast<std::uint8_t>(r.component_index);
    save_pgm_labels(labels, img.width, img.height, out_prefix + ".labels.pgm");

    json regions = json::array();
    for (const SliceRegion& r : gated.regions) {
        json jr;
        jr["component_index"] = r.component_index;
        jr["pixel_count"] = r.pixel_count();
        jr["fraction"] = r.weight_fraction;
        jr["kept"] = r.kept;
        jr["kl_to_reference"] =
            r.kl_to_reference ? json(std::max(0.0, *r.kl_to_reference)) : json(nullptr);
        regions.push_back(std::move(jr));
    }
    std::ofstream out(out_prefix + ".regions.json");
    if (!out)
        raise_io("io-failure", std::string("cannot write ") + out_prefix + ".regions.json");
    out << regions.dump(1) << "\n";

    std::cout << "segmented " << image_path << ": " << gated.regions.size() << " regions -> "
              << out_prefix << ".labels.pgm, " << out_prefix << ".regions.json\n";
    return 0;
}

int cmd_extract(const GlobalOptions& opts, const std::string& image_path,
                const std::string& mask_path, std::string subject, const std::string& out_path,
                const std::string& dump_path) {
    const Config cfg = resolve_config(opts);
    if (subject.empty())
        subject = std::filesystem::path(image_path).stem().string();

    const ColorImage img = load_image(image_path);
    const auto mask = maybe_load_mask(mask_path);

    // whole-crop extraction: single region, no gating
    const TemplateFile file = enroll_image(img, mask ? &*mask : nullptr, cfg,
                                           SegmentationMode::prior, subject, nullptr);
    save_template(file, out_path);

    if (!dump_path.empty()) {
        std::ofstream dump(dump_path);
        if (!dump)
            raise_io("io-failure", "cannot write " + dump_path);
        dump.precision(17);
        for (const Keypoint& kp : file.tmpl.keypoints) {
            dump << kp.x << " " << kp.y << " " << kp.scale << " " << kp.orientation;
            for (double v : kp.descriptor)
                dump << " " << v;
            dump << "\n";
        }
    }
    std::cout << "extracted " << file.tmpl.keypoints.size() << " keypoints -> " << out_path
              << "\n";
    return 0;
}

int cmd_evaluate(const GlobalOptions& opts, const std::string& manifest_path,
                 const std::string& out_dir) {
    const Config cfg = resolve_config(opts);
    const Dataset ds = load_manifest(manifest_path);

    std::vector<SegmentationMode> modes = {SegmentationMode::prior, SegmentationMode::after};
    if (opts.mode)
        modes = {parse_segmentation_mode(*opts.mode)};
    std::vector<Strategy> strategies = {Strategy::ed, Strategy::nn};
    if (opts.strategy)
        strategies = {parse_strategy(*opts.strategy)};

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
        raise_io("io-failure", "cannot create " + out_dir + ": " + ec.message());

    std::vector<std::string> warnings;
    const auto runs = run_protocol_matrix(ds, cfg, modes, strategies, &warnings);
    for (const std::string& w : warnings)
        std::cerr << "warning: " << w << "\n";

    const std::filesystem::path out(out_dir);
    write_scores_csv(runs, out / "scores.csv");
    write_roc_csv(runs, out / "roc.csv");

    std::optional<EvalReport> report;
    if (runs.size() == 4) {
        report = compare_sessions(runs);
        write_report_csv(*report, out / "report.csv");
    }
    write_summary(runs, report ? &*report : nullptr, warnings, out / "summary.txt");

    for (const ProtocolRun& run : runs)
        std::cout << strategy_name(run.strategy) << "/" << segmentation_mode_name(run.mode)
                  << ": " << format_table_row(run.op.accuracy_pct, run.op.fp_pct, run.op.fnr_pct)
                  << " (threshold " << run.op.threshold << ")\n";
    if (report)
        std::cout << "accuracy delta after-prior: ED "
                  << (report->delta_accuracy_ed >= 0 ? "+" : "") << report->delta_accuracy_ed
                  << "pp, NN " << (report->delta_accuracy_nn >= 0 ? "+" : "")
                  << report->delta_accuracy_nn << "pp\n";
    std::cout << "outputs in " << out_dir << "\n";
    return 0;
}

int cmd_calibrate(const GlobalOptions& opts, const std::string& manifest_path,
                  const std::string& eval_manifest_path) {
    const Config cfg = resolve_config(opts);
    const Dataset calib = load_manifest(manifest_path);
    if (!eval_manifest_path.empty())
        check_disjoint(calib, load_manifest(eval_manifest_path));

    const SegmentationMode mode = resolve_mode(opts);
    std::vector<std::string> warnings;
    const CalibrationResult result =
        calibrate_thresholds(calib, cfg, mode, cfg.match.strategy, &warnings);
    for (const std::string& w : warnings)
        std::cerr << "warning: " << w << "\n";

    json out;
    out["psi"] = result.psi;
    out["accuracy_pct"] = result.op.accuracy_pct;
    out["fp_pct"] = result.op.fp_pct;
    out["fnr_pct"] = result.op.fnr_pct;
    out["tau_kl_suggestion"] = result.tau_kl_suggestion;
    out["strategy"] = strategy_name(cfg.match.strategy);
    out["mode"] = segmentation_mode_name(mode);
    std::cout << out.dump() << "\n";
    return 0;
}

int cmd_gen_synth(const GlobalOptions& opts, const std::string& out_dir, int subjects,
                  int probes) {
    const Config cfg = resolve_config(opts);
    const Dataset ds = generate_synthetic_dataset(subjects, out_dir, cfg.seed, probes);
    std::cout << "generated " << ds.subjects.size() << " subjects (" << probes
              << " probe(s) each) in " << out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ear verification via SIFT keypoints from color-similarity slice regions"};
    app.require_subcommand(1);

    GlobalOptions opts;
    app.add_option("--config", opts.config_path, "config file (flat key = value)")
        ->envname("EARSIFT_CONFIG");
    app.add_option("--seed", opts.seed, "seed override");
    app.add_option("--mode", opts.mode, "segmentation mode: prior|after")
        ->check(CLI::IsMember({"prior", "after"}));
    app.add_option("--strategy", opts.strategy, "matching strategy: nn|ed")
        ->check(CLI::IsMember({"nn", "ed"}));

    std::string image_path, mask_path, template_path, out_path, subject, reference_path;
    std::string manifest_path, eval_manifest_path, dump_path;
    std::optional<double> psi_override;
    int subjects = 20, probes = 1;

    auto* enroll = app.add_subcommand("enroll", "fit, segment, extract and write a template");
    enroll->fallthrough();
    enroll->add_option("image", image_path, "ear image (PNG or PPM/PGM)")->required();
    enroll->add_option("--mask", mask_path, "mask image (PGM, >=128 means inside)");
    enroll->add_option("--subject", subject, "subject id (default: image stem)");
    enroll->add_option("--out", out_path, "template output path")->required();

    auto* verify = app.add_subcommand("verify", "match a probe image against a template");
    verify->fallthrough();
    verify->add_option("probe", image_path, "probe ear image")->required();
    verify->add_option("template", template_path, "enrolled template file")->required();
    verify->add_option("--mask", mask_path, "mask image for the probe");
    verify->add_option("--psi", psi_override, "decision threshold override");

    auto* segment = app.add_subcommand("segment", "write the slice-region label map");
    segment->fallthrough();
    segment->add_option("image", image_path, "ear image")->required();
    segment->add_option("--mask", mask_path, "mask image");
    segment->add_option("--reference", reference_path, "template or model file to gate against");
    segment->add_option("--out", out_path, "output prefix")->required();

    auto* extract = app.add_subcommand("extract", "whole-crop SIFT extraction to a template");
    extract->fallthrough();
    extract->add_option("image", image_path, "ear image")->required();
    extract->add_option("--mask", mask_path, "mask image");
    extract->add_option("--subject", subject, "subject id (default: image stem)");
    extract->add_option("--out", out_path, "template output path")->required();
    extract->add_option("--dump", dump_path, "plain-text keypoint dump (x y S theta + 128 values)");

    auto* evaluate = app.add_subcommand("evaluate", "run the verification protocol on a manifest");
    evaluate->fallthrough();
    evaluate->add_option("manifest", manifest_path, "dataset manifest JSON")->required();
    evaluate->add_option("--out", out_path, "output directory")->required();

    auto* calibrate = app.add_subcommand("calibrate", "sweep psi on a held-out calibration set");
    calibrate->fallthrough();
    calibrate->add_option("manifest", manifest_path, "calibration manifest JSON")->required();
    calibrate->add_option("--eval-manifest", eval_manifest_path,
                          "evaluation manifest to check disjointness against");

    auto* gen = app.add_subcommand("gen-synth", "generate a deterministic synthetic dataset");
    gen->fallthrough();
    gen->add_option("--out", out_path, "output directory")->required();
    gen->add_option("--subjects", subjects, "number of subjects")->check(CLI::PositiveNumber);
    gen->add_option("--probes", probes, "probes per subject")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (enroll->parsed())
            return cmd_enroll(opts, image_path, mask_path, subject, out_path);
        if (verify->parsed())
            return cmd_verify(opts, image_path, template_path, mask_path, psi_override);
        if (segment->parsed())
            return cmd_segment(opts, image_path, mask_path, reference_path, out_path);
        if (extract->parsed())
            return cmd_extract(opts, image_path, mask_path, subject, out_path, dump_path);
        if (evaluate->parsed())
            return cmd_evaluate(opts, manifest_path, out_path);
        if (calibrate->parsed())
            return cmd_calibrate(opts, manifest_path, eval_manifest_path);
        if (gen->parsed())
            return cmd_gen_synth(opts, out_path, subjects, probes);
    } catch (const earsift::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 5;
    }
    return 2;
}
