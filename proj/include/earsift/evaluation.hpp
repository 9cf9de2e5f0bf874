#ifndef EARSIFT_EVALUATION_HPP
#define EARSIFT_EVALUATION_HPP

#include "earsift/config.hpp"
#include "earsift/pipeline.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace earsift {

struct DatasetSubject {
    std::string subject_id;
    std::filesystem::path reference;
    std::vector<std::filesystem::path> probes;
    std::optional<std::filesystem::path> mask; // applies to reference and probes
};

struct Dataset {
    std::vector<DatasetSubject> subjects;
};

// Manifest: JSON list of {subject_id, reference, probes[], mask?};
// relative paths resolve against the manifest directory.
Dataset load_manifest(const std::filesystem::path& path);
void save_manifest(const Dataset& ds, const std::filesystem::path& path);

struct ScoreEntry {
    std::string probe_subject;
    std::string ref_subject;
    double score = 0.0;
    int match_count = 0;
};

struct ScoreSet {
    std::vector<ScoreEntry> genuine;
    std::vector<ScoreEntry> impostor;
};

struct RocPoint {
    double threshold = 0.0;
    double tp = 0.0; // fraction of genuine scores >= threshold
    double fp = 0.0; // fraction of impostor scores >= threshold
};

struct RocCurve {
    std::vector<RocPoint> points; // thresholds descending
};

// Threshold minimizing max(1-TP, FP); ties resolve toward the larger
// threshold. The paper's Table-I "True Negative" column is arithmetically
// the false-negative rate, so that is what fnr_pct mirrors.
struct OperatingPoint {
    double threshold = 0.0;
    double accuracy_pct = 0.0; // 100 * (1 - (FNR + FPR)/2)
    double fp_pct = 0.0;
    double fnr_pct = 0.0;
};

struct ProtocolRun {
    SegmentationMode mode = SegmentationMode::after;
    Strategy strategy = Strategy::nn;
    ScoreSet scores;
    RocCurve roc;
    OperatingPoint op;
    double mean_genuine_match_count = 0.0;
    double mean_impostor_match_count = 0.0;
};

struct ReportRow {
    SegmentationMode mode = SegmentationMode::prior;
    Strategy strategy = Strategy::ed;
    double accuracy_pct = 0.0;
    double fp_pct = 0.0;
    double fnr_pct = 0.0; // rendered under the Table-I "TN" heading
    double mean_impostor_match_count = 0.0;
};

struct EvalReport {
    std::array<ReportRow, 4> rows; // prior ED, prior NN, after ED, after NN
    double delta_accuracy_ed = 0.0; // after - prior
    double delta_accuracy_nn = 0.0;
};

// Deterministic synthetic stand-in for the private ear database: per
// subject a 237x125 blob-plus-texture image, probes derived by a small
// rigid transform with brightness jitter and fresh sensor noise.
// Errors: io-failure.
Dataset generate_synthetic_dataset(int n_subjects, const std::filesystem::path& out_dir,
                                   std::uint64_t seed, int probes_per_subject = 1);

// Enroll every reference, score every probe against every reference.
// Failed subjects are excluded with a warning and counts adjust.
ScoreSet run_protocol(const Dataset& ds, const Config& config, SegmentationMode mode,
                      Strategy strategy, std::vector<std::string>* warnings = nullptr);

// All requested (mode, strategy) cells sharing one feature-extraction pass.
std::vector<ProtocolRun> run_protocol_matrix(const Dataset& ds, const Config& config,
                                             const std::vector<SegmentationMode>& modes,
                                             const std::vector<Strategy>& strategies,
                                             std::vector<std::string>* warnings = nullptr);

// Errors: empty-scores.
RocCurve compute_roc(const ScoreSet& scores);

OperatingPoint operating_point(const RocCurve& curve);

// The balanced accuracy arithmetic behind the operating point, exposed for
// rate-level checks: 100 - (fp_pct + fnr_pct)/2.
double accuracy_from_rates(double fp_pct, double fnr_pct);

// "96.93 2.14 4.00" — two-decimal rendering of a table row.
std::string format_table_row(double accuracy_pct, double fp_pct, double fnr_pct);

// Requires exactly the four (mode, strategy) cells, same dataset.
EvalReport compare_sessions(const std::vector<ProtocolRun>& runs);

// Threshold calibration on a held-out set: psi minimizing max(1-TP, FP)
// for the given configuration, plus a tau_kl suggestion taken as the 95th
// percentile of genuine probe-region KLs against the own-subject model.
struct CalibrationResult {
    double psi = 0.0;
    OperatingPoint op;
    double tau_kl_suggestion = 0.0;
};
CalibrationResult calibrate_thresholds(const Dataset& ds, const Config& config,
                                       SegmentationMode mode, Strategy strategy,
                                       std::vector<std::string>* warnings = nullptr);

// Errors: overlap-detected when the two datasets share a subject or image.
void check_disjoint(const Dataset& calibration, const Dataset& evaluation);

void write_scores_csv(const std::vector<ProtocolRun>& runs, const std::filesystem::path& path);
void write_roc_csv(const std::vector<ProtocolRun>& runs, const std::filesystem::path& path);
void write_report_csv(const EvalReport& report, const std::filesystem::path& path);
EvalReport read_report_csv(const std::filesystem::path& path);
void write_summary(const std::vector<ProtocolRun>& runs, const EvalReport* report,
                   const std::vector<std::string>& warnings, const std::filesystem::path& path);

} // namespace earsift

#endif
