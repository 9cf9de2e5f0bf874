#ifndef EARSIFT_TEMPLATE_IO_HPP
#define EARSIFT_TEMPLATE_IO_HPP

#include "earsift/matching.hpp"
#include "earsift/segmentation.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace earsift {

inline constexpr int kTemplateFormatVersion = 1;

struct RegionSummary {
    int component_index = 0;
    std::size_t pixel_count = 0;
    double weight_fraction = 0.0;
    bool kept = true;
    std::optional<double> kl_to_reference;
};

// On-disk form of an enrolled template: a single version-tagged JSON
// document, diffable and language-neutral.
struct TemplateFile {
    int format_version = kTemplateFormatVersion;
    std::string subject_id;
    std::string config_fingerprint;
    MixtureModel model;
    std::vector<RegionSummary> regions;
    Template tmpl; // keypoints + provenance (model/k_count mirrored above)
};

void save_template(const TemplateFile& file, const std::filesystem::path& path);

// Errors: file-not-found; parse-failure (malformed JSON, wrong version,
// wrong descriptor arity).
TemplateFile load_template(const std::filesystem::path& path);

std::vector<RegionSummary> summarize_regions(const std::vector<SliceRegion>& regions);

// Model-only JSON used for gate_mode=global; also accepts a full template
// file and extracts its model.
void save_model(const MixtureModel& model, const std::filesystem::path& path);
MixtureModel load_model(const std::filesystem::path& path);

} // namespace earsift

#endif
