#ifndef EARSIFT_PIPELINE_HPP
#define EARSIFT_PIPELINE_HPP

#include "earsift/config.hpp"
#include "earsift/matching.hpp"
#include "earsift/segmentation.hpp"
#include "earsift/template_io.hpp"

#include <string>
#include <vector>

namespace earsift {

// Mode-independent per-image work: grayscale + equalization, masked color
// samples, and the full SIFT keypoint set within the mask.
struct ImageFeatures {
    Mask mask;
    GrayImage gray_equalized;
    PixelSet pixels;
    std::vector<Keypoint> keypoints;
    int width = 0;
    int height = 0;
};

// Color model, slice regions and per-region keypoint buckets. In prior
// mode the model is a single Gaussian, giving one whole-crop region.
struct ColorAnalysis {
    MixtureModel model;
    SegmentationResult seg; // ungated
    std::vector<RegionKeypoints> region_keypoints; // bucketed by component index
    std::vector<int> region_label_map; // -1 outside mask, else component index
};

ImageFeatures compute_features(const ColorImage& img, const Mask* mask, const SiftParams& sift);

ColorAnalysis analyze_colors(const ImageFeatures& features, int k, std::uint64_t seed);

// Gate (after mode) and fuse the kept regions into a template.
// gate_reference = nullptr gates against the image's own model.
// Errors: empty-template.
struct TemplateAssembly {
    Template tmpl;
    SegmentationResult gated;
};
TemplateAssembly assemble_template(const ColorAnalysis& analysis, const std::string& subject_id,
                                   SegmentationMode mode, const MixtureModel* gate_reference,
                                   double tau_kl, double w_min);

// enroll = fit -> segment -> gate -> extract -> fuse, packaged for disk.
TemplateFile enroll_image(const ColorImage& img, const Mask* mask, const Config& config,
                          SegmentationMode mode, const std::string& subject_id,
                          const MixtureModel* gate_reference);

} // namespace earsift

#endif
