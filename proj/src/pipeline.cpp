#include "earsift/pipeline.hpp"

#include "earsift/errors.hpp"

#include <algorithm>
#include <cmath>

namespace earsift {

ImageFeatures compute_features(const ColorImage& img, const Mask* mask, const SiftParams& sift) {
    if (img.width < 16 || img.height < 16)
        raise_data("image-too-small", "pipeline entry requires at least 16x16 pixels");

    ImageFeatures f;
    f.width = img.width;
    f.height = img.height;
    f.mask = mask ? *mask : Mask::all_true(img.width, img.height);
    f.gray_equalized = equalize_histogram(to_grayscale(img));
    f.pixels = masked_pixels(img, f.mask);
    f.keypoints = extract_sift(f.gray_equalized, &f.mask, sift);
    return f;
}

ColorAnalysis analyze_colors(const ImageFeatures& features, int k, std::uint64_t seed) {
    ColorAnalysis a;
    a.model = fit_gmm(features.pixels, k, seed);
    a.seg = segment(a.model, features.pixels);

    a.region_label_map.assign(static_cast<std::size_t>(features.width) * features.height, -1);
    for (const SliceRegion& region : a.seg.regions)
        for (const auto& [x, y] : region.pixel_locations)
            a.region_label_map[static_cast<std::size_t>(y) * features.width + x] =
                region.component_index;

    a.region_keypoints.reserve(a.seg.regions.size());
    for (const SliceRegion& region : a.seg.regions)
        a.region_keypoints.push_back({region.component_index, {}});
    for (const Keypoint& kp : features.keypoints) {
        const int x = std::clamp(static_cast<int>(std::lround(kp.x)), 0, features.width - 1);
        const int y = std::clamp(static_cast<int>(std::lround(kp.y)), 0, features.height - 1);
        const int component = a.region_label_map[static_cast<std::size_t>(y) * features.width + x];
        if (component < 0)
            continue; // keypoint rounded onto an unmasked pixel
        for (RegionKeypoints& bucket : a.region_keypoints) {
            if (bucket.region_index == component) {
                bucket.keypoints.push_back(kp);
                break;
            }
        }
    }
    return a;
}

TemplateAssembly assemble_template(const ColorAnalysis& analysis, const std::string& subject_id,
                                   SegmentationMode mode, const MixtureModel* gate_reference,
                                   double tau_kl, double w_min) {
    TemplateAssembly out;
    if (mode == SegmentationMode::prior) {
        out.gated = analysis.seg; // whole crop, no gate
    } else {
        out.gated = gate_regions(analysis.seg, gate_reference ? *gate_reference : analysis.model,
                                 tau_kl, w_min);
    }

    std::vector<RegionKeypoints> kept;
    for (const SliceRegion& region : out.gated.regions) {
        if (!region.kept)
            continue;
        for (const RegionKeypoints& bucket : analysis.region_keypoints)
            if (bucket.region_index == region.component_index)
                kept.push_back(bucket);
    }
    out.tmpl = fuse_template(kept, subject_id, analysis.model);
    return out;
}

TemplateFile enroll_image(const ColorImage& img, const Mask* mask, const Config& config,
                          SegmentationMode mode, const std::string& subject_id,
                          const MixtureModel* gate_reference) {
    const ImageFeatures features = compute_features(img, mask, config.sift);
    const int k = mode == SegmentationMode::prior ? 1 : config.k;
    const ColorAnalysis analysis = analyze_colors(features, k, config.seed);
    const TemplateAssembly assembly = assemble_template(analysis, subject_id, mode,
                                                        gate_reference, config.tau_kl,
                                                        config.w_min);

    TemplateFile file;
    file.subject_id = subject_id;
    file.config_fingerprint = config.fingerprint();
    file.model = analysis.model;
    file.regions = summarize_regions(assembly.gated.regions);
    file.tmpl = assembly.tmpl;
    return file;
}

} // namespace earsift
