#include "earsift/segmentation.hpp"

#include "earsift/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace earsift {

std::vector<int> classify_pixels(const MixtureModel& model, const PixelSet& pixels) {
    validate_model(model);
    const int N = model.size();
    std::vector<ComponentDensity> densities;
    densities.reserve(N);
    std::vector<double> log_weights(N);
    for (int j = 0; j < N; ++j) {
        densities.emplace_back(model.components[j]);
        log_weights[j] = std::log(model.components[j].weight);
    }

    std::vector<int> labels(pixels.size());
    for (std::size_t s = 0; s < pixels.size(); ++s) {
        const Eigen::Vector3d& x = pixels.samples[s].color;
        int best = 0;
        double best_lp = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < N; ++j) {
            const double lp = log_weights[j] + densities[j].log_density(x);
            if (lp > best_lp) { // strict: ties keep the lowest index
                best_lp = lp;
                best = j;
            }
        }
        labels[s] = best;
    }
    return labels;
}

std::vector<SliceRegion> extract_regions(const std::vector<int>& labels, const PixelSet& pixels,
                                         const MixtureModel& model) {
    if (labels.size() != pixels.size())
        raise_internal("label-mismatch", "one label per pixel required");

    std::map<int, SliceRegion> by_component;
    for (std::size_t s = 0; s < pixels.size(); ++s) {
        const int j = labels[s];
        if (j < 0 || j >= model.size())
            raise_internal("label-mismatch", "label outside model component range");
        SliceRegion& r = by_component[j];
        r.component_index = j;
        r.pixel_locations.emplace_back(pixels.samples[s].x, pixels.samples[s].y);
    }

    std::vector<SliceRegion> regions;
    regions.reserve(by_component.size());
    const double n = static_cast<double>(pixels.size());
    for (auto& [j, region] : by_component) {
        region.weight_fraction = region.pixel_locations.size() / n;
        regions.push_back(std::move(region));
    }
    return regions;
}

SegmentationResult segment(const MixtureModel& model, const PixelSet& pixels) {
    SegmentationResult result;
    result.model = model;
    result.regions = extract_regions(classify_pixels(model, pixels), pixels, model);
    result.k_effective = static_cast<int>(result.regions.size());
    return result;
}

SegmentationResult gate_regions(SegmentationResult seg, const MixtureModel& reference,
                                double tau_kl, double w_min) {
    if (w_min < 0.0 || w_min >= 1.0)
        raise_usage("invalid-parameter", "w_min must lie in [0,1)");
    if (tau_kl <= 0.0)
        raise_usage("invalid-parameter", "tau_kl must be positive");

    bool any_kept = false;
    for (SliceRegion& region : seg.regions) {
        const GaussianComponent& comp = seg.model.components[region.component_index];
        const double kl = min_component_kl(comp, reference);
        region.kl_to_reference = kl;
        region.kept = region.weight_fraction >= w_min && kl <= tau_kl;
        any_kept = any_kept || region.kept;
    }

    // Fallback: an empty kept-set would make fusion vacuous, so keep the
    // region closest to the reference in KL.
    if (!any_kept && !seg.regions.empty()) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < seg.regions.size(); ++i)
            if (*seg.regions[i].kl_to_reference < *seg.regions[best].kl_to_reference)
                best = i;
        seg.regions[best].kept = true;
    }
    return seg;
}

bool validate_cluster_counts(long long n, int k1, int k2, int k_intra) {
    if (n < 1 || k1 < 1 || k2 < 1 || k_intra < 1)
        raise_usage("invalid-parameter", "all counts must be >= 1");
    const bool below_n = k1 < n && k2 < n;
    const bool between = (k1 < k_intra && k_intra < k2) || (k2 < k_intra && k_intra < k1);
    return below_n && between;
}

} // namespace earsift
