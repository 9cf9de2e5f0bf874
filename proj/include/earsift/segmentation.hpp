#ifndef EARSIFT_SEGMENTATION_HPP
#define EARSIFT_SEGMENTATION_HPP

#include "earsift/divergence.hpp"
#include "earsift/mixture.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace earsift {

// Masked pixels assigned to one mixture component. Label-set, not a
// connected component: the segmentation is by color similarity only.
struct SliceRegion {
    int component_index = 0;
    std::vector<std::pair<int, int>> pixel_locations; // (x,y), row-major order
    double weight_fraction = 0.0;                     // pixels-in-region / n
    bool kept = true;
    std::optional<double> kl_to_reference; // filled by gate_regions

    std::size_t pixel_count() const { return pixel_locations.size(); }
};

struct SegmentationResult {
    MixtureModel model;
    std::vector<SliceRegion> regions;
    int k_effective = 0; // number of surviving mixture components
};

// label(d) = argmax_i P_i f(D|i), ties broken by lowest component index.
std::vector<int> classify_pixels(const MixtureModel& model, const PixelSet& pixels);

// One region per label owning >= 1 pixel, ordered by component index.
std::vector<SliceRegion> extract_regions(const std::vector<int>& labels, const PixelSet& pixels,
                                         const MixtureModel& model);

SegmentationResult segment(const MixtureModel& model, const PixelSet& pixels);

// kept = (weight_fraction >= w_min) AND consistency gate against the
// reference model. If nothing survives, the minimum-KL region is kept.
SegmentationResult gate_regions(SegmentationResult seg, const MixtureModel& reference,
                                double tau_kl, double w_min);

// Advisory check of the cluster-count relation between two instances of a
// subject: k1,k2 < n and k_intra strictly between k1 and k2.
bool validate_cluster_counts(long long n, int k1, int k2, int k_intra);

} // namespace earsift

#endif
