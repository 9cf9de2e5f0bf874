#ifndef EARSIFT_SIFT_HPP
#define EARSIFT_SIFT_HPP

#include "earsift/image.hpp"

#include <array>
#include <optional>
#include <vector>

namespace earsift {

struct SiftParams {
    int octaves = 0;                 // 0 = auto: floor(log2(min dim)) - 2
    int scales_per_octave = 3;       // s
    double base_sigma = 1.6;         // sigma0
    bool initial_upsample = true;
    double contrast_threshold = 0.03;
    double edge_ratio = 10.0;        // r of the Hessian edge test
    int orientation_bins = 36;
    double peak_ratio = 0.8;         // secondary orientation acceptance
    double descriptor_clamp = 0.2;

    static constexpr int descriptor_grid = 4;        // 4x4 spatial cells
    static constexpr int descriptor_orientations = 8;
    static constexpr int descriptor_size = 128;      // 4*4*8

    void validate() const;
};

struct Keypoint {
    double x = 0.0;           // original image coordinates, pixels
    double y = 0.0;
    double scale = 0.0;       // sigma units, original image coordinates
    double orientation = 0.0; // radians in [0, 2pi)
    std::array<double, SiftParams::descriptor_size> descriptor{};
    int octave = 0;           // detection provenance, canonical ordering key
    int level = 0;
};

struct RegionKeypoints {
    int region_index = 0;
    std::vector<Keypoint> keypoints;
};

// Gaussian pyramid plus DoG pyramid. Per octave there are s+3 Gaussian
// levels at sigma = sigma0 * 2^{o + i/s} and s+2 DoG levels; the next
// octave is seeded by 2x downsampling of the level with doubled sigma.
struct ScaleSpace {
    struct Octave {
        std::vector<GrayImage> gaussians;
        std::vector<GrayImage> dogs;
    };
    std::vector<Octave> octaves;
    int scales_per_octave = 3;
    double base_sigma = 1.6;
    int upsample_factor = 1; // 2 when the base image was doubled
};

// scale-space sample that is a strict 26-neighborhood extremum
struct ExtremumCandidate {
    int octave = 0;
    int level = 0; // DoG level index, interior: 1..s
    int x = 0;
    int y = 0;
};

enum class RejectReason {
    low_contrast,
    edge_response,
    out_of_pyramid,
    unstable,
};

struct LocalizedKeypoint {
    int octave = 0;
    int level = 0;          // integer DoG level after relocalization
    int ix = 0;             // integer sample the refinement converged at
    int iy = 0;
    double x = 0.0;         // refined, octave grid coordinates
    double y = 0.0;
    double level_offset = 0.0;
    double value = 0.0;     // interpolated DoG value
    double scale_octave = 0.0; // sigma0 * 2^{(level+offset)/s}
};

// Errors: image-too-small (base image under 16x16 after optional upsample).
ScaleSpace build_scale_space(const GrayImage& img, const SiftParams& params);

std::vector<ExtremumCandidate> detect_extrema(const ScaleSpace& ss, const SiftParams& params);

// Quadratic subpixel refinement with stability rejection. Rejection is a
// normal outcome; the reason lands in *reason when given.
std::optional<LocalizedKeypoint> localize_keypoint(const ExtremumCandidate& cand,
                                                   const ScaleSpace& ss, const SiftParams& params,
                                                   RejectReason* reason = nullptr);

// 36-bin gradient histogram -> dominant orientation plus secondary peaks.
std::vector<double> assign_orientation(const LocalizedKeypoint& kp, const ScaleSpace& ss,
                                       const SiftParams& params);

// 4x4x8 trilinearly-binned gradient histogram; nullopt for a gradient-free
// window (cannot be normalized).
std::optional<std::array<double, SiftParams::descriptor_size>>
compute_descriptor(const LocalizedKeypoint& kp, double orientation, const ScaleSpace& ss,
                   const SiftParams& params);

// Full pipeline. Keypoints whose rounded location falls outside keep_mask
// are discarded after descriptor computation (descriptors keep full-image
// context). Null mask means all-true. Output is canonically ordered.
std::vector<Keypoint> extract_sift(const GrayImage& img, const Mask* keep_mask,
                                   const SiftParams& params);

// Separable Gaussian convolution, kernel radius ceil(4 sigma), reflected
// borders. Exposed for the pyramid tests.
GrayImage gaussian_blur(const GrayImage& img, double sigma);
GrayImage upsample_double(const GrayImage& img);
GrayImage downsample_half(const GrayImage& img);

} // namespace earsift

#endif
