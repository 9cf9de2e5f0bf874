#ifndef EARSIFT_IMAGE_HPP
#define EARSIFT_IMAGE_HPP

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace earsift {

// Row-major RGB raster, every channel in [0,1]. 8-bit value v maps to v/255.
struct ColorImage {
    int width = 0;
    int height = 0;
    std::vector<double> data; // 3 * width * height, interleaved RGB

    double& at(int x, int y, int c) { return data[3 * (static_cast<std::size_t>(y) * width + x) + c]; }
    double at(int x, int y, int c) const { return data[3 * (static_cast<std::size_t>(y) * width + x) + c]; }
    Eigen::Vector3d rgb(int x, int y) const {
        const double* p = &data[3 * (static_cast<std::size_t>(y) * width + x)];
        return {p[0], p[1], p[2]};
    }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
};

// Row-major intensity raster in [0,1].
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
};

// Boolean per pixel, true = inside the cropped ear region.
struct Mask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v) { bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
    std::size_t true_count() const;

    static Mask all_true(int width, int height);
};

struct PixelSample {
    int x = 0;
    int y = 0;
    Eigen::Vector3d color{0, 0, 0};
};

// The masked color samples D fed to clustering; locations unique, row-major.
struct PixelSet {
    std::vector<PixelSample> samples;
    std::size_t size() const { return samples.size(); }
};

// Decodes PNG (8-bit RGB or gray) or binary PPM (P6) / PGM (P5).
// Errors: file-not-found, unsupported-format, corrupt-data.
ColorImage load_image(const std::filesystem::path& path);

// Mask file: PGM (or gray PNG) where value >= 128 means true.
Mask load_mask(const std::filesystem::path& path);

void save_ppm(const ColorImage& img, const std::filesystem::path& path);
void save_pgm(const GrayImage& img, const std::filesystem::path& path);
void save_pgm_labels(const std::vector<std::uint8_t>& labels, int width, int height,
                     const std::filesystem::path& path);
void save_png(const ColorImage& img, const std::filesystem::path& path);

// Rec. 601 luma: 0.299 R + 0.587 G + 0.114 B, clamped to [0,1].
GrayImage to_grayscale(const ColorImage& img);

// 256-bin histogram equalization with the cdf_min correction. A constant
// image (degenerate CDF) is returned unchanged.
GrayImage equalize_histogram(const GrayImage& img);

// Exactly the pixels where mask is true, in row-major order.
// Errors: dimension-mismatch, empty-mask.
PixelSet masked_pixels(const ColorImage& img, const Mask& mask);

} // namespace earsift

#endif
