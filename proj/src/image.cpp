#include "earsift/image.hpp"

#include "earsift/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace earsift {

std::size_t Mask::true_count() const {
    return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(),
                                                  [](std::uint8_t b) { return b != 0; }));
}

Mask Mask::all_true(int width, int height) {
    Mask m;
    m.width = width;
    m.height = height;
    m.bits.assign(static_cast<std::size_t>(width) * height, 1);
    return m;
}

GrayImage to_grayscale(const ColorImage& img) {
    GrayImage out;
    out.width = img.width;
    out.height = img.height;
    out.data.resize(img.pixel_count());
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        const double* p = &img.data[3 * i];
        double luma = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
        out.data[i] = std::clamp(luma, 0.0, 1.0);
    }
    return out;
}

namespace {

int intensity_bin(double v) {
    return std::clamp(static_cast<int>(std::lround(v * 255.0)), 0, 255);
}

} // namespace

GrayImage equalize_histogram(const GrayImage& img) {
    std::array<std::size_t, 256> hist{};
    for (double v : img.data)
        hist[intensity_bin(v)]++;

    std::array<std::size_t, 256> cdf{};
    std::partial_sum(hist.begin(), hist.end(), cdf.begin());

    const std::size_t n = img.data.size();
    std::size_t cdf_min = 0;
    for (int b = 0; b < 256; ++b) {
        if (hist[b] > 0) {
            cdf_min = cdf[b];
            break;
        }
    }

    if (n == 0 || n <= cdf_min)
        return img; // single occupied bin: degenerate CDF, leave untouched

    GrayImage out;
    out.width = img.width;
    out.height = img.height;
    out.data.resize(n);
    const double denom = static_cast<double>(n - cdf_min);
    for (std::size_t i = 0; i < n; ++i) {
        const int b = intensity_bin(img.data[i]);
        out.data[i] = static_cast<double>(cdf[b] - cdf_min) / denom;
    }
    return out;
}

PixelSet masked_pixels(const ColorImage& img, const Mask& mask) {
    if (img.width != mask.width || img.height != mask.height)
        raise_data("dimension-mismatch", "mask dimensions do not match the image");

    PixelSet set;
    set.samples.reserve(mask.true_count());
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            if (mask.at(x, y))
                set.samples.push_back({x, y, img.rgb(x, y)});

    if (set.samples.empty())
        raise_data("empty-mask", "mask selects no pixels");
    return set;
}

} // namespace earsift
