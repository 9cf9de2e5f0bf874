#include "earsift/sift.hpp"

#include "earsift/errors.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace earsift {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;
constexpr int kMaxRelocalizations = 5;
constexpr int kMinOctaveDim = 8;

// reflect-101 fold of index i into [0, n)
int reflect(int i, int n) {
    if (n == 1)
        return 0;
    const int period = 2 * (n - 1);
    i = std::abs(i) % period;
    return i < n ? i : period - i;
}

double wrap_angle(double a) {
    a = std::fmod(a, kTwoPi);
    return a < 0.0 ? a + kTwoPi : a;
}

} // namespace

void SiftParams::validate() const {
    if (scales_per_octave < 2)
        raise_usage("invalid-parameter", "scales_per_octave must be >= 2");
    if (!(base_sigma > 0.5))
        raise_usage("invalid-parameter", "base_sigma must exceed 0.5");
    if (!(edge_ratio > 1.0))
        raise_usage("invalid-parameter", "edge_ratio must exceed 1");
    if (orientation_bins < 4)
        raise_usage("invalid-parameter", "orientation_bins must be >= 4");
    if (!(peak_ratio > 0.0 && peak_ratio <= 1.0))
        raise_usage("invalid-parameter", "peak_ratio must lie in (0,1]");
    if (!(descriptor_clamp > 0.0 && descriptor_clamp <= 1.0))
        raise_usage("invalid-parameter", "descriptor_clamp must lie in (0,1]");
    if (octaves < 0)
        raise_usage("invalid-parameter", "octaves must be >= 0");
    if (!(contrast_threshold > 0.0))
        raise_usage("invalid-parameter", "contrast_threshold must be positive");
}

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
    if (sigma <= 0.0)
        return img;

    const int radius = static_cast<int>(std::ceil(4.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += kernel[i + radius];
    }
    for (double& w : kernel)
        w /= sum;

    const int w = img.width, h = img.height;
    GrayImage tmp;
    tmp.width = w;
    tmp.height = h;
    tmp.data.resize(img.data.size());
    for (int y = 0; y < h; ++y) {
        const double* row = &img.data[static_cast<std::size_t>(y) * w];
        double* out = &tmp.data[static_cast<std::size_t>(y) * w];
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * row[reflect(x + i, w)];
            out[x] = acc;
        }
    }

    GrayImage out;
    out.width = w;
    out.height = h;
    out.data.resize(img.data.size());
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * tmp.data[static_cast<std::size_t>(reflect(y + i, h)) * w + x];
            out.data[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
    return out;
}

GrayImage upsample_double(const GrayImage& img) {
    GrayImage out;
    out.width = img.width * 2;
    out.height = img.height * 2;
    out.data.resize(out.pixel_count());
    for (int y = 0; y < out.height; ++y) {
        const double sy = 0.5 * y;
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double fy = sy - y0;
        for (int x = 0; x < out.width; ++x) {
            const double sx = 0.5 * x;
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double fx = sx - x0;
            const double v = (1 - fy) * ((1 - fx) * img.at(x0, y0) + fx * img.at(x1, y0)) +
                             fy * ((1 - fx) * img.at(x0, y1) + fx * img.at(x1, y1));
            out.at(x, y) = v;
        }
    }
    return out;
}

GrayImage downsample_half(const GrayImage& img) {
    GrayImage out;
    out.width = (img.width + 1) / 2;
    out.height = (img.height + 1) / 2;
    out.data.resize(out.pixel_count());
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            out.at(x, y) = img.at(2 * x, 2 * y);
    return out;
}

ScaleSpace build_scale_space(const GrayImage& img, const SiftParams& params) {
    params.validate();

    ScaleSpace ss;
    ss.scales_per_octave = params.scales_per_octave;
    ss.base_sigma = params.base_sigma;
    ss.upsample_factor = params.initial_upsample ? 2 : 1;

    GrayImage base = params.initial_upsample ? upsample_double(img) : img;
    if (base.width < 16 || base.height < 16)
        raise_data("image-too-small", "need at least 16x16 pixels after optional upsampling");

    // Assumed camera blur of the raw pixels, doubled by upsampling.
    const double assumed_blur = 0.5 * ss.upsample_factor;

    int max_octaves = 0;
    {
        int w = base.width, h = base.height;
        while (std::min(w, h) >= kMinOctaveDim) {
            ++max_octaves;
            w = (w + 1) / 2;
            h = (h + 1) / 2;
        }
    }
    int n_octaves = params.octaves > 0
                        ? params.octaves
                        : static_cast<int>(std::floor(std::log2(std::min(base.width, base.height)))) - 2;
    n_octaves = std::clamp(n_octaves, 1, max_octaves);

    const int s = params.scales_per_octave;
    const double sigma0 = params.base_sigma;

    GrayImage seed = std::move(base);
    double seed_blur = assumed_blur;
    for (int o = 0; o < n_octaves; ++o) {
        ScaleSpace::Octave oct;
        oct.gaussians.reserve(s + 3);
        oct.dogs.reserve(s + 2);

        const double pre = sigma0 > seed_blur
                               ? std::sqrt(sigma0 * sigma0 - seed_blur * seed_blur)
                               : 0.0;
        oct.gaussians.push_back(gaussian_blur(seed, pre));
        for (int i = 1; i < s + 3; ++i) {
            const double s_prev = sigma0 * std::pow(2.0, static_cast<double>(i - 1) / s);
            const double s_next = sigma0 * std::pow(2.0, static_cast<double>(i) / s);
            const double inc = std::sqrt(s_next * s_next - s_prev * s_prev);
            oct.gaussians.push_back(gaussian_blur(oct.gaussians.back(), inc));
        }
        for (int i = 0; i < s + 2; ++i) {
            GrayImage dog;
            dog.width = oct.gaussians[i].width;
            dog.height = oct.gaussians[i].height;
            dog.data.resize(dog.pixel_count());
            for (std::size_t p = 0; p < dog.data.size(); ++p)
                dog.data[p] = oct.gaussians[i + 1].data[p] - oct.gaussians[i].data[p];
            oct.dogs.push_back(std::move(dog));
        }

        if (o + 1 < n_octaves) {
            seed = downsample_half(oct.gaussians[s]); // level with sigma = 2 sigma0
            seed_blur = sigma0; // octave-relative blur of the new seed
        }
        ss.octaves.push_back(std::move(oct));
    }
    return ss;
}

std::vector<ExtremumCandidate> detect_extrema(const ScaleSpace& ss, const SiftParams& params) {
    std::vector<ExtremumCandidate> out;
    const double prefilter = 0.5 * params.contrast_threshold;
    const int s = ss.scales_per_octave;

    for (int o = 0; o < static_cast<int>(ss.octaves.size()); ++o) {
        const auto& dogs = ss.octaves[o].dogs;
        for (int l = 1; l <= s; ++l) {
            const GrayImage& below = dogs[l - 1];
            const GrayImage& mid = dogs[l];
            const GrayImage& above = dogs[l + 1];
            const int w = mid.width, h = mid.height;
            for (int y = 1; y < h - 1; ++y) {
                for (int x = 1; x < w - 1; ++x) {
                    const double v = mid.at(x, y);
                    if (std::abs(v) <= prefilter)
                        continue;
                    bool is_max = true, is_min = true;
                    for (int dy = -1; dy <= 1 && (is_max || is_min); ++dy) {
                        for (int dx = -1; dx <= 1 && (is_max || is_min); ++dx) {
                            const double nb = below.at(x + dx, y + dy);
                            const double na = above.at(x + dx, y + dy);
                            if (nb >= v || na >= v)
                                is_max = false;
                            if (nb <= v || na <= v)
                                is_min = false;
                            if (dx == 0 && dy == 0)
                                continue;
                            const double nm = mid.at(x + dx, y + dy);
                            if (nm >= v)
                                is_max = false;
                            if (nm <= v)
                                is_min = false;
                        }
                    }
                    if (is_max || is_min)
                        out.push_back({o, l, x, y});
                }
            }
        }
    }
    return out;
}

std::optional<LocalizedKeypoint> localize_keypoint(const ExtremumCandidate& cand,
                                                   const ScaleSpace& ss, const SiftParams& params,
                                                   RejectReason* reason) {
    const auto& dogs = ss.octaves[cand.octave].dogs;
    const int s = ss.scales_per_octave;
    const int w = dogs[0].width, h = dogs[0].height;

    auto reject = [&](RejectReason r) -> std::optional<LocalizedKeypoint> {
        if (reason)
            *reason = r;
        return std::nullopt;
    };

    int x = cand.x, y = cand.y, l = cand.level;
    Eigen::Vector3d grad;
    Eigen::Vector3d offset;
    double dxx = 0, dyy = 0, dxy = 0;
    bool converged = false;

    for (int step = 0; step < kMaxRelocalizations; ++step) {
        const GrayImage& d0 = dogs[l - 1];
        const GrayImage& d1 = dogs[l];
        const GrayImage& d2 = dogs[l + 1];

        grad[0] = 0.5 * (d1.at(x + 1, y) - d1.at(x - 1, y));
        grad[1] = 0.5 * (d1.at(x, y + 1) - d1.at(x, y - 1));
        grad[2] = 0.5 * (d2.at(x, y) - d0.at(x, y));

        dxx = d1.at(x + 1, y) + d1.at(x - 1, y) - 2.0 * d1.at(x, y);
        dyy = d1.at(x, y + 1) + d1.at(x, y - 1) - 2.0 * d1.at(x, y);
        const double dss = d2.at(x, y) + d0.at(x, y) - 2.0 * d1.at(x, y);
        dxy = 0.25 * (d1.at(x + 1, y + 1) + d1.at(x - 1, y - 1) - d1.at(x - 1, y + 1) -
                      d1.at(x + 1, y - 1));
        const double dxs = 0.25 * (d2.at(x + 1, y) + d0.at(x - 1, y) - d2.at(x - 1, y) -
                                   d0.at(x + 1, y));
        const double dys = 0.25 * (d2.at(x, y + 1) + d0.at(x, y - 1) - d2.at(x, y - 1) -
                                   d0.at(x, y + 1));

        Eigen::Matrix3d hessian;
        hessian << dxx, dxy, dxs,
                   dxy, dyy, dys,
                   dxs, dys, dss;

        const double det = hessian.determinant();
        if (std::abs(det) < 1e-30)
            return reject(RejectReason::unstable);
        offset = hessian.inverse() * (-grad);

        if (std::abs(offset[0]) <= 0.5 && std::abs(offset[1]) <= 0.5 && std::abs(offset[2]) <= 0.5) {
            converged = true;
            break;
        }

        x += offset[0] > 0.5 ? 1 : (offset[0] < -0.5 ? -1 : 0);
        y += offset[1] > 0.5 ? 1 : (offset[1] < -0.5 ? -1 : 0);
        l += offset[2] > 0.5 ? 1 : (offset[2] < -0.5 ? -1 : 0);
        if (x < 1 || x > w - 2 || y < 1 || y > h - 2 || l < 1 || l > s)
            return reject(RejectReason::out_of_pyramid);
    }
    if (!converged)
        return reject(RejectReason::unstable);

    const double value = dogs[l].at(x, y) + 0.5 * grad.dot(offset);
    if (std::abs(value) < params.contrast_threshold / s)
        return reject(RejectReason::low_contrast);

    // 2x2 spatial Hessian edge test
    const double tr = dxx + dyy;
    const double det2 = dxx * dyy - dxy * dxy;
    const double r = params.edge_ratio;
    if (det2 <= 0.0 || tr * tr / det2 >= (r + 1.0) * (r + 1.0) / r)
        return reject(RejectReason::edge_response);

    LocalizedKeypoint kp;
    kp.octave = cand.octave;
    kp.level = l;
    kp.ix = x;
    kp.iy = y;
    kp.x = x + offset[0];
    kp.y = y + offset[1];
    kp.level_offset = offset[2];
    kp.value = value;
    kp.scale_octave = ss.base_sigma * std::pow(2.0, (l + offset[2]) / s);
    return kp;
}

namespace {

// gradient by central differences; valid for x,y in [1, dim-2]
inline void gradient_at(const GrayImage& img, int x, int y, double& mag, double& ori) {
    const double dx = 0.5 * (img.at(x + 1, y) - img.at(x - 1, y));
    const double dy = 0.5 * (img.at(x, y + 1) - img.at(x, y - 1));
    mag = std::sqrt(dx * dx + dy * dy);
    ori = wrap_angle(std::atan2(dy, dx));
}

int gradient_level(const LocalizedKeypoint& kp, int s) {
    return std::clamp(static_cast<int>(std::lround(kp.level + kp.level_offset)), 1, s);
}

} // namespace

std::vector<double> assign_orientation(const LocalizedKeypoint& kp, const ScaleSpace& ss,
                                       const SiftParams& params) {
    const int nbins = params.orientation_bins;
    const GrayImage& img =
        ss.octaves[kp.octave].gaussians[gradient_level(kp, ss.scales_per_octave)];
    const int w = img.width, h = img.height;

    const double sigma_w = 1.5 * kp.scale_octave;
    const int radius = static_cast<int>(std::lround(3.0 * sigma_w));
    const int cx = static_cast<int>(std::lround(kp.x));
    const int cy = static_cast<int>(std::lround(kp.y));

    std::vector<double> hist(nbins, 0.0);
    for (int dy = -radius; dy <= radius; ++dy) {
        const int py = cy + dy;
        if (py < 1 || py > h - 2)
            continue;
        for (int dx = -radius; dx <= radius; ++dx) {
            const int px = cx + dx;
            if (px < 1 || px > w - 2)
                continue;
            double mag, ori;
            gradient_at(img, px, py, mag, ori);
            const double ddx = px - kp.x;
            const double ddy = py - kp.y;
            const double weight = std::exp(-(ddx * ddx + ddy * ddy) / (2.0 * sigma_w * sigma_w));
            // round-to-nearest: bin centers sit at i * 2pi/nbins
            const int bin = static_cast<int>(std::lround(ori / kTwoPi * nbins)) % nbins;
            hist[bin] += mag * weight;
        }
    }

    // two circular smoothing passes
    for (int pass = 0; pass < 2; ++pass) {
        std::vector<double> smoothed(nbins);
        for (int i = 0; i < nbins; ++i)
            smoothed[i] = (hist[(i + nbins - 1) % nbins] + hist[i] + hist[(i + 1) % nbins]) / 3.0;
        hist = std::move(smoothed);
    }

    const int dominant = static_cast<int>(std::max_element(hist.begin(), hist.end()) - hist.begin());
    const double max_val = hist[dominant];
    if (max_val <= 0.0)
        return {};

    auto interpolated_theta = [&](int i) {
        const double h0 = hist[(i + nbins - 1) % nbins];
        const double h1 = hist[i];
        const double h2 = hist[(i + 1) % nbins];
        const double denom = h0 - 2.0 * h1 + h2;
        const double dx = std::abs(denom) > 1e-18 ? 0.5 * (h0 - h2) / denom : 0.0;
        return wrap_angle(kTwoPi * (i + std::clamp(dx, -0.5, 0.5)) / nbins);
    };

    std::vector<double> orientations;
    orientations.push_back(interpolated_theta(dominant));
    for (int i = 0; i < nbins; ++i) {
        if (i == dominant)
            continue;
        const double h0 = hist[(i + nbins - 1) % nbins];
        const double h2 = hist[(i + 1) % nbins];
        if (hist[i] > h0 && hist[i] > h2 && hist[i] >= params.peak_ratio * max_val)
            orientations.push_back(interpolated_theta(i));
    }
    return orientations;
}

std::optional<std::array<double, SiftParams::descriptor_size>>
compute_descriptor(const LocalizedKeypoint& kp, double orientation, const ScaleSpace& ss,
                   const SiftParams& params) {
    constexpr int d = SiftParams::descriptor_grid;
    constexpr int nbins = SiftParams::descriptor_orientations;

    const GrayImage& img =
        ss.octaves[kp.octave].gaussians[gradient_level(kp, ss.scales_per_octave)];
    const int w = img.width, h = img.height;

    const double bin_width = 3.0 * kp.scale_octave; // pixels per spatial cell
    const double radius_f = bin_width * M_SQRT2 * (d + 1) * 0.5;
    const int radius = static_cast<int>(std::lround(std::min(radius_f, std::hypot(w, h))));
    const double cos_t = std::cos(orientation);
    const double sin_t = std::sin(orientation);
    const double weight_sigma = 0.5 * d; // half the window, in cell units

    std::array<double, SiftParams::descriptor_size> desc{};

    const int cx = static_cast<int>(std::lround(kp.x));
    const int cy = static_cast<int>(std::lround(kp.y));
    for (int dy = -radius; dy <= radius; ++dy) {
        const int py = cy + dy;
        if (py < 1 || py > h - 2)
            continue;
        for (int dx = -radius; dx <= radius; ++dx) {
            const int px = cx + dx;
            if (px < 1 || px > w - 2)
                continue;

            const double ox = px - kp.x;
            const double oy = py - kp.y;
            // rotate into the keypoint frame and express in cell units
            const double rx = (cos_t * ox + sin_t * oy) / bin_width;
            const double ry = (-sin_t * ox + cos_t * oy) / bin_width;
            const double xbin = rx + d / 2.0 - 0.5;
            const double ybin = ry + d / 2.0 - 0.5;
            if (xbin <= -1.0 || xbin >= d || ybin <= -1.0 || ybin >= d)
                continue;

            double mag, ori;
            gradient_at(img, px, py, mag, ori);
            const double obin = wrap_angle(ori - orientation) / kTwoPi * nbins;
            const double weight =
                std::exp(-(rx * rx + ry * ry) / (2.0 * weight_sigma * weight_sigma));
            const double contrib = mag * weight;

            const int x0 = static_cast<int>(std::floor(xbin));
            const int y0 = static_cast<int>(std::floor(ybin));
            const int o0 = static_cast<int>(std::floor(obin));
            const double fx = xbin - x0;
            const double fy = ybin - y0;
            const double fo = obin - o0;

            for (int yi = 0; yi < 2; ++yi) {
                const int yb = y0 + yi;
                if (yb < 0 || yb >= d)
                    continue;
                const double wy = yi == 0 ? 1.0 - fy : fy;
                for (int xi = 0; xi < 2; ++xi) {
                    const int xb = x0 + xi;
                    if (xb < 0 || xb >= d)
                        continue;
                    const double wx = xi == 0 ? 1.0 - fx : fx;
                    for (int oi = 0; oi < 2; ++oi) {
                        const int ob = (o0 + oi) % nbins;
                        const double wo = oi == 0 ? 1.0 - fo : fo;
                        desc[(yb * d + xb) * nbins + ob] += contrib * wy * wx * wo;
                    }
                }
            }
        }
    }

    // Normalize against a unit sphere with entries capped at the clamp.
    // A single clamp-renormalize can push entries back over the cap, so
    // iterate to the joint fixed point.
    auto norm_of = [&desc]() {
        double sq = 0.0;
        for (double v : desc)
            sq += v * v;
        return std::sqrt(sq);
    };
    double norm = norm_of();
    if (norm < 1e-12)
        return std::nullopt;
    for (double& v : desc)
        v /= norm;
    for (int pass = 0; pass < 32; ++pass) {
        bool clamped = false;
        for (double& v : desc) {
            if (v > params.descriptor_clamp) {
                v = params.descriptor_clamp;
                clamped = true;
            }
        }
        norm = norm_of();
        for (double& v : desc)
            v /= norm;
        if (!clamped || std::abs(norm - 1.0) < 1e-9)
            break;
    }
    return desc;
}

std::vector<Keypoint> extract_sift(const GrayImage& img, const Mask* keep_mask,
                                   const SiftParams& params) {
    if (keep_mask && (keep_mask->width != img.width || keep_mask->height != img.height))
        raise_data("dimension-mismatch", "mask dimensions do not match the image");

    const ScaleSpace ss = build_scale_space(img, params);
    const auto candidates = detect_extrema(ss, params);

    std::vector<Keypoint> keypoints;
    for (const ExtremumCandidate& cand : candidates) {
        const auto localized = localize_keypoint(cand, ss, params);
        if (!localized)
            continue;
        const double to_original = std::pow(2.0, localized->octave) / ss.upsample_factor;
        const double x_img = localized->x * to_original;
        const double y_img = localized->y * to_original;
        const int rx = std::clamp(static_cast<int>(std::lround(x_img)), 0, img.width - 1);
        const int ry = std::clamp(static_cast<int>(std::lround(y_img)), 0, img.height - 1);
        if (keep_mask && !keep_mask->at(rx, ry))
            continue;

        for (double theta : assign_orientation(*localized, ss, params)) {
            const auto desc = compute_descriptor(*localized, theta, ss, params);
            if (!desc)
                continue;
            Keypoint kp;
            kp.x = x_img;
            kp.y = y_img;
            kp.scale = localized->scale_octave * to_original;
            kp.orientation = theta;
            kp.descriptor = *desc;
            kp.octave = localized->octave;
            kp.level = localized->level;
            keypoints.push_back(std::move(kp));
        }
    }

    std::sort(keypoints.begin(), keypoints.end(), [](const Keypoint& a, const Keypoint& b) {
        return std::tie(a.octave, a.level, a.y, a.x, a.orientation) <
               std::tie(b.octave, b.level, b.y, b.x, b.orientation);
    });
    // distinct candidates can converge to the same refined point
    keypoints.erase(std::unique(keypoints.begin(), keypoints.end(),
                                [](const Keypoint& a, const Keypoint& b) {
                                    return a.octave == b.octave && a.level == b.level &&
                                           a.x == b.x && a.y == b.y &&
                                           a.orientation == b.orientation;
                                }),
                    keypoints.end());
    return keypoints;
}

} // namespace earsift
