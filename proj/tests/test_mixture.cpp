#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "earsift/errors.hpp"
#include "earsift/mixture.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace earsift;
using namespace earsift::test;

namespace {

PixelSet make_pixels(const std::vector<Eigen::Vector3d>& colors) {
    PixelSet set;
    int i = 0;
    for (const auto& c : colors) {
        set.samples.push_back({i % 512, i / 512, c});
        ++i;
    }
    return set;
}

PixelSet random_pixels(Rng& rng, int n) {
    std::vector<Eigen::Vector3d> colors;
    colors.reserve(n);
    for (int i = 0; i < n; ++i)
        colors.emplace_back(rng.next_double(), rng.next_double(), rng.next_double());
    return make_pixels(colors);
}

} // namespace

TEST_CASE("vq_codebook separates two point clusters exactly") {
    const Eigen::Vector3d lo(0.1, 0.1, 0.1), hi(0.9, 0.9, 0.9);
    const PixelSet pixels = make_pixels({lo, lo, lo, hi, hi, hi});
    const Codebook cb = vq_codebook(pixels, 2, 5);
    REQUIRE(cb.centroids.size() == 2);
    const bool order_a = cb.centroids[0].isApprox(lo) && cb.centroids[1].isApprox(hi);
    const bool order_b = cb.centroids[0].isApprox(hi) && cb.centroids[1].isApprox(lo);
    CHECK((order_a || order_b));
}

TEST_CASE("vq_codebook with k=1 returns the sample mean") {
    Rng rng(11);
    const PixelSet pixels = random_pixels(rng, 40);
    const Codebook cb = vq_codebook(pixels, 1, 3);
    REQUIRE(cb.centroids.size() == 1);
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& s : pixels.samples)
        mean += s.color;
    mean /= static_cast<double>(pixels.size());
    CHECK(cb.centroids[0].isApprox(mean, 1e-12));
}

TEST_CASE("vq_codebook reaches a locally optimal partition") {
    Rng rng(17);
    const PixelSet pixels = random_pixels(rng, 50);
    const Codebook cb = vq_codebook(pixels, 3, 1234);
    // no sample is strictly closer to a foreign centroid
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        const double own = (pixels.samples[i].color - cb.centroids[cb.assignment[i]]).norm();
        for (const auto& c : cb.centroids)
            CHECK(own <= (pixels.samples[i].color - c).norm() + 1e-12);
    }
}

TEST_CASE("vq_codebook quantization error never increases") {
    Rng rng(29);
    for (int trial = 0; trial < 5; ++trial) {
        const PixelSet pixels = random_pixels(rng, 120);
        const Codebook cb = vq_codebook(pixels, 4, 100 + trial);
        for (std::size_t i = 1; i < cb.quantization_error_history.size(); ++i)
            CHECK(cb.quantization_error_history[i] <=
                  cb.quantization_error_history[i - 1] + 1e-12);
    }
}

TEST_CASE("vq_codebook rejects k larger than the sample count") {
    const PixelSet pixels = make_pixels({{0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}});
    CHECK_THROWS_WITH_AS(vq_codebook(pixels, 3, 1), doctest::Contains("too-few-samples"), Error);
}

TEST_CASE("fit_gmm on a point mass returns the regularized degenerate component") {
    const PixelSet pixels =
        make_pixels(std::vector<Eigen::Vector3d>(100, Eigen::Vector3d(0.5, 0.5, 0.5)));
    const MixtureModel model = fit_gmm(pixels, 1, 4);
    REQUIRE(model.size() == 1);
    CHECK(model.components[0].weight == doctest::Approx(1.0));
    CHECK(model.components[0].mean.isApprox(Eigen::Vector3d(0.5, 0.5, 0.5), 1e-12));
    CHECK(model.components[0].covariance.isApprox(
        kCovarianceRidge * Eigen::Matrix3d::Identity(), 1e-9));
}

TEST_CASE("fit_gmm recovers the 30/70 split of separated point masses") {
    std::vector<Eigen::Vector3d> colors(30, Eigen::Vector3d(0.1, 0.1, 0.1));
    colors.insert(colors.end(), 70, Eigen::Vector3d(0.9, 0.9, 0.9));
    const MixtureModel model = fit_gmm(make_pixels(colors), 2, 8);
    REQUIRE(model.size() == 2);
    double w_lo = 0, w_hi = 0;
    for (const auto& c : model.components)
        (c.mean[0] < 0.5 ? w_lo : w_hi) = c.weight;
    CHECK(w_lo == doctest::Approx(0.3).epsilon(1e-6));
    CHECK(w_hi == doctest::Approx(0.7).epsilon(1e-6));
}

TEST_CASE("fit_gmm recovers the generating means of a seeded two-component draw") {
    Rng rng(3131);
    GaussianComponent gen_a, gen_b;
    gen_a.mean = {0.25, 0.3, 0.35};
    gen_a.covariance = 0.0016 * Eigen::Matrix3d::Identity();
    gen_b.mean = {0.75, 0.7, 0.6};
    gen_b.covariance = 0.0025 * Eigen::Matrix3d::Identity();

    std::vector<Eigen::Vector3d> colors;
    Eigen::Vector3d truth_a = Eigen::Vector3d::Zero(), truth_b = Eigen::Vector3d::Zero();
    int n_a = 0, n_b = 0;
    for (int i = 0; i < 500; ++i) {
        const bool from_a = rng.next_double() < 0.4;
        Eigen::Vector3d x = sample_gaussian(from_a ? gen_a : gen_b, rng);
        for (int c = 0; c < 3; ++c)
            x[c] = std::clamp(x[c], 0.0, 1.0);
        colors.push_back(x);
        if (from_a) {
            truth_a += x;
            ++n_a;
        } else {
            truth_b += x;
            ++n_b;
        }
    }
    truth_a /= n_a; // ground truth straight from the labeled draws
    truth_b /= n_b;

    const MixtureModel model = fit_gmm(make_pixels(colors), 2, 77);
    REQUIRE(model.size() == 2);
    const auto& c0 = model.components[0].mean;
    const auto& c1 = model.components[1].mean;
    const double direct = (c0 - truth_a).norm() + (c1 - truth_b).norm();
    const double swapped = (c0 - truth_b).norm() + (c1 - truth_a).norm();
    if (direct <= swapped) {
        CHECK((c0 - truth_a).norm() < 0.05);
        CHECK((c1 - truth_b).norm() < 0.05);
    } else {
        CHECK((c0 - truth_b).norm() < 0.05);
        CHECK((c1 - truth_a).norm() < 0.05);
    }
}

TEST_CASE("fit_gmm is deterministic for a fixed seed") {
    Rng rng(555);
    const PixelSet pixels = random_pixels(rng, 300);
    const MixtureModel a = fit_gmm(pixels, 3, 99);
    const MixtureModel b = fit_gmm(pixels, 3, 99);
    REQUIRE(a.size() == b.size());
    for (int j = 0; j < a.size(); ++j) {
        CHECK(a.components[j].weight == b.components[j].weight);
        CHECK(a.components[j].mean == b.components[j].mean);
        CHECK(a.components[j].covariance == b.components[j].covariance);
    }
}

TEST_CASE("fit_gmm log-likelihood is non-decreasing and weights stay normalized") {
    Rng rng(808);
    for (int trial = 0; trial < 20; ++trial) {
        // lumpy data: a few clusters with noise
        std::vector<Eigen::Vector3d> colors;
        const int n_clusters = 2 + static_cast<int>(rng.next_below(3));
        for (int c = 0; c < n_clusters; ++c) {
            const Eigen::Vector3d center(rng.next_double(), rng.next_double(), rng.next_double());
            for (int i = 0; i < 60; ++i) {
                Eigen::Vector3d x = center + 0.05 * Eigen::Vector3d(rng.next_gaussian(),
                                                                    rng.next_gaussian(),
                                                                    rng.next_gaussian());
                for (int d = 0; d < 3; ++d)
                    x[d] = std::clamp(x[d], 0.0, 1.0);
                colors.push_back(x);
            }
        }
        FitDiagnostics diag;
        const MixtureModel model = fit_gmm(make_pixels(colors), 3, 1000 + trial, &diag);

        for (std::size_t i = 1; i < diag.log_likelihood.size(); ++i)
            CHECK(diag.log_likelihood[i] >= diag.log_likelihood[i - 1] - 1e-9);

        double wsum = 0.0;
        for (const auto& c : model.components)
            wsum += c.weight;
        CHECK(wsum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("fit_gmm requires 10k samples") {
    Rng rng(3);
    const PixelSet pixels = random_pixels(rng, 19);
    CHECK_THROWS_WITH_AS(fit_gmm(pixels, 2, 1), doctest::Contains("too-few-samples"), Error);
}

TEST_CASE("component_density matches the closed form at and near the mean") {
    GaussianComponent c;
    c.mean = {0.2, 0.4, 0.6};
    c.covariance = Eigen::Matrix3d::Identity();
    const double at_mean = std::pow(2.0 * M_PI, -1.5);
    CHECK(component_density(c, c.mean) == doctest::Approx(at_mean).epsilon(1e-12));
    CHECK(component_density(c, c.mean + Eigen::Vector3d(1, 0, 0)) ==
          doctest::Approx(at_mean * std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("component_density factors over axes for diagonal covariance") {
    Rng rng(404);
    for (int trial = 0; trial < 10; ++trial) {
        GaussianComponent c;
        c.mean = {rng.next_double(), rng.next_double(), rng.next_double()};
        Eigen::Vector3d sig;
        for (int i = 0; i < 3; ++i)
            sig[i] = rng.uniform(0.05, 0.5);
        c.covariance = sig.cwiseProduct(sig).asDiagonal();
        const Eigen::Vector3d x(rng.next_double(), rng.next_double(), rng.next_double());

        double product = 1.0;
        for (int i = 0; i < 3; ++i) {
            const double z = (x[i] - c.mean[i]) / sig[i];
            product *= std::exp(-0.5 * z * z) / (sig[i] * std::sqrt(2.0 * M_PI));
        }
        CHECK(component_density(c, x) == doctest::Approx(product).epsilon(1e-10));
    }
}

TEST_CASE("mixture_density collapses convex duplicates and degenerate mixtures") {
    Rng rng(777);
    const GaussianComponent c = random_component(rng);

    MixtureModel twice;
    twice.components = {c, c};
    twice.components[0].weight = 0.5;
    twice.components[1].weight = 0.5;

    MixtureModel once;
    once.components = {c};

    for (int i = 0; i < 5; ++i) {
        const Eigen::Vector3d x(rng.next_double(), rng.next_double(), rng.next_double());
        CHECK(mixture_density(twice, x) ==
              doctest::Approx(component_density(c, x)).epsilon(1e-12));
        CHECK(mixture_density(once, x) ==
              doctest::Approx(component_density(c, x)).epsilon(1e-12));
    }
}

TEST_CASE("mixture_density integrates to one on a bounding grid") {
    Rng rng(31337);
    MixtureModel model;
    for (int j = 0; j < 3; ++j) {
        GaussianComponent c = random_component(rng, 0.06, 0.15);
        c.weight = 1.0 / 3.0;
        model.components.push_back(c);
    }

    // Riemann sum over [-0.5, 1.5]^3 with a 64^3 grid
    const int n = 64;
    const double lo = -0.5, hi = 1.5;
    const double h = (hi - lo) / n;
    double integral = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                const Eigen::Vector3d x(lo + (i + 0.5) * h, lo + (j + 0.5) * h,
                                        lo + (k + 0.5) * h);
                integral += mixture_density(model, x);
            }
    integral *= h * h * h;
    CHECK(integral == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("mixture_density dominates every weighted component") {
    Rng rng(999);
    MixtureModel model;
    for (int j = 0; j < 3; ++j) {
        GaussianComponent c = random_component(rng);
        c.weight = j == 0 ? 0.5 : 0.25;
        model.components.push_back(c);
    }
    for (int i = 0; i < 10; ++i) {
        const Eigen::Vector3d x(rng.next_double(), rng.next_double(), rng.next_double());
        const double total = mixture_density(model, x);
        for (const auto& c : model.components)
            CHECK(total >= c.weight * component_density(c, x) - 1e-15);
    }
}
