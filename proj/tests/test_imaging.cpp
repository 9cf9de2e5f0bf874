#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "earsift/errors.hpp"
#include "earsift/image.hpp"
#include "earsift/random.hpp"

#include <filesystem>
#include <fstream>

using namespace earsift;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "earsift_imaging_tests";
    fs::create_directories(dir);
    return dir / name;
}

void write_bytes(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

ColorImage solid(int w, int h, double r, double g, double b) {
    ColorImage img;
    img.width = w;
    img.height = h;
    img.data.resize(static_cast<std::size_t>(w) * h * 3);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        img.data[3 * i] = r;
        img.data[3 * i + 1] = g;
        img.data[3 * i + 2] = b;
    }
    return img;
}

} // namespace

TEST_CASE("load_image decodes a 2x2 max-value PPM to all-ones") {
    const auto path = temp_file("white.ppm");
    write_bytes(path, std::string("P6\n2 2\n255\n") + std::string(12, '\xff'));
    const ColorImage img = load_image(path);
    CHECK(img.width == 2);
    CHECK(img.height == 2);
    for (double v : img.data)
        CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("load_image reports a missing file distinctly") {
    try {
        load_image("/nonexistent/definitely_missing.ppm");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == "file-not-found");
        CHECK(e.family() == ErrorFamily::io);
    }
}

TEST_CASE("load_image rejects a text file posing as an image") {
    const auto path = temp_file("fake.png");
    write_bytes(path, "this is not an image at all, just text\n");
    try {
        load_image(path);
        FAIL("expected an error");
    } catch (const Error& e) {
        const bool ok = e.code() == "unsupported-format" || e.code() == "corrupt-data";
        CHECK(ok);
    }
}

TEST_CASE("load_image rejects truncated PPM data") {
    const auto path = temp_file("short.ppm");
    write_bytes(path, std::string("P6\n4 4\n255\n") + std::string(10, '\x10'));
    CHECK_THROWS_WITH_AS(load_image(path), doctest::Contains("corrupt-data"), Error);
}

TEST_CASE("ppm round-trip reproduces identical bytes") {
    Rng rng(42);
    std::string pixels;
    for (int i = 0; i < 5 * 3 * 3; ++i)
        pixels.push_back(static_cast<char>(rng.next_below(256)));
    const auto path = temp_file("roundtrip.ppm");
    write_bytes(path, "P6\n5 3\n255\n" + pixels);

    const ColorImage img = load_image(path);
    const auto out_path = temp_file("roundtrip_out.ppm");
    save_ppm(img, out_path);

    std::ifstream a(path, std::ios::binary), b(out_path, std::ios::binary);
    const std::string bytes_a((std::istreambuf_iterator<char>(a)), {});
    const std::string bytes_b((std::istreambuf_iterator<char>(b)), {});
    CHECK(bytes_a == bytes_b);
}

TEST_CASE("png round-trip preserves pixels") {
    Rng rng(7);
    ColorImage img = solid(9, 5, 0, 0, 0);
    for (double& v : img.data)
        v = rng.next_below(256) / 255.0;
    const auto path = temp_file("roundtrip.png");
    save_png(img, path);
    const ColorImage back = load_image(path);
    REQUIRE(back.data.size() == img.data.size());
    for (std::size_t i = 0; i < img.data.size(); ++i)
        CHECK(back.data[i] == doctest::Approx(img.data[i]).epsilon(1e-12));
}

TEST_CASE("to_grayscale uses Rec. 601 weights") {
    ColorImage img = solid(1, 3, 0, 0, 0);
    img.at(0, 0, 0) = 1;
    img.at(0, 0, 1) = 1;
    img.at(0, 0, 2) = 1;
    img.at(0, 1, 0) = 1; // pure red
    const GrayImage gray = to_grayscale(img);
    CHECK(gray.at(0, 0) == doctest::Approx(1.0));
    CHECK(gray.at(0, 1) == doctest::Approx(0.299));
    CHECK(gray.at(0, 2) == doctest::Approx(0.0));
}

TEST_CASE("equalize_histogram leaves a constant image unchanged") {
    GrayImage img;
    img.width = 4;
    img.height = 4;
    img.data.assign(16, 0.375);
    const GrayImage out = equalize_histogram(img);
    for (double v : out.data)
        CHECK(v == doctest::Approx(0.375));
}

TEST_CASE("equalize_histogram matches the hand CDF on a two-bin image") {
    // bins {0,0,255,255}: cdf(0)=2=cdf_min, cdf(255)=4, n=4
    // out(0) = (2-2)/(4-2) = 0, out(255) = (4-2)/(4-2) = 1
    GrayImage img;
    img.width = 2;
    img.height = 2;
    img.data = {0.0, 0.0, 1.0, 1.0};
    const GrayImage out = equalize_histogram(img);
    CHECK(out.data[0] == doctest::Approx(0.0));
    CHECK(out.data[1] == doctest::Approx(0.0));
    CHECK(out.data[2] == doctest::Approx(1.0));
    CHECK(out.data[3] == doctest::Approx(1.0));
}

TEST_CASE("equalize_histogram is near-identity on a uniform histogram") {
    // one pixel in every bin: cdf(b) = b+1, out(b) = b/255
    GrayImage img;
    img.width = 16;
    img.height = 16;
    img.data.resize(256);
    for (int b = 0; b < 256; ++b)
        img.data[b] = b / 255.0;
    const GrayImage out = equalize_histogram(img);
    for (int b = 0; b < 256; ++b)
        CHECK(std::abs(out.data[b] - img.data[b]) <= 1.0 / 255.0 + 1e-12);
}

TEST_CASE("equalize_histogram is idempotent within one bin") {
    Rng rng(99);
    for (int trial = 0; trial < 10; ++trial) {
        GrayImage img;
        img.width = 24;
        img.height = 18;
        img.data.resize(img.pixel_count());
        // mixture of a ramp and noise so histograms are lumpy
        for (std::size_t i = 0; i < img.data.size(); ++i)
            img.data[i] = std::clamp(0.3 * rng.next_double() +
                                         0.7 * (static_cast<double>(i) / img.data.size()),
                                     0.0, 1.0);
        const GrayImage once = equalize_histogram(img);
        const GrayImage twice = equalize_histogram(once);
        for (std::size_t i = 0; i < img.data.size(); ++i)
            CHECK(std::abs(twice.data[i] - once.data[i]) <= 1.0 / 255.0 + 1e-12);
    }
}

TEST_CASE("equalize_histogram preserves rank order of bins") {
    Rng rng(123);
    GrayImage img;
    img.width = 32;
    img.height = 8;
    img.data.resize(img.pixel_count());
    for (double& v : img.data)
        v = rng.next_double();
    const GrayImage out = equalize_histogram(img);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        for (std::size_t j = 0; j < img.data.size(); ++j) {
            const int bi = static_cast<int>(std::lround(img.data[i] * 255));
            const int bj = static_cast<int>(std::lround(img.data[j] * 255));
            if (bi < bj)
                CHECK(out.data[i] <= out.data[j]);
        }
    }
}

TEST_CASE("masked_pixels returns exactly the masked samples in row-major order") {
    const ColorImage img = solid(3, 3, 0.5, 0.25, 0.75);

    SUBCASE("full-true mask") {
        const PixelSet set = masked_pixels(img, Mask::all_true(3, 3));
        REQUIRE(set.size() == 9);
        CHECK(set.samples[0].x == 0);
        CHECK(set.samples[0].y == 0);
        CHECK(set.samples[8].x == 2);
        CHECK(set.samples[8].y == 2);
        CHECK(set.samples[4].color == Eigen::Vector3d(0.5, 0.25, 0.75));
    }

    SUBCASE("singleton mask") {
        Mask mask;
        mask.width = 3;
        mask.height = 3;
        mask.bits.assign(9, 0);
        mask.set(2, 1, true);
        const PixelSet set = masked_pixels(img, mask);
        REQUIRE(set.size() == 1);
        CHECK(set.samples[0].x == 2);
        CHECK(set.samples[0].y == 1);
    }

    SUBCASE("all-false mask errors") {
        Mask mask;
        mask.width = 3;
        mask.height = 3;
        mask.bits.assign(9, 0);
        CHECK_THROWS_WITH_AS(masked_pixels(img, mask), doctest::Contains("empty-mask"), Error);
    }

    SUBCASE("dimension mismatch errors") {
        CHECK_THROWS_WITH_AS(masked_pixels(img, Mask::all_true(4, 3)),
                             doctest::Contains("dimension-mismatch"), Error);
    }
}

TEST_CASE("masked_pixels count equals the true-bit count on random masks") {
    Rng rng(2024);
    const ColorImage img = solid(17, 11, 0.2, 0.4, 0.6);
    for (int trial = 0; trial < 20; ++trial) {
        Mask mask;
        mask.width = 17;
        mask.height = 11;
        mask.bits.resize(17 * 11);
        for (auto& b : mask.bits)
            b = rng.next_double() < 0.4 ? 1 : 0;
        if (mask.true_count() == 0)
            mask.set(0, 0, true);
        CHECK(masked_pixels(img, mask).size() == mask.true_count());
    }
}
