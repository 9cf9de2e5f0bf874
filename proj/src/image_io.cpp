#include "earsift/errors.hpp"
#include "earsift/image.hpp"

#include <png.h>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace earsift {

namespace {

std::uint8_t to_byte(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

std::vector<std::uint8_t> read_all_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        raise_io("file-not-found", "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool has_png_magic(const std::vector<std::uint8_t>& bytes) {
    static const std::uint8_t magic[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    if (bytes.size() < 8)
        return false;
    return std::equal(magic, magic + 8, bytes.begin());
}

// --- PNM (P5/P6) ------------------------------------------------------

struct PnmHeader {
    int type = 0; // 5 or 6
    int width = 0;
    int height = 0;
    int maxval = 0;
    std::size_t data_offset = 0;
};

int pnm_next_int(const std::vector<std::uint8_t>& b, std::size_t& pos) {
    // skip whitespace and '#' comments
    while (pos < b.size()) {
        if (std::isspace(b[pos])) {
            ++pos;
        } else if (b[pos] == '#') {
            while (pos < b.size() && b[pos] != '\n')
                ++pos;
        } else {
            break;
        }
    }
    if (pos >= b.size() || !std::isdigit(b[pos]))
        raise_data("corrupt-data", "malformed PNM header");
    long v = 0;
    while (pos < b.size() && std::isdigit(b[pos])) {
        v = v * 10 + (b[pos] - '0');
        if (v > 1 << 30)
            raise_data("corrupt-data", "PNM header value out of range");
        ++pos;
    }
    return static_cast<int>(v);
}

PnmHeader parse_pnm_header(const std::vector<std::uint8_t>& bytes) {
    PnmHeader h;
    h.type = bytes[1] - '0';
    std::size_t pos = 2;
    h.width = pnm_next_int(bytes, pos);
    h.height = pnm_next_int(bytes, pos);
    h.maxval = pnm_next_int(bytes, pos);
    if (pos >= bytes.size() || !std::isspace(bytes[pos]))
        raise_data("corrupt-data", "missing whitespace after PNM header");
    h.data_offset = pos + 1;
    if (h.width <= 0 || h.height <= 0)
        raise_data("corrupt-data", "non-positive PNM dimensions");
    if (h.maxval <= 0 || h.maxval > 255)
        raise_data("unsupported-format", "only 8-bit PNM supported (maxval <= 255)");
    return h;
}

ColorImage load_pnm(const std::vector<std::uint8_t>& bytes) {
    const PnmHeader h = parse_pnm_header(bytes);
    const int channels = h.type == 6 ? 3 : 1;
    const std::size_t need = static_cast<std::size_t>(h.width) * h.height * channels;
    if (bytes.size() - h.data_offset < need)
        raise_data("corrupt-data", "truncated PNM pixel data");

    ColorImage img;
    img.width = h.width;
    img.height = h.height;
    img.data.resize(img.pixel_count() * 3);
    const std::uint8_t* src = bytes.data() + h.data_offset;
    const double scale = 1.0 / h.maxval;
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        if (channels == 3) {
            img.data[3 * i + 0] = src[3 * i + 0] * scale;
            img.data[3 * i + 1] = src[3 * i + 1] * scale;
            img.data[3 * i + 2] = src[3 * i + 2] * scale;
        } else {
            const double v = src[i] * scale;
            img.data[3 * i + 0] = v;
            img.data[3 * i + 1] = v;
            img.data[3 * i + 2] = v;
        }
    }
    return img;
}

// --- PNG ---------------------------------------------------------------

ColorImage load_png_rgb(const std::filesystem::path& path) {
    png_image im{};
    im.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&im, path.string().c_str()))
        raise_data("corrupt-data", "PNG decode failed: " + std::string(im.message));
    im.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(im));
    if (!png_image_finish_read(&im, nullptr, buffer.data(), 0, nullptr)) {
        png_image_free(&im);
        raise_data("corrupt-data", "PNG decode failed: " + std::string(im.message));
    }

    ColorImage img;
    img.width = static_cast<int>(im.width);
    img.height = static_cast<int>(im.height);
    img.data.resize(img.pixel_count() * 3);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        img.data[i] = buffer[i] / 255.0;
    return img;
}

} // namespace

ColorImage load_image(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path))
        raise_io("file-not-found", path.string());
    const auto bytes = read_all_bytes(path);
    if (has_png_magic(bytes))
        return load_png_rgb(path);
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6'))
        return load_pnm(bytes);
    raise_data("unsupported-format", path.string() + " is neither PNG nor binary PNM");
}

Mask load_mask(const std::filesystem::path& path) {
    const ColorImage img = load_image(path);
    Mask mask;
    mask.width = img.width;
    mask.height = img.height;
    mask.bits.resize(img.pixel_count());
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        const double v = (img.data[3 * i] + img.data[3 * i + 1] + img.data[3 * i + 2]) / 3.0;
        mask.bits[i] = v >= 128.0 / 255.0 ? 1 : 0;
    }
    if (mask.true_count() == 0)
        raise_data("empty-mask", path.string() + " selects no pixels");
    return mask;
}

void save_ppm(const ColorImage& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        raise_io("io-failure", "cannot write " + path.string());
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c)
                row[3 * x + c] = to_byte(img.at(x, y, c));
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out)
        raise_io("io-failure", "short write to " + path.string());
}

void save_pgm(const GrayImage& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        raise_io("io-failure", "cannot write " + path.string());
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width));
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x)
            row[x] = to_byte(img.at(x, y));
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out)
        raise_io("io-failure", "short write to " + path.string());
}

void save_pgm_labels(const std::vector<std::uint8_t>& labels, int width, int height,
                     const std::filesystem::path& path) {
    if (labels.size() != static_cast<std::size_t>(width) * height)
        raise_internal("dimension-mismatch", "label buffer does not match dimensions");
    std::ofstream out(path, std::ios::binary);
    if (!out)
        raise_io("io-failure", "cannot write " + path.string());
    out << "P5\n" << width << " " << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
    if (!out)
        raise_io("io-failure", "short write to " + path.string());
}

void save_png(const ColorImage& img, const std::filesystem::path& path) {
    std::vector<std::uint8_t> buffer(img.pixel_count() * 3);
    for (std::size_t i = 0; i < buffer.size(); ++i)
        buffer[i] = to_byte(img.data[i]);

    png_image im{};
    im.version = PNG_IMAGE_VERSION;
    im.width = static_cast<png_uint_32>(img.width);
    im.height = static_cast<png_uint_32>(img.height);
    im.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&im, path.string().c_str(), 0, buffer.data(), 0, nullptr))
        raise_io("io-failure", "PNG encode failed for " + path.string() + ": " + im.message);
}

} // namespace earsift
