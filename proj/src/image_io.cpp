#include "fuse3d/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include <png.h>

namespace fuse3d {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed: " + path.string());
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

std::string lower_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

// Netpbm header tokens: whitespace separated, '#' starts a comment running to end of line.
class HeaderScanner {
public:
    explicit HeaderScanner(std::string_view bytes) : bytes_(bytes) {}

    std::size_t offset() const { return pos_; }

    std::string token() {
        skip_space();
        const std::size_t start = pos_;
        while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
        if (start == pos_) throw FormatError("unexpected end of header", pos_);
        return std::string(bytes_.substr(start, pos_ - start));
    }

    std::size_t number(const char* what) {
        skip_space();
        const std::size_t at = pos_;
        const std::string t = token();
        if (!std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::isdigit(c); }) || t.size() > 9) {
            throw FormatError(std::string("invalid ") + what + " '" + t + "'", at);
        }
        return std::stoul(t);
    }

    // Exactly one whitespace byte separates the header from the raster.
    void end_header() {
        if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
            throw FormatError("missing whitespace after header", pos_);
        }
        ++pos_;
    }

private:
    void skip_space() {
        while (pos_ < bytes_.size()) {
            const char c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    std::string_view bytes_;
    std::size_t pos_ = 0;
};

ImagePlane decode_png(const std::string& bytes, bool convert_color) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw FormatError(std::string("PNG: ") + image.message, 0);
    }
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    if (color && !convert_color) {
        png_image_free(&image);
        throw ArgumentError("PNG is color and luminance conversion was not requested");
    }
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw FormatError("PNG: " + msg, 0);
    }
    ColorImage ci{image.height, image.width, color ? 3u : 1u, std::move(buffer)};
    if (color) return to_luminance(ci);
    ImagePlane out({ci.height, ci.width});
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = ci.pixels[i];
    return out;
}

} // namespace

ImagePlane to_luminance(const ColorImage& image) {
    if (image.channels != 3) {
        throw ArgumentError("to_luminance: expected 3 channels, got " + std::to_string(image.channels));
    }
    if (image.pixels.size() != image.height * image.width * 3) throw ShapeError("to_luminance: pixel count mismatch");
    ImagePlane y({image.height, image.width});
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = image.pixels[3 * i];
        const double g = image.pixels[3 * i + 1];
        const double b = image.pixels[3 * i + 2];
        y[i] = 16.0 + (65.481 * r + 128.553 * g + 24.966 * b) / 255.0;
    }
    return y;
}

ImagePlane decode_pgm(std::string_view bytes, bool convert_color) {
    HeaderScanner hs(bytes);
    const std::string magic = hs.token();
    if (magic != "P5" && magic != "P6") throw FormatError("not a binary PGM/PPM (magic '" + magic + "')", 0);
    const std::size_t channels = magic == "P5" ? 1 : 3;
    const std::size_t width = hs.number("width");
    const std::size_t height = hs.number("height");
    const std::size_t maxval = hs.number("maxval");
    if (width == 0 || height == 0) throw FormatError("zero image dimension", hs.offset());
    if (maxval == 0 || maxval > 65535) throw FormatError("maxval out of range", hs.offset());
    hs.end_header();

    const std::size_t sample_bytes = maxval > 255 ? 2 : 1;
    const std::size_t need = width * height * channels * sample_bytes;
    if (bytes.size() - hs.offset() < need) {
        throw FormatError("raster truncated: need " + std::to_string(need) + " bytes", bytes.size());
    }
    const auto* raster = reinterpret_cast<const unsigned char*>(bytes.data() + hs.offset());
    auto sample = [&](std::size_t i) -> std::size_t {
        return sample_bytes == 1 ? raster[i] : (static_cast<std::size_t>(raster[2 * i]) << 8) | raster[2 * i + 1];
    };

    if (channels == 3) {
        if (!convert_color) throw ArgumentError("PPM is color and luminance conversion was not requested");
        if (maxval != 255) throw FormatError("only 8-bit PPM is supported", hs.offset());
        ColorImage ci{height, width, 3, std::vector<std::uint8_t>(raster, raster + need)};
        return to_luminance(ci);
    }
    ImagePlane out({height, width});
    const double scale = maxval == 255 ? 1.0 : 255.0 / static_cast<double>(maxval);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(sample(i)) * scale;
    return out;
}

ImagePlane decode_pfm(std::string_view bytes) {
    HeaderScanner hs(bytes);
    const std::string magic = hs.token();
    if (magic != "Pf") throw FormatError("not a grayscale PFM (magic '" + magic + "')", 0);
    const std::size_t width = hs.number("width");
    const std::size_t height = hs.number("height");
    const std::size_t scale_at = hs.offset();
    const std::string scale_tok = hs.token();
    double scale = 0.0;
    try {
        scale = std::stod(scale_tok);
    } catch (const std::exception&) {
        throw FormatError("invalid PFM scale '" + scale_tok + "'", scale_at);
    }
    if (scale == 0.0 || width == 0 || height == 0) throw FormatError("invalid PFM header", scale_at);
    hs.end_header();
    const bool little = scale < 0.0;

    const std::size_t need = width * height * 4;
    if (bytes.size() - hs.offset() < need) {
        throw FormatError("raster truncated: need " + std::to_string(need) + " bytes", bytes.size());
    }
    const auto* raster = reinterpret_cast<const unsigned char*>(bytes.data() + hs.offset());
    ImagePlane out({height, width});
    // Rows are stored bottom to top.
    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t x = 0; x < width; ++x) {
            const unsigned char* p = raster + 4 * (r * width + x);
            std::uint32_t bits = 0;
            for (int k = 0; k < 4; ++k) {
                const unsigned b = little ? p[k] : p[3 - k];
                bits |= static_cast<std::uint32_t>(b) << (8 * k);
            }
            out(height - 1 - r, x) = static_cast<double>(std::bit_cast<float>(bits));
        }
    }
    return out;
}

std::string encode_pgm(const ImagePlane& image) {
    std::string out = "P5\n" + std::to_string(image.dim(1)) + " " + std::to_string(image.dim(0)) + "\n255\n";
    out.reserve(out.size() + image.size());
    for (double v : image.values()) {
        const double r = std::clamp(std::round(v), 0.0, 255.0);
        out.push_back(static_cast<char>(static_cast<unsigned char>(r)));
    }
    return out;
}

std::string encode_pfm(const ImagePlane& image) {
    const std::size_t h = image.dim(0);
    const std::size_t w = image.dim(1);
    std::string out = "Pf\n" + std::to_string(w) + " " + std::to_string(h) + "\n-1.0\n";
    out.reserve(out.size() + 4 * image.size());
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t x = 0; x < w; ++x) {
            const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(image(h - 1 - r, x)));
            for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((bits >> (8 * k)) & 0xFF));
        }
    }
    return out;
}

ImagePlane load_image(const std::filesystem::path& path, bool convert_color) {
    const std::string bytes = read_file(path);
    const std::string ext = lower_extension(path);
    if (ext == ".png") return decode_png(bytes, convert_color);
    if (ext == ".pfm") return decode_pfm(bytes);
    if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return decode_pgm(bytes, convert_color);
    throw FormatError("unsupported image format '" + ext + "' for " + path.string(), 0);
}

void save_image(const ImagePlane& image, const std::filesystem::path& path) {
    const std::string ext = lower_extension(path);
    if (ext == ".pgm") {
        write_file(path, encode_pgm(image));
    } else if (ext == ".pfm") {
        write_file(path, encode_pfm(image));
    } else {
        throw FormatError("unsupported output format '" + ext + "' for " + path.string(), 0);
    }
}

bool is_image_file(const std::filesystem::path& path) {
    const std::string ext = lower_extension(path);
    return ext == ".png" || ext == ".pgm" || ext == ".ppm" || ext == ".pnm" || ext == ".pfm";
}

} // namespace fuse3d
