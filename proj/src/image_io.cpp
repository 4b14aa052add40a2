#include "physem/image_io.hpp"

#include <png.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "physem/error.hpp"
#include "physem/pyramid.hpp"

namespace physem {

namespace {

struct PnmHeader {
    char kind = 0;  // '5' or '6'
    int width = 0;
    int height = 0;
    int maxval = 0;
    std::size_t data_offset = 0;
};

class PnmReader {
public:
    explicit PnmReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    PnmHeader header() {
        if (bytes_.size() < 2 || bytes_[0] != 'P' || (bytes_[1] != '5' && bytes_[1] != '6')) {
            fail(ErrorKind::InvalidInput, "not a binary PGM/PPM file");
        }
        PnmHeader h;
        h.kind = static_cast<char>(bytes_[1]);
        pos_ = 2;
        h.width = number("width");
        h.height = number("height");
        h.maxval = number("maxval");
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) fail(ErrorKind::InvalidInput, "truncated PNM header");
        h.data_offset = pos_ + 1;
        if (h.width < 1 || h.height < 1) fail(ErrorKind::InvalidInput, "PNM dimensions must be positive");
        if (h.maxval < 1 || h.maxval > 65535) fail(ErrorKind::InvalidInput, "PNM maxval out of range");
        return h;
    }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    int number(const char* what) {
        skip_space_and_comments();
        long value = 0;
        std::size_t digits = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > (1L << 24)) fail(ErrorKind::InvalidInput, std::string("PNM ") + what + " too large");
            ++pos_;
            ++digits;
        }
        if (digits == 0) fail(ErrorKind::InvalidInput, std::string("PNM header: missing ") + what);
        return static_cast<int>(value);
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

std::uint8_t scale_sample(unsigned value, int maxval) {
    if (maxval == 255) return static_cast<std::uint8_t>(value);
    value = std::min<unsigned>(value, static_cast<unsigned>(maxval));
    return static_cast<std::uint8_t>((value * 255u + static_cast<unsigned>(maxval) / 2) / static_cast<unsigned>(maxval));
}

ImagePlane decode_pnm(std::span<const std::uint8_t> bytes) {
    PnmReader reader(bytes);
    const PnmHeader h = reader.header();
    const std::size_t channels = h.kind == '6' ? 3 : 1;
    const std::size_t sample_bytes = h.maxval > 255 ? 2 : 1;
    const std::size_t count = static_cast<std::size_t>(h.width) * static_cast<std::size_t>(h.height) * channels;
    if (bytes.size() < h.data_offset + count * sample_bytes) {
        fail(ErrorKind::InvalidInput, "truncated PNM pixel data");
    }

    std::vector<std::uint8_t> samples(count);
    const std::uint8_t* data = bytes.data() + h.data_offset;
    for (std::size_t i = 0; i < count; ++i) {
        const unsigned raw = sample_bytes == 2 ? (static_cast<unsigned>(data[2 * i]) << 8) | data[2 * i + 1] : data[i];
        samples[i] = scale_sample(raw, h.maxval);
    }

    if (channels == 1) return ImagePlane(h.width, h.height, std::move(samples));
    return to_luminance(RgbImage{h.width, h.height, std::move(samples)});
}

ImagePlane decode_png(std::span<const std::uint8_t> bytes) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        fail(ErrorKind::InvalidInput, std::string("PNG decode failed: ") + image.message);
    }
    image.format = PNG_FORMAT_RGB;
    RgbImage rgb;
    rgb.width = static_cast<int>(image.width);
    rgb.height = static_cast<int>(image.height);
    rgb.rgb.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, rgb.rgb.data(), 0, nullptr)) {
        const std::string message = image.message;
        png_image_free(&image);
        fail(ErrorKind::InvalidInput, "PNG decode failed: " + message);
    }
    return to_luminance(rgb);
}

Bytes pnm_header(int width, int height, int maxval) {
    const std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n" +
                               std::to_string(maxval) + "\n";
    return Bytes(header.begin(), header.end());
}

}  // namespace

ImagePlane decode_image(std::span<const std::uint8_t> bytes) {
    static constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (bytes.size() >= 8 && std::equal(bytes.begin(), bytes.begin() + 8, kPngSignature)) return decode_png(bytes);
    return decode_pnm(bytes);
}

ImagePlane read_image_file(const std::filesystem::path& path) { return decode_image(read_file(path)); }

Bytes encode_pgm(const ImagePlane& plane) {
    Bytes out = pnm_header(plane.width(), plane.height(), 255);
    out.insert(out.end(), plane.pixels().begin(), plane.pixels().end());
    return out;
}

Bytes encode_label_pgm(std::span<const RegionId> labels, int width, int height) {
    if (width < 1 || height < 1 || labels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        fail(ErrorKind::InvalidInput, "label map size mismatch");
    }
    const RegionId max_label = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
    if (max_label > 65535) fail(ErrorKind::InvalidInput, "label ids above 65535 cannot be rendered as PGM");
    const bool wide = max_label > 255;
    Bytes out = pnm_header(width, height, wide ? 65535 : 255);
    out.reserve(out.size() + labels.size() * (wide ? 2 : 1));
    for (const RegionId id : labels) {
        if (wide) out.push_back(static_cast<std::uint8_t>(id >> 8));
        out.push_back(static_cast<std::uint8_t>(id & 0xff));
    }
    return out;
}

Bytes read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
    static std::atomic<unsigned> counter{0};
    std::filesystem::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
    write_file(tmp, text);
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        fail(ErrorKind::Io, "cannot replace " + path.string());
    }
}

}  // namespace physem
