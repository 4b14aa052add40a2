#include <gtest/gtest.h>
#include <png.h>

#include <cstring>
#include <string>

#include "physem/error.hpp"
#include "physem/image_io.hpp"

using namespace physem;

namespace {

Bytes bytes_of(const std::string& s) { return Bytes(s.begin(), s.end()); }

Bytes png_of(int width, int height, const std::vector<std::uint8_t>& rgb) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    EXPECT_TRUE(png_image_write_to_memory(&image, nullptr, &size, 0, rgb.data(), 0, nullptr));
    Bytes out(size);
    EXPECT_TRUE(png_image_write_to_memory(&image, out.data(), &size, 0, rgb.data(), 0, nullptr));
    out.resize(size);
    return out;
}

ErrorKind kind_of(const Bytes& b) {
    try {
        decode_image(b);
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::Io;  // "did not throw"
}

}  // namespace

TEST(ImageIo, DecodesPgmWithComments) {
    const ImagePlane p = decode_image(bytes_of(std::string("P5\n# made by hand\n3 2\n255\n") + "\x01\x02\x03\x04\x05\x06"));
    ASSERT_EQ(p.width(), 3);
    ASSERT_EQ(p.height(), 2);
    EXPECT_EQ(p.at(0, 0), 1);
    EXPECT_EQ(p.at(2, 1), 6);
}

TEST(ImageIo, TruncatedPgmIsInvalidInput) {
    EXPECT_EQ(kind_of(bytes_of("P5\n4 4\n255\n\x01\x02")), ErrorKind::InvalidInput);
    EXPECT_EQ(kind_of(bytes_of("P5\n4")), ErrorKind::InvalidInput);
    EXPECT_EQ(kind_of(bytes_of("hello")), ErrorKind::InvalidInput);
    EXPECT_EQ(kind_of(Bytes{}), ErrorKind::InvalidInput);
}

TEST(ImageIo, PpmGoesThroughLuminance) {
    const ImagePlane p = decode_image(bytes_of(std::string("P6\n1 1\n255\n") + "\xff" + std::string(2, '\0')));
    EXPECT_EQ(p.at(0, 0), 76);
}

TEST(ImageIo, SixteenBitSamplesAreScaled) {
    const ImagePlane p = decode_image(bytes_of(std::string("P5\n2 1\n65535\n") + std::string("\xff\xff\x80\x00", 4)));
    EXPECT_EQ(p.at(0, 0), 255);
    EXPECT_EQ(p.at(1, 0), 128);
}

TEST(ImageIo, PngRoundTrip) {
    const Bytes png = png_of(2, 1, {100, 100, 100, 255, 0, 0});
    const ImagePlane p = decode_image(png);
    ASSERT_EQ(p.width(), 2);
    EXPECT_EQ(p.at(0, 0), 100);
    EXPECT_EQ(p.at(1, 0), 76);
}

TEST(ImageIo, CorruptPngIsInvalidInput) {
    Bytes png = png_of(4, 4, std::vector<std::uint8_t>(48, 7));
    png.resize(png.size() / 2);
    EXPECT_EQ(kind_of(png), ErrorKind::InvalidInput);
}

TEST(ImageIo, PgmEncodeDecodeRoundTrip) {
    ImagePlane p(5, 3);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 5; ++x) p.at(x, y) = static_cast<std::uint8_t>(x * 40 + y);
    EXPECT_EQ(decode_image(encode_pgm(p)), p);
}

TEST(ImageIo, LabelMapWidthFollowsLargestId) {
    const std::vector<RegionId> small = {1, 2, 255, 3};
    const Bytes narrow = encode_label_pgm(small, 2, 2);
    EXPECT_EQ(narrow.size(), std::string("P5\n2 2\n255\n").size() + 4);

    const std::vector<RegionId> big = {1, 300, 2, 65535};
    const Bytes wide = encode_label_pgm(big, 2, 2);
    const std::string header = "P5\n2 2\n65535\n";
    ASSERT_EQ(wide.size(), header.size() + 8);
    EXPECT_EQ(wide[header.size() + 2], 300 >> 8);
    EXPECT_EQ(wide[header.size() + 3], 300 & 0xff);

    const std::vector<RegionId> huge = {70000};
    EXPECT_THROW(encode_label_pgm(huge, 1, 1), Error);
    EXPECT_THROW(encode_label_pgm(small, 3, 3), Error);
}
