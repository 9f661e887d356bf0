#include <gtest/gtest.h>

#include <sstream>

#include "cnnbp/dataio.hpp"
#include "cnnbp/errors.hpp"

using namespace cnn;

namespace {

std::string be32(std::uint32_t v) {
    return {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
            static_cast<char>(v)};
}

ParseError::Kind images_error(const std::string& bytes) {
    std::istringstream in(bytes);
    try {
        load_idx_images(in);
    } catch (const ParseError& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected parse error";
    return ParseError::Kind::Format;
}

} // namespace

TEST(Idx, HandBuiltImageFixture) {
    const std::string bytes = be32(0x00000803) + be32(2) + be32(2) + be32(2) +
                              std::string("\x00\x01\x02\x03\xff\x80\x40\x10", 8);
    std::istringstream in(bytes);
    const auto images = load_idx_images(in);
    ASSERT_EQ(images.size(), 2u);
    EXPECT_EQ(images[0].height, 2u);
    EXPECT_EQ(images[0].width, 2u);
    EXPECT_EQ(images[0].pixels, (std::vector<std::uint8_t>{0, 1, 2, 3}));
    EXPECT_EQ(images[1].pixels, (std::vector<std::uint8_t>{255, 128, 64, 16}));
}

TEST(Idx, Labels) {
    std::istringstream in(be32(0x00000801) + be32(3) + std::string("\x07\x00\x09", 3));
    EXPECT_EQ(load_idx_labels(in), (std::vector<std::size_t>{7, 0, 9}));
    std::istringstream wrong(be32(0x00000803) + be32(1) + "\x01");
    try {
        load_idx_labels(wrong);
        ADD_FAILURE();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.kind(), ParseError::Kind::BadMagic);
    }
}

TEST(Idx, Errors) {
    const std::string head = be32(0x00000803) + be32(5) + be32(2) + be32(2);
    EXPECT_EQ(images_error(head + std::string(16, 'x')), ParseError::Kind::Truncated);
    EXPECT_EQ(images_error(be32(0x00000803) + be32(5)), ParseError::Kind::Truncated);
    EXPECT_EQ(images_error(be32(0x00000801) + be32(0) + be32(0) + be32(0)), ParseError::Kind::BadMagic);
    EXPECT_EQ(images_error(be32(0x00000803) + be32(0xFFFFFFFF) + be32(0xFFFF) + be32(0xFFFF)),
              ParseError::Kind::Overflow);
    EXPECT_THROW(load_idx_images(std::filesystem::path("/nonexistent/idx")), IoError);
}

TEST(Idx, RoundTrip) {
    std::vector<RawImage> images;
    for (std::uint8_t k = 0; k < 5; ++k) {
        RawImage im{3, 4, {}};
        for (std::uint8_t i = 0; i < 12; ++i) im.pixels.push_back(static_cast<std::uint8_t>(k * 40 + i));
        images.push_back(im);
    }
    const std::vector<std::size_t> labels{0, 2, 1, 2, 0};
    std::stringstream img, lbl;
    write_idx_images(img, images);
    write_idx_labels(lbl, labels);
    const auto back = load_idx_images(img);
    ASSERT_EQ(back.size(), images.size());
    for (std::size_t k = 0; k < back.size(); ++k) EXPECT_EQ(back[k].pixels, images[k].pixels);
    EXPECT_EQ(load_idx_labels(lbl), labels);

    const Dataset d = make_dataset(back, labels, 3);
    EXPECT_EQ(d.size(), 5u);
    EXPECT_EQ(d.labels[1], one_hot(2, 3));
    EXPECT_EQ(make_dataset(back, labels, 3, 2).size(), 2u);
    for (const Tensor& t : d.images)
        for (double v : t.data()) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    EXPECT_THROW(make_dataset(back, labels, 2), DomainError);
}

TEST(Pgm, Parse) {
    std::istringstream in(std::string("P5 2 2 255\n") + std::string("\x00\x80\xff\x40", 4));
    const RawImage im = load_pgm(in);
    EXPECT_EQ(im.width, 2u);
    EXPECT_EQ(im.height, 2u);
    EXPECT_EQ(im.pixels, (std::vector<std::uint8_t>{0, 128, 255, 64}));

    std::istringstream commented(std::string("P5\n# made by hand\n2 # width\n2\n255\n") +
                                 std::string("\x00\x80\xff\x40", 4));
    EXPECT_EQ(load_pgm(commented).pixels, im.pixels);

    std::istringstream wide(std::string("P5 3 1 255\n") + std::string("\x01\x02\x03", 3));
    const RawImage w = load_pgm(wide);
    EXPECT_EQ(w.width, 3u);
    EXPECT_EQ(w.height, 1u);
}

TEST(Pgm, Errors) {
    const auto kind = [](const std::string& s) {
        std::istringstream in(s);
        try {
            load_pgm(in);
        } catch (const ParseError& e) {
            return e.kind();
        }
        ADD_FAILURE() << "expected parse error";
        return ParseError::Kind::Format;
    };
    EXPECT_EQ(kind("P6 2 2 255\n" + std::string(12, 'x')), ParseError::Kind::BadMagic);
    EXPECT_EQ(kind("P5 2 2 65535\n" + std::string(8, 'x')), ParseError::Kind::Format);
    EXPECT_EQ(kind("P5 2 2 255\n" + std::string(3, 'x')), ParseError::Kind::Truncated);
    EXPECT_EQ(kind("P5 2 x 255\n"), ParseError::Kind::Format);
    EXPECT_EQ(kind("P5 2"), ParseError::Kind::Truncated);
    EXPECT_THROW(load_pgm(std::filesystem::path("/nonexistent/a.pgm")), IoError);
}

TEST(Pgm, WriteRoundTrip) {
    const RawImage im{2, 3, {1, 2, 3, 4, 5, 6}};
    std::stringstream s;
    write_pgm(s, im);
    const RawImage back = load_pgm(s);
    EXPECT_EQ(back.pixels, im.pixels);
    EXPECT_EQ(back.height, 2u);
}

TEST(Normalize, Values) {
    const Tensor t = normalize(RawImage{1, 3, {255, 0, 128}});
    EXPECT_EQ(t.shape(), (Shape{1, 1, 3}));
    EXPECT_EQ(t[0], 1.0);
    EXPECT_EQ(t[1], 0.0);
    EXPECT_NEAR(t[2], 0.50196, 1e-5);
}

TEST(OneHot, Values) {
    EXPECT_EQ(one_hot(2, 4), Tensor({4}, {0, 0, 1, 0}));
    EXPECT_EQ(one_hot(0, 1), Tensor({1}, {1}));
    EXPECT_THROW(one_hot(4, 4), DomainError);
}

TEST(SynthBars, Construction) {
    const Dataset a = synth_bars(40, 8, 9, 5);
    const Dataset b = synth_bars(40, 8, 9, 5);
    EXPECT_EQ(a.images, b.images);
    EXPECT_EQ(a.labels, b.labels);
    EXPECT_NE(a.images, synth_bars(40, 8, 9, 6).images);
    std::size_t class0 = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const Tensor& im = a.images[k];
        const double mx = *std::max_element(im.data().begin(), im.data().end());
        const double mn = *std::min_element(im.data().begin(), im.data().end());
        EXPECT_EQ(mx, 1.0);
        EXPECT_LT(mn, 0.1);
        const bool horizontal = a.labels[k][0] == 1.0;
        class0 += horizontal;
        // exactly one full row (class 0) or column (class 1) of ones
        std::size_t full = 0;
        if (horizontal) {
            for (std::size_t i = 0; i < 8; ++i) {
                bool all = true;
                for (std::size_t j = 0; j < 9; ++j) all &= im.at(0, i, j) == 1.0;
                full += all;
            }
        } else {
            for (std::size_t j = 0; j < 9; ++j) {
                bool all = true;
                for (std::size_t i = 0; i < 8; ++i) all &= im.at(0, i, j) == 1.0;
                full += all;
            }
        }
        EXPECT_EQ(full, 1u);
    }
    EXPECT_EQ(class0, 20u);
    EXPECT_NO_THROW(a.validate());
    EXPECT_THROW(synth_bars(10, 3, 8, 0), DomainError);
    EXPECT_THROW(synth_bars(9, 8, 8, 0), DomainError);
}
