#include "cnnbp/dataio.hpp"

#include <array>
#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "cnnbp/errors.hpp"
#include "cnnbp/random.hpp"

namespace cnn {

namespace {

// Refuse headers that would make us allocate more than this many payload bytes.
constexpr std::uint64_t kMaxIdxPayload = std::uint64_t{1} << 32;

std::uint32_t read_be32(std::istream& in, const char* field) {
    std::array<unsigned char, 4> b{};
    in.read(reinterpret_cast<char*>(b.data()), 4);
    if (in.gcount() != 4) {
        throw ParseError(ParseError::Kind::Truncated,
                         std::string("IDX header truncated while reading ") + field);
    }
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
           std::uint32_t{b[3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
    const std::array<char, 4> b{static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                                static_cast<char>(v >> 8), static_cast<char>(v)};
    out.write(b.data(), 4);
}

void expect_magic(std::istream& in, std::uint32_t expected, const char* what) {
    const std::uint32_t magic = read_be32(in, "magic");
    if (magic != expected) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%s: bad IDX magic 0x%08x, expected 0x%08x", what, magic,
                      expected);
        throw ParseError(ParseError::Kind::BadMagic, buf);
    }
}

std::vector<std::uint8_t> read_payload(std::istream& in, std::uint64_t bytes, const char* what) {
    std::vector<std::uint8_t> payload(static_cast<std::size_t>(bytes));
    in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(bytes));
    if (static_cast<std::uint64_t>(in.gcount()) != bytes) {
        throw ParseError(ParseError::Kind::Truncated,
                         std::string(what) + ": payload truncated, expected " +
                             std::to_string(bytes) + " bytes, got " +
                             std::to_string(in.gcount()));
    }
    return payload;
}

std::ifstream open_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return in;
}

// Next PGM header token, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& in) {
    std::string token;
    int ch = in.get();
    while (ch != EOF) {
        if (ch == '#') {
            while (ch != EOF && ch != '\n' && ch != '\r') {
                ch = in.get();
            }
        } else if (std::isspace(ch)) {
            ch = in.get();
        } else {
            break;
        }
    }
    while (ch != EOF && !std::isspace(ch) && ch != '#') {
        token.push_back(static_cast<char>(ch));
        ch = in.get();
    }
    if (ch == '#') {
        in.unget();
    }
    if (token.empty()) {
        throw ParseError(ParseError::Kind::Truncated, "PGM header truncated");
    }
    return token;
}

std::size_t pgm_number(std::istream& in, const char* field) {
    const std::string token = pgm_token(in);
    std::size_t value = 0;
    for (char c : token) {
        if (c < '0' || c > '9') {
            throw ParseError(ParseError::Kind::Format,
                             std::string("PGM ") + field + " is not a number: " + token);
        }
        if (value > (std::numeric_limits<std::uint32_t>::max() - 9) / 10) {
            throw ParseError(ParseError::Kind::Overflow, std::string("PGM ") + field + " too large");
        }
        value = value * 10 + static_cast<std::size_t>(c - '0');
    }
    return value;
}

} // namespace

std::vector<RawImage> load_idx_images(std::istream& in) {
    expect_magic(in, kIdxImageMagic, "images");
    const std::uint64_t count = read_be32(in, "image count");
    const std::uint64_t rows = read_be32(in, "row count");
    const std::uint64_t cols = read_be32(in, "column count");
    if (count != 0 && (rows == 0 || cols == 0)) {
        throw ParseError(ParseError::Kind::Inconsistent, "IDX images with a zero extent");
    }
    const std::uint64_t plane = rows * cols;
    if (plane > kMaxIdxPayload || (plane != 0 && count > kMaxIdxPayload / plane)) {
        throw ParseError(ParseError::Kind::Overflow,
                         "IDX image header dimensions overflow: " + std::to_string(count) + "x" +
                             std::to_string(rows) + "x" + std::to_string(cols));
    }
    const std::vector<std::uint8_t> payload = read_payload(in, count * plane, "IDX images");

    std::vector<RawImage> images(static_cast<std::size_t>(count));
    for (std::size_t k = 0; k < images.size(); ++k) {
        images[k].height = rows;
        images[k].width = cols;
        const auto first = payload.begin() + static_cast<std::ptrdiff_t>(k * plane);
        images[k].pixels.assign(first, first + static_cast<std::ptrdiff_t>(plane));
    }
    return images;
}

std::vector<std::size_t> load_idx_labels(std::istream& in) {
    expect_magic(in, kIdxLabelMagic, "labels");
    const std::uint64_t count = read_be32(in, "label count");
    const std::vector<std::uint8_t> payload = read_payload(in, count, "IDX labels");
    return std::vector<std::size_t>(payload.begin(), payload.end());
}

std::vector<RawImage> load_idx_images(const std::filesystem::path& path) {
    std::ifstream in = open_binary(path);
    return load_idx_images(in);
}

std::vector<std::size_t> load_idx_labels(const std::filesystem::path& path) {
    std::ifstream in = open_binary(path);
    return load_idx_labels(in);
}

void write_idx_images(std::ostream& out, const std::vector<RawImage>& images) {
    const std::size_t rows = images.empty() ? 0 : images.front().height;
    const std::size_t cols = images.empty() ? 0 : images.front().width;
    write_be32(out, kIdxImageMagic);
    write_be32(out, static_cast<std::uint32_t>(images.size()));
    write_be32(out, static_cast<std::uint32_t>(rows));
    write_be32(out, static_cast<std::uint32_t>(cols));
    for (const RawImage& image : images) {
        if (image.height != rows || image.width != cols || image.pixels.size() != rows * cols) {
            throw ShapeError("IDX images must share one extent");
        }
        out.write(reinterpret_cast<const char*>(image.pixels.data()),
                  static_cast<std::streamsize>(image.pixels.size()));
    }
}

void write_idx_labels(std::ostream& out, const std::vector<std::size_t>& labels) {
    write_be32(out, kIdxLabelMagic);
    write_be32(out, static_cast<std::uint32_t>(labels.size()));
    for (std::size_t label : labels) {
        if (label > 255) {
            throw DomainError("IDX u8 label out of range: " + std::to_string(label));
        }
        out.put(static_cast<char>(label));
    }
}

RawImage load_pgm(std::istream& in) {
    std::array<char, 2> magic{};
    in.read(magic.data(), 2);
    if (in.gcount() != 2 || magic[0] != 'P' || magic[1] != '5') {
        throw ParseError(ParseError::Kind::BadMagic, "not a binary PGM (expected \"P5\")");
    }
    const int sep = in.peek();
    if (sep != '#' && !std::isspace(sep)) {
        throw ParseError(ParseError::Kind::BadMagic, "not a binary PGM (expected \"P5\")");
    }
    const std::size_t width = pgm_number(in, "width");
    const std::size_t height = pgm_number(in, "height");
    const std::size_t maxval = pgm_number(in, "maxval");
    if (width == 0 || height == 0) {
        throw ParseError(ParseError::Kind::Inconsistent, "PGM with a zero extent");
    }
    if (maxval == 0 || maxval > 255) {
        throw ParseError(ParseError::Kind::Format,
                         "PGM maxval " + std::to_string(maxval) + " outside 1..255");
    }
    // pgm_token consumed exactly one whitespace byte after maxval.
    RawImage image{height, width, read_payload(in, std::uint64_t{width} * height, "PGM")};
    return image;
}

RawImage load_pgm(const std::filesystem::path& path) {
    std::ifstream in = open_binary(path);
    return load_pgm(in);
}

void write_pgm(std::ostream& out, const RawImage& image) {
    out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()),
              static_cast<std::streamsize>(image.pixels.size()));
}

Tensor normalize(const RawImage& image) {
    Tensor out = Tensor::make({1, image.height, image.width});
    for (std::size_t i = 0; i < image.pixels.size(); ++i) {
        out[i] = static_cast<double>(image.pixels[i]) / 255.0;
    }
    return out;
}

Tensor one_hot(std::size_t index, std::size_t class_count) {
    if (index >= class_count) {
        throw DomainError("class index " + std::to_string(index) + " outside [0, " +
                          std::to_string(class_count) + ")");
    }
    Tensor out = Tensor::make({class_count});
    out[index] = 1.0;
    return out;
}

Dataset make_dataset(const std::vector<RawImage>& images, const std::vector<std::size_t>& labels,
                     std::size_t class_count, std::size_t limit) {
    if (images.size() != labels.size()) {
        throw ShapeError(std::to_string(images.size()) + " images but " +
                         std::to_string(labels.size()) + " labels");
    }
    const std::size_t n = limit == 0 ? images.size() : std::min(limit, images.size());
    Dataset data;
    data.class_count = class_count;
    data.images.reserve(n);
    data.labels.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        data.labels.push_back(one_hot(labels[k], class_count));
        data.images.push_back(normalize(images[k]));
    }
    data.validate();
    return data;
}

Dataset load_idx_dataset(const std::filesystem::path& images, const std::filesystem::path& labels,
                         std::size_t class_count, std::size_t limit) {
    const std::vector<RawImage> raw = load_idx_images(images);
    return make_dataset(raw, load_idx_labels(labels), class_count, limit);
}

Dataset synth_bars(std::size_t n, std::size_t h, std::size_t w, std::uint64_t seed) {
    if (h < 4 || w < 4) {
        throw DomainError("bars images need both extents >= 4");
    }
    if (n == 0 || n % 2 != 0) {
        throw DomainError("bars sample count must be even and positive, got " + std::to_string(n));
    }
    Dataset data;
    data.class_count = 2;
    for (std::size_t k = 0; k < n; ++k) {
        const CounterRng rng(seed, k);
        const std::size_t cls = k % 2;
        Tensor image = Tensor::make({1, h, w});
        for (std::size_t i = 0; i < h * w; ++i) {
            image[i] = rng.uniform(i, 0.0, 0.1);
        }
        if (cls == 0) {
            const auto row = static_cast<std::size_t>(rng.below(h * w, h));
            for (std::size_t j = 0; j < w; ++j) {
                image.at(0, row, j) = 1.0;
            }
        } else {
            const auto col = static_cast<std::size_t>(rng.below(h * w, w));
            for (std::size_t i = 0; i < h; ++i) {
                image.at(0, i, col) = 1.0;
            }
        }
        data.images.push_back(std::move(image));
        data.labels.push_back(one_hot(cls, 2));
    }
    return data;
}

} // namespace cnn
