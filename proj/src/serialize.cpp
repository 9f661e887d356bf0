// Model file, all integers and floats little-endian, no padding:
//
//   "CNNF"  u32 version (= 1)
//   u32 conv H, W, C, k_h, k_w, K_D, Z_S, Z_P
//   u32 pool k, Z_S
//   u32 dense count, then per layer: u32 n_in, u32 n_out, u8 activation tag
//   f64 conv kernels (filter, channel, u, v), f64 conv biases
//   per dense layer: f64 W row-major (n_out x n_in), f64 b

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <string>
#include <system_error>

#include "cnnbp/errors.hpp"
#include "cnnbp/network.hpp"

namespace cnn {

namespace {

constexpr std::array<char, 4> kMagic{'C', 'N', 'N', 'F'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint64_t kMaxModelValues = std::uint64_t{1} << 31;

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }

    void u32(std::size_t value) {
        if (value > 0xFFFFFFFFu) {
            throw ShapeError("extent " + std::to_string(value) + " does not fit the model format");
        }
        const auto v = static_cast<std::uint32_t>(value);
        const std::array<char, 4> b{static_cast<char>(v), static_cast<char>(v >> 8),
                                    static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
        out_.write(b.data(), 4);
    }

    void f64(std::span<const double> values) {
        for (double d : values) {
            auto bits = std::bit_cast<std::uint64_t>(d);
            std::array<char, 8> b{};
            for (char& c : b) {
                c = static_cast<char>(bits & 0xFF);
                bits >>= 8;
            }
            out_.write(b.data(), 8);
        }
    }

private:
    std::ostream& out_;
};

class Reader {
public:
    explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

    void need(std::size_t n, const std::string& section) const {
        if (remaining() < n) {
            throw ParseError(ParseError::Kind::Truncated,
                             "model file truncated in section '" + section + "' at byte offset " +
                                 std::to_string(pos_) + " (needs " + std::to_string(n) +
                                 " bytes, " + std::to_string(remaining()) + " left)");
        }
    }

    std::uint8_t u8(const std::string& section) {
        need(1, section);
        return static_cast<std::uint8_t>(bytes_[pos_++]);
    }

    std::uint32_t u32(const std::string& section) {
        need(4, section);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) {
            v = (v << 8) | static_cast<std::uint8_t>(bytes_[pos_ + static_cast<std::size_t>(i)]);
        }
        pos_ += 4;
        return v;
    }

    void f64(std::span<double> out, const std::string& section) {
        need(out.size() * 8, section);
        for (double& d : out) {
            std::uint64_t bits = 0;
            for (int i = 7; i >= 0; --i) {
                bits = (bits << 8) | static_cast<std::uint8_t>(bytes_[pos_ + static_cast<std::size_t>(i)]);
            }
            d = std::bit_cast<double>(bits);
            pos_ += 8;
        }
    }

    std::array<char, 4> tag(const std::string& section) {
        need(4, section);
        std::array<char, 4> t{};
        std::memcpy(t.data(), bytes_.data() + pos_, 4);
        pos_ += 4;
        return t;
    }

private:
    std::string bytes_;
    std::size_t pos_ = 0;
};

std::size_t checked_product(std::uint64_t a, std::uint64_t b, const std::string& what) {
    if (a != 0 && b > kMaxModelValues / a) {
        throw ParseError(ParseError::Kind::Overflow, "model " + what + " extents overflow");
    }
    return static_cast<std::size_t>(a * b);
}

} // namespace

void save(const Network& net, std::ostream& out) {
    Writer w(out);
    out.write(kMagic.data(), kMagic.size());
    w.u32(kVersion);

    const ConvGeometry& g = net.conv().geometry();
    for (std::size_t v : {g.in_h, g.in_w, g.in_c, g.k_h, g.k_w, g.n_kernels, g.stride, g.pad}) {
        w.u32(v);
    }
    w.u32(net.pool().window);
    w.u32(net.pool().stride);

    w.u32(net.dense().size());
    for (const DenseLayer& layer : net.dense()) {
        w.u32(layer.n_in());
        w.u32(layer.n_out());
        w.u8(static_cast<std::uint8_t>(layer.activation));
    }

    for (const ConstParamGroup& group : net.parameters()) {
        w.f64(group.values);
    }
    if (!out) {
        throw IoError("failed writing model");
    }
}

Network load(std::istream& in) {
    Reader r{std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>())};

    if (r.tag("magic") != kMagic) {
        throw ParseError(ParseError::Kind::BadMagic, "not a model file (bad magic)");
    }
    const std::uint32_t version = r.u32("version");
    if (version != kVersion) {
        throw ParseError(ParseError::Kind::BadVersion,
                         "unsupported model version " + std::to_string(version));
    }

    ConvGeometry g;
    g.in_h = r.u32("geometry");
    g.in_w = r.u32("geometry");
    g.in_c = r.u32("geometry");
    g.k_h = r.u32("geometry");
    g.k_w = r.u32("geometry");
    g.n_kernels = r.u32("geometry");
    g.stride = r.u32("geometry");
    g.pad = r.u32("geometry");
    PoolGeometry pool;
    pool.window = r.u32("geometry");
    pool.stride = r.u32("geometry");

    const std::uint32_t dense_count = r.u32("geometry");
    if (dense_count == 0) {
        throw ParseError(ParseError::Kind::Inconsistent, "model has no dense layers");
    }
    // Each dense header entry is 9 bytes; reject counts the file cannot hold.
    r.need(std::size_t{dense_count} * 9, "geometry");

    struct Header {
        std::size_t n_in;
        std::size_t n_out;
        Activation activation;
    };
    std::vector<Header> headers;
    for (std::uint32_t l = 0; l < dense_count; ++l) {
        const std::uint32_t n_in = r.u32("geometry");
        const std::uint32_t n_out = r.u32("geometry");
        const auto tag = activation_from_tag(r.u8("geometry"));
        if (!tag) {
            throw ParseError(ParseError::Kind::Inconsistent,
                             "dense layer " + std::to_string(l) + " has an unknown activation tag");
        }
        headers.push_back({n_in, n_out, *tag});
    }

    try {
        // Check the extent chain before reading any parameters.
        const Dims3 conv = conv_output_dims(g);
        const Dims3 pooled = pool_output_dims(conv.height, conv.width, conv.depth, pool);
        std::size_t width = pooled.height * pooled.width * pooled.depth;
        for (std::size_t l = 0; l < headers.size(); ++l) {
            if (headers[l].n_in != width) {
                throw ParseError(ParseError::Kind::Inconsistent,
                                 "dense layer " + std::to_string(l) + " expects " +
                                     std::to_string(headers[l].n_in) + " inputs but receives " +
                                     std::to_string(width));
            }
            width = headers[l].n_out;
        }

        const std::size_t kernel_count =
            checked_product(checked_product(g.n_kernels, g.in_c, "kernel"),
                            checked_product(g.k_h, g.k_w, "kernel"), "kernel");
        r.need(kernel_count * 8, "conv kernels");
        std::vector<double> kernels(kernel_count);
        r.f64(kernels, "conv kernels");
        r.need(g.n_kernels * 8, "conv biases");
        std::vector<double> biases(g.n_kernels);
        r.f64(biases, "conv biases");
        KernelBank bank(g, std::move(kernels), std::move(biases));

        std::vector<DenseLayer> dense;
        for (std::size_t l = 0; l < headers.size(); ++l) {
            const Header& h = headers[l];
            r.need(checked_product(h.n_in, h.n_out, "dense") * 8,
                   "dense " + std::to_string(l) + " weights");
            if (h.n_in == 0 || h.n_out == 0) {
                throw ParseError(ParseError::Kind::Inconsistent,
                                 "dense layer " + std::to_string(l) + " has a zero extent");
            }
            DenseLayer layer = DenseLayer::zeros(h.n_in, h.n_out, h.activation);
            r.f64(layer.weights.data(), "dense " + std::to_string(l) + " weights");
            r.f64(layer.biases.data(), "dense " + std::to_string(l) + " biases");
            dense.push_back(std::move(layer));
        }
        if (r.remaining() != 0) {
            throw ParseError(ParseError::Kind::Format,
                             std::to_string(r.remaining()) + " trailing bytes after model data");
        }
        return Network(std::move(bank), pool, std::move(dense));
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(ParseError::Kind::Inconsistent,
                         std::string("model extents are inconsistent: ") + e.what());
    }
}

void save_file(const Network& net, const std::filesystem::path& path) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot write " + tmp.string());
        }
        try {
            save(net, out);
            out.close();
            if (!out) {
                throw IoError("failed writing " + tmp.string());
            }
        } catch (...) {
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw;
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move model into place at " + path.string());
    }
}

Network load_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return load(in);
}

} // namespace cnn
