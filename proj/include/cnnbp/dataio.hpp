#ifndef CNNBP_DATAIO_HPP
#define CNNBP_DATAIO_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "cnnbp/dataset.hpp"

namespace cnn {

/// 8-bit grayscale image, row-major.
struct RawImage {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> pixels;

    friend bool operator==(const RawImage&, const RawImage&) = default;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

// IDX: big-endian u32 magic, big-endian u32 extents, raw u8 payload.
std::vector<RawImage> load_idx_images(std::istream& in);
std::vector<std::size_t> load_idx_labels(std::istream& in);
std::vector<RawImage> load_idx_images(const std::filesystem::path& path);
std::vector<std::size_t> load_idx_labels(const std::filesystem::path& path);

void write_idx_images(std::ostream& out, const std::vector<RawImage>& images);
void write_idx_labels(std::ostream& out, const std::vector<std::size_t>& labels);

/// Binary "P5" PGM with maxval <= 255; '#' comments allowed between header tokens.
RawImage load_pgm(std::istream& in);
RawImage load_pgm(const std::filesystem::path& path);
void write_pgm(std::ostream& out, const RawImage& image);

/// v -> v / 255 as a 1 x H x W tensor.
Tensor normalize(const RawImage& image);

Tensor one_hot(std::size_t index, std::size_t class_count);

/// Pairs images with class indices; a label outside [0, class_count) is a
/// DomainError. `limit` > 0 keeps only the first `limit` samples.
Dataset make_dataset(const std::vector<RawImage>& images, const std::vector<std::size_t>& labels,
                     std::size_t class_count, std::size_t limit = 0);

Dataset load_idx_dataset(const std::filesystem::path& images, const std::filesystem::path& labels,
                         std::size_t class_count, std::size_t limit = 0);

/// n samples alternating between class 0 (one full horizontal bar of 1.0)
/// and class 1 (one vertical bar) on U[0, 0.1) noise. Needs h, w >= 4 and n
/// even and positive.
Dataset synth_bars(std::size_t n, std::size_t h, std::size_t w, std::uint64_t seed);

} // namespace cnn

#endif // CNNBP_DATAIO_HPP
