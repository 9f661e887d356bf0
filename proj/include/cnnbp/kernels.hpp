#ifndef CNNBP_KERNELS_HPP
#define CNNBP_KERNELS_HPP

// Inner loops of the layers, in two flavours with identical signatures:
//
//   serial::    straightforward loops, kept as the reference.
//   parallel::  OpenMP work-sharing over independent outputs.
//
// Every output element is reduced by a single thread in the same ascending
// index order in both flavours, so results are bit-identical regardless of
// the thread count.

#include <cstddef>
#include <span>

namespace cnn::kernels {

/// Extents for a multi-channel, multi-filter cross-correlation. The input
/// extents are those of the already zero-padded image.
struct ConvDims {
    std::size_t channels = 1;
    std::size_t in_h = 1;
    std::size_t in_w = 1;
    std::size_t filters = 1;
    std::size_t k_h = 1;
    std::size_t k_w = 1;
    std::size_t stride = 1;
    std::size_t out_h = 1;
    std::size_t out_w = 1;
};

namespace serial {

// out[p][i][j] = (sum over c, u, v of w[p][c][u][v] * in[c][i*s+u][j*s+v]) + b[p]
void conv_forward(const ConvDims& d, std::span<const double> input,
                  std::span<const double> weights, std::span<const double> biases,
                  std::span<double> out);

// gw[p][c][u][v] = sum over i, j of g[p][i][j] * in[c][i*s+u][j*s+v]
// gb[p]          = sum over i, j of g[p][i][j]
void conv_weight_grad(const ConvDims& d, std::span<const double> grad_out,
                      std::span<const double> input, std::span<double> grad_weights,
                      std::span<double> grad_biases);

// y[r] = sum over c of w[r][c] * x[c]
void matvec(std::size_t rows, std::size_t cols, std::span<const double> w,
            std::span<const double> x, std::span<double> y);

// y[c] = sum over r of w[r][c] * x[r]
void matvec_transposed(std::size_t rows, std::size_t cols, std::span<const double> w,
                       std::span<const double> x, std::span<double> y);

// out[r][c] = a[r] * b[c]
void outer(std::span<const double> a, std::span<const double> b, std::span<double> out);

} // namespace serial

namespace parallel {

void conv_forward(const ConvDims& d, std::span<const double> input,
                  std::span<const double> weights, std::span<const double> biases,
                  std::span<double> out);

void conv_weight_grad(const ConvDims& d, std::span<const double> grad_out,
                      std::span<const double> input, std::span<double> grad_weights,
                      std::span<double> grad_biases);

void matvec(std::size_t rows, std::size_t cols, std::span<const double> w,
            std::span<const double> x, std::span<double> y);

void matvec_transposed(std::size_t rows, std::size_t cols, std::span<const double> w,
                       std::span<const double> x, std::span<double> y);

void outer(std::span<const double> a, std::span<const double> b, std::span<double> out);

} // namespace parallel

/// Number of OpenMP threads the parallel flavour would use (1 without OpenMP).
int max_threads() noexcept;

} // namespace cnn::kernels

#endif // CNNBP_KERNELS_HPP
