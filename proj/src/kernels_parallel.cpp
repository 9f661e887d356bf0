#include "cnnbp/kernels.hpp"

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cnn::kernels {

namespace {

// Below this many multiply-adds the fork/join costs more than it saves.
constexpr std::size_t kParallelWork = 16384;

using index_t = std::int64_t;

} // namespace

int max_threads() noexcept {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace parallel {

void conv_forward(const ConvDims& d, std::span<const double> input,
                  std::span<const double> weights, std::span<const double> biases,
                  std::span<double> out) {
    const std::size_t kernel_size = d.channels * d.k_h * d.k_w;
    const index_t rows = static_cast<index_t>(d.filters * d.out_h);
    const bool big = d.filters * d.out_h * d.out_w * kernel_size >= kParallelWork;

#pragma omp parallel for schedule(static) if (big)
    for (index_t pi = 0; pi < rows; ++pi) {
        const std::size_t p = static_cast<std::size_t>(pi) / d.out_h;
        const std::size_t i = static_cast<std::size_t>(pi) % d.out_h;
        const double* kernel = weights.data() + p * kernel_size;
        for (std::size_t j = 0; j < d.out_w; ++j) {
            double acc = 0.0;
            for (std::size_t c = 0; c < d.channels; ++c) {
                for (std::size_t u = 0; u < d.k_h; ++u) {
                    const double* row =
                        input.data() + (c * d.in_h + i * d.stride + u) * d.in_w + j * d.stride;
                    const double* krow = kernel + (c * d.k_h + u) * d.k_w;
                    for (std::size_t v = 0; v < d.k_w; ++v) {
                        acc += krow[v] * row[v];
                    }
                }
            }
            out[(p * d.out_h + i) * d.out_w + j] = acc + biases[p];
        }
    }
}

void conv_weight_grad(const ConvDims& d, std::span<const double> grad_out,
                      std::span<const double> input, std::span<double> grad_weights,
                      std::span<double> grad_biases) {
    const std::size_t plane = d.out_h * d.out_w;
    const std::size_t kernel_size = d.channels * d.k_h * d.k_w;
    const index_t total = static_cast<index_t>(d.filters * kernel_size);
    const bool big = d.filters * kernel_size * plane >= kParallelWork;

#pragma omp parallel for schedule(static) if (big)
    for (index_t flat = 0; flat < total; ++flat) {
        std::size_t rest = static_cast<std::size_t>(flat);
        const std::size_t v = rest % d.k_w;
        rest /= d.k_w;
        const std::size_t u = rest % d.k_h;
        rest /= d.k_h;
        const std::size_t c = rest % d.channels;
        const std::size_t p = rest / d.channels;

        const double* g = grad_out.data() + p * plane;
        double acc = 0.0;
        for (std::size_t i = 0; i < d.out_h; ++i) {
            const double* row = input.data() + (c * d.in_h + i * d.stride + u) * d.in_w + v;
            for (std::size_t j = 0; j < d.out_w; ++j) {
                acc += g[i * d.out_w + j] * row[j * d.stride];
            }
        }
        grad_weights[static_cast<std::size_t>(flat)] = acc;
    }

    for (std::size_t p = 0; p < d.filters; ++p) {
        const double* g = grad_out.data() + p * plane;
        double acc = 0.0;
        for (std::size_t k = 0; k < plane; ++k) {
            acc += g[k];
        }
        grad_biases[p] = acc;
    }
}

void matvec(std::size_t rows, std::size_t cols, std::span<const double> w,
            std::span<const double> x, std::span<double> y) {
    const bool big = rows * cols >= kParallelWork;

#pragma omp parallel for schedule(static) if (big)
    for (index_t r = 0; r < static_cast<index_t>(rows); ++r) {
        const double* wr = w.data() + static_cast<std::size_t>(r) * cols;
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            acc += wr[c] * x[c];
        }
        y[static_cast<std::size_t>(r)] = acc;
    }
}

void matvec_transposed(std::size_t rows, std::size_t cols, std::span<const double> w,
                       std::span<const double> x, std::span<double> y) {
    const bool big = rows * cols >= kParallelWork;

#pragma omp parallel for schedule(static) if (big)
    for (index_t c = 0; c < static_cast<index_t>(cols); ++c) {
        double acc = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            acc += w[r * cols + static_cast<std::size_t>(c)] * x[r];
        }
        y[static_cast<std::size_t>(c)] = acc;
    }
}

void outer(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    const std::size_t cols = b.size();
    const bool big = a.size() * cols >= kParallelWork;

#pragma omp parallel for schedule(static) if (big)
    for (index_t r = 0; r < static_cast<index_t>(a.size()); ++r) {
        const double ar = a[static_cast<std::size_t>(r)];
        double* row = out.data() + static_cast<std::size_t>(r) * cols;
        for (std::size_t c = 0; c < cols; ++c) {
            row[c] = ar * b[c];
        }
    }
}

} // namespace parallel

} // namespace cnn::kernels
