#include "cnnbp/kernels.hpp"

namespace cnn::kernels::serial {

void conv_forward(const ConvDims& d, std::span<const double> input,
                  std::span<const double> weights, std::span<const double> biases,
                  std::span<double> out) {
    const std::size_t kernel_size = d.channels * d.k_h * d.k_w;
    for (std::size_t p = 0; p < d.filters; ++p) {
        const double* kernel = weights.data() + p * kernel_size;
        for (std::size_t i = 0; i < d.out_h; ++i) {
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
}

void conv_weight_grad(const ConvDims& d, std::span<const double> grad_out,
                      std::span<const double> input, std::span<double> grad_weights,
                      std::span<double> grad_biases) {
    const std::size_t plane = d.out_h * d.out_w;
    for (std::size_t p = 0; p < d.filters; ++p) {
        const double* g = grad_out.data() + p * plane;
        for (std::size_t c = 0; c < d.channels; ++c) {
            for (std::size_t u = 0; u < d.k_h; ++u) {
                for (std::size_t v = 0; v < d.k_w; ++v) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < d.out_h; ++i) {
                        const double* row =
                            input.data() + (c * d.in_h + i * d.stride + u) * d.in_w + v;
                        for (std::size_t j = 0; j < d.out_w; ++j) {
                            acc += g[i * d.out_w + j] * row[j * d.stride];
                        }
                    }
                    grad_weights[((p * d.channels + c) * d.k_h + u) * d.k_w + v] = acc;
                }
            }
        }
        double acc = 0.0;
        for (std::size_t k = 0; k < plane; ++k) {
            acc += g[k];
        }
        grad_biases[p] = acc;
    }
}

void matvec(std::size_t rows, std::size_t cols, std::span<const double> w,
            std::span<const double> x, std::span<double> y) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* wr = w.data() + r * cols;
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            acc += wr[c] * x[c];
        }
        y[r] = acc;
    }
}

void matvec_transposed(std::size_t rows, std::size_t cols, std::span<const double> w,
                       std::span<const double> x, std::span<double> y) {
    for (std::size_t c = 0; c < cols; ++c) {
        double acc = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            acc += w[r * cols + c] * x[r];
        }
        y[c] = acc;
    }
}

void outer(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    for (std::size_t r = 0; r < a.size(); ++r) {
        for (std::size_t c = 0; c < b.size(); ++c) {
            out[r * b.size() + c] = a[r] * b[c];
        }
    }
}

} // namespace cnn::kernels::serial
