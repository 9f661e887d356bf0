// Reference computations written directly from the definitions, sharing no
// code with the library beyond the Tensor container.
#ifndef CNNBP_TESTS_ORACLES_HPP
#define CNNBP_TESTS_ORACLES_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <vector>

#include "cnnbp/tensor.hpp"

namespace oracle {

using cnn::Shape;
using cnn::Tensor;

inline Tensor random_tensor(std::mt19937_64& gen, Shape shape, double lo = -1.0, double hi = 1.0) {
    std::size_t n = 1;
    for (std::size_t e : shape) {
        n *= e;
    }
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) {
        x = dist(gen);
    }
    return Tensor(std::move(shape), std::move(v));
}

// Explicit index reversal.
inline Tensor rot180(const Tensor& m) {
    const std::size_t h = m.extent(0);
    const std::size_t w = m.extent(1);
    Tensor out = Tensor::make({h, w});
    for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
            out.at(h - 1 - i, w - 1 - j) = m.at(i, j);
        }
    }
    return out;
}

inline std::vector<double> matvec(std::size_t rows, std::size_t cols, const std::vector<double>& w,
                                  const std::vector<double>& x) {
    std::vector<double> y(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            acc += w[r * cols + c] * x[c];
        }
        y[r] = acc;
    }
    return y;
}

// Number of window positions along one axis, counted by sliding a window
// over the padded extent. Returns 0 when the last position does not land
// exactly on the edge, i.e. the geometry is invalid.
inline std::size_t slide_count(std::size_t n, std::size_t k, std::size_t s, std::size_t p) {
    const std::size_t padded = n + 2 * p;
    std::size_t count = 0;
    std::size_t last_end = 0;
    for (std::size_t start = 0; start + k <= padded; start += s) {
        ++count;
        last_end = start + k;
    }
    return last_end == padded ? count : 0;
}

// Cross-correlation with zero padding read through bounds checks (no padded
// copy). weights indexed (p, c, u, v); sums c, u, v in ascending order, adds
// the bias last.
inline Tensor conv_preact(const Tensor& image, const std::vector<double>& weights,
                          const std::vector<double>& biases, std::size_t kh, std::size_t kw,
                          std::size_t stride, std::size_t pad) {
    const std::size_t C = image.extent(0), H = image.extent(1), W = image.extent(2);
    const std::size_t K = biases.size();
    const std::size_t oh = (H + 2 * pad - kh) / stride + 1;
    const std::size_t ow = (W + 2 * pad - kw) / stride + 1;
    Tensor out = Tensor::make({K, oh, ow});
    for (std::size_t p = 0; p < K; ++p) {
        for (std::size_t i = 0; i < oh; ++i) {
            for (std::size_t j = 0; j < ow; ++j) {
                double acc = 0.0;
                for (std::size_t c = 0; c < C; ++c) {
                    for (std::size_t u = 0; u < kh; ++u) {
                        for (std::size_t v = 0; v < kw; ++v) {
                            const long y = static_cast<long>(i * stride + u) - static_cast<long>(pad);
                            const long x = static_cast<long>(j * stride + v) - static_cast<long>(pad);
                            double pixel = 0.0;
                            if (y >= 0 && x >= 0 && y < static_cast<long>(H) && x < static_cast<long>(W)) {
                                pixel = image.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x));
                            }
                            acc += weights[((p * C + c) * kh + u) * kw + v] * pixel;
                        }
                    }
                }
                out.at(p, i, j) = acc + biases[p];
            }
        }
    }
    return out;
}

struct PoolResult {
    Tensor pooled;
    std::vector<std::size_t> winners; // flat indices into the input
};

// Brute force: every window scanned in row-major order, strict '>' keeps the
// first maximum.
inline PoolResult maxpool(const Tensor& in, std::size_t k, std::size_t s) {
    const std::size_t C = in.extent(0), H = in.extent(1), W = in.extent(2);
    const std::size_t oh = (H - k) / s + 1, ow = (W - k) / s + 1;
    PoolResult r{Tensor::make({C, oh, ow}), {}};
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t i = 0; i < oh; ++i) {
            for (std::size_t j = 0; j < ow; ++j) {
                std::size_t best = (c * H + i * s) * W + j * s;
                for (std::size_t a = 0; a < k; ++a) {
                    for (std::size_t b = 0; b < k; ++b) {
                        const std::size_t idx = (c * H + i * s + a) * W + j * s + b;
                        if (in[idx] > in[best]) {
                            best = idx;
                        }
                    }
                }
                r.pooled.at(c, i, j) = in[best];
                r.winners.push_back(best);
            }
        }
    }
    return r;
}

inline double central(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double rel_err(double a, double n) {
    return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Mean binary cross-entropy with the 1e-12 clamp, written out directly.
inline double cross_entropy(const Tensor& p, const Tensor& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double q = std::min(std::max(p[i], 1e-12), 1.0 - 1e-12);
        s += y[i] * std::log(q) + (1.0 - y[i]) * std::log(1.0 - q);
    }
    return -s / static_cast<double>(p.size());
}

} // namespace oracle

#endif // CNNBP_TESTS_ORACLES_HPP
