#include "cnnbp/layers.hpp"

#include <string>
#include <utility>

#include "cnnbp/errors.hpp"
#include "cnnbp/kernels.hpp"

namespace cnn {

namespace {

std::size_t tiled_extent(std::size_t span, std::size_t window, std::size_t stride,
                         const char* what) {
    if (window == 0 || stride == 0) {
        throw GeometryError(std::string(what) + ": window and stride must be positive");
    }
    if (window > span) {
        throw GeometryError(std::string(what) + ": window " + std::to_string(window) +
                            " exceeds extent " + std::to_string(span));
    }
    if ((span - window) % stride != 0) {
        throw GeometryError(std::string(what) + ": (" + std::to_string(span) + " - " +
                            std::to_string(window) + ") is not divisible by stride " +
                            std::to_string(stride));
    }
    return (span - window) / stride + 1;
}

kernels::ConvDims conv_dims(const ConvGeometry& g) {
    const Dims3 out = conv_output_dims(g);
    return kernels::ConvDims{
        .channels = g.in_c,
        .in_h = g.in_h + 2 * g.pad,
        .in_w = g.in_w + 2 * g.pad,
        .filters = g.n_kernels,
        .k_h = g.k_h,
        .k_w = g.k_w,
        .stride = g.stride,
        .out_h = out.height,
        .out_w = out.width,
    };
}

void check_image(const Tensor& image, const ConvGeometry& g) {
    if (image.rank() != 3 || image.extent(0) != g.in_c || image.extent(1) != g.in_h ||
        image.extent(2) != g.in_w) {
        throw ShapeError("image shape " + to_string(image.shape()) + " does not match geometry " +
                         to_string({g.in_c, g.in_h, g.in_w}));
    }
}

void check_grad_preact(const Tensor& grad, const ConvGeometry& g) {
    const Dims3 out = conv_output_dims(g);
    const Shape expected{out.depth, out.height, out.width};
    if (grad.shape() != expected) {
        throw ShapeError("convolution gradient shape " + to_string(grad.shape()) +
                         " does not match output " + to_string(expected));
    }
}

} // namespace

Dims3 conv_output_dims(const ConvGeometry& g) {
    if (g.in_h == 0 || g.in_w == 0 || g.in_c == 0 || g.n_kernels == 0) {
        throw GeometryError("convolution extents must be positive");
    }
    return Dims3{
        .height = tiled_extent(g.in_h + 2 * g.pad, g.k_h, g.stride, "convolution height"),
        .width = tiled_extent(g.in_w + 2 * g.pad, g.k_w, g.stride, "convolution width"),
        .depth = g.n_kernels,
    };
}

Dims3 pool_output_dims(std::size_t h1, std::size_t w1, std::size_t d1, const PoolGeometry& g) {
    if (h1 == 0 || w1 == 0 || d1 == 0) {
        throw GeometryError("pooling input extents must be positive");
    }
    return Dims3{
        .height = tiled_extent(h1, g.window, g.stride, "pooling height"),
        .width = tiled_extent(w1, g.window, g.stride, "pooling width"),
        .depth = d1,
    };
}

KernelBank::KernelBank(const ConvGeometry& geometry)
    : KernelBank(geometry,
                 std::vector<double>(geometry.n_kernels * geometry.in_c * geometry.k_h *
                                     geometry.k_w),
                 std::vector<double>(geometry.n_kernels)) {}

KernelBank::KernelBank(const ConvGeometry& geometry, std::vector<double> weights,
                       std::vector<double> biases)
    : geometry_(geometry), weights_(std::move(weights)), biases_(std::move(biases)) {
    conv_output_dims(geometry_);
    const std::size_t expected = geometry_.n_kernels * geometry_.in_c * geometry_.k_h * geometry_.k_w;
    if (weights_.size() != expected) {
        throw ShapeError("kernel bank needs " + std::to_string(expected) + " weights, got " +
                         std::to_string(weights_.size()));
    }
    if (biases_.size() != geometry_.n_kernels) {
        throw ShapeError("kernel bank needs " + std::to_string(geometry_.n_kernels) +
                         " biases, got " + std::to_string(biases_.size()));
    }
}

DenseLayer DenseLayer::zeros(std::size_t n_in, std::size_t n_out, Activation activation) {
    return DenseLayer{Tensor::make({n_out, n_in}), Tensor::make({n_out}), activation};
}

void check_layer(const DenseLayer& layer) {
    if (layer.weights.rank() != 2 || layer.biases.rank() != 1 ||
        layer.biases.extent(0) != layer.weights.extent(0)) {
        throw ShapeError("dense layer weights " + to_string(layer.weights.shape()) +
                         " and biases " + to_string(layer.biases.shape()) + " disagree");
    }
}

Tensor zero_pad(const Tensor& image, std::size_t pad) {
    if (image.rank() != 3) {
        throw ShapeError("zero_pad needs a rank-3 tensor, got " + to_string(image.shape()));
    }
    if (pad == 0) {
        return image;
    }
    const std::size_t c_n = image.extent(0);
    const std::size_t h = image.extent(1);
    const std::size_t w = image.extent(2);
    Tensor out = Tensor::make({c_n, h + 2 * pad, w + 2 * pad});
    for (std::size_t c = 0; c < c_n; ++c) {
        for (std::size_t i = 0; i < h; ++i) {
            for (std::size_t j = 0; j < w; ++j) {
                out.at(c, i + pad, j + pad) = image.at(c, i, j);
            }
        }
    }
    return out;
}

ConvForward conv_forward(const Tensor& image, const KernelBank& bank, Activation activation) {
    const ConvGeometry& g = bank.geometry();
    check_image(image, g);
    const kernels::ConvDims d = conv_dims(g);

    const Tensor padded = zero_pad(image, g.pad);
    Tensor preact = Tensor::make({d.filters, d.out_h, d.out_w});
    kernels::parallel::conv_forward(d, padded.data(), bank.weights(), bank.biases(),
                                    preact.data());

    Tensor output = apply(activation, preact);
    return ConvForward{std::move(output), ConvTrace{image, std::move(preact)}};
}

PoolForward maxpool_forward(const Tensor& input, const PoolGeometry& g) {
    if (input.rank() != 3) {
        throw ShapeError("max pooling needs a rank-3 tensor, got " + to_string(input.shape()));
    }
    const std::size_t depth = input.extent(0);
    const std::size_t h1 = input.extent(1);
    const std::size_t w1 = input.extent(2);
    const Dims3 out = pool_output_dims(h1, w1, depth, g);

    PoolTrace trace{
        .input_shape = input.shape(),
        .output_shape = {out.depth, out.height, out.width},
        .window = g.window,
        .stride = g.stride,
        .winners = std::vector<std::size_t>(out.depth * out.height * out.width),
    };
    Tensor pooled = Tensor::make(trace.output_shape);

    const auto data = input.data();
    std::size_t k = 0;
    for (std::size_t c = 0; c < depth; ++c) {
        for (std::size_t i = 0; i < out.height; ++i) {
            for (std::size_t j = 0; j < out.width; ++j, ++k) {
                std::size_t best = (c * h1 + i * g.stride) * w1 + j * g.stride;
                for (std::size_t a = 0; a < g.window; ++a) {
                    for (std::size_t b = 0; b < g.window; ++b) {
                        const std::size_t at = (c * h1 + i * g.stride + a) * w1 + j * g.stride + b;
                        if (data[at] > data[best]) {
                            best = at;
                        }
                    }
                }
                trace.winners[k] = best;
                pooled[k] = data[best];
            }
        }
    }
    return PoolForward{std::move(pooled), std::move(trace)};
}

Tensor maxpool_backward(const Tensor& grad_pooled, const PoolTrace& trace) {
    if (grad_pooled.shape() != trace.output_shape) {
        throw ShapeError("pooled gradient shape " + to_string(grad_pooled.shape()) +
                         " does not match pooled output " + to_string(trace.output_shape));
    }
    Tensor out = Tensor::make(trace.input_shape);
    for (std::size_t k = 0; k < trace.winners.size(); ++k) {
        out[trace.winners[k]] += grad_pooled[k];
    }
    return out;
}

ConvGradients conv_backward(const Tensor& grad_preact, const Tensor& image,
                            const KernelBank& bank) {
    const ConvGeometry& g = bank.geometry();
    if (g.stride != 1) {
        throw UnsupportedError("convolution backward supports stride 1 only, got stride " +
                               std::to_string(g.stride));
    }
    check_image(image, g);
    check_grad_preact(grad_preact, g);

    const kernels::ConvDims d = conv_dims(g);
    const Tensor padded = zero_pad(image, g.pad);
    ConvGradients grads{std::vector<double>(bank.weights().size()),
                        std::vector<double>(bank.biases().size())};
    kernels::parallel::conv_weight_grad(d, grad_preact.data(), padded.data(), grads.weights,
                                        grads.biases);
    return grads;
}

std::vector<double> conv_kernel_grad_rot180(const Tensor& grad_preact, const Tensor& image,
                                            const KernelBank& bank) {
    const ConvGeometry& g = bank.geometry();
    if (g.stride != 1) {
        throw UnsupportedError("rot180 kernel gradient supports stride 1 only");
    }
    check_image(image, g);
    check_grad_preact(grad_preact, g);

    const Tensor padded = zero_pad(image, g.pad);
    const std::size_t hp = padded.extent(1);
    const std::size_t wp = padded.extent(2);
    const std::size_t oh = grad_preact.extent(1);
    const std::size_t ow = grad_preact.extent(2);

    std::vector<double> out(bank.weights().size());
    for (std::size_t c = 0; c < g.in_c; ++c) {
        Tensor plane = Tensor::make({hp, wp});
        for (std::size_t i = 0; i < hp; ++i) {
            for (std::size_t j = 0; j < wp; ++j) {
                plane.at(i, j) = padded.at(c, i, j);
            }
        }
        const Tensor rotated = rot180(plane);

        for (std::size_t p = 0; p < g.n_kernels; ++p) {
            // Bottom-right k_h x k_w corner of the full convolution rotated * grad.
            Tensor corner = Tensor::make({g.k_h, g.k_w});
            for (std::size_t a = 0; a < g.k_h; ++a) {
                for (std::size_t b = 0; b < g.k_w; ++b) {
                    const std::size_t x = hp - g.k_h + a;
                    const std::size_t y = wp - g.k_w + b;
                    double acc = 0.0;
                    for (std::size_t i = 0; i < oh; ++i) {
                        for (std::size_t j = 0; j < ow; ++j) {
                            acc += grad_preact.at(p, i, j) * rotated.at(x - i, y - j);
                        }
                    }
                    corner.at(a, b) = acc;
                }
            }
            const Tensor kernel_grad = rot180(corner);
            for (std::size_t u = 0; u < g.k_h; ++u) {
                for (std::size_t v = 0; v < g.k_w; ++v) {
                    out[bank.index(p, c, u, v)] = kernel_grad.at(u, v);
                }
            }
        }
    }
    return out;
}

DenseForward dense_forward(const Tensor& input, const DenseLayer& layer) {
    check_layer(layer);
    if (input.rank() != 1 || input.size() != layer.n_in()) {
        throw ShapeError("dense layer expects " + std::to_string(layer.n_in()) +
                         " inputs, got shape " + to_string(input.shape()));
    }
    Tensor z = matvec(layer.weights, input);
    for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] += layer.biases[i];
    }
    Tensor a = apply(layer.activation, z);
    return DenseForward{std::move(a), DenseTrace{input, std::move(z)}};
}

DenseGradients dense_backward(const Tensor& grad_output, const DenseLayer& layer,
                              const DenseTrace& trace) {
    check_layer(layer);
    const std::size_t n_out = layer.n_out();
    const std::size_t n_in = layer.n_in();
    if (grad_output.rank() != 1 || grad_output.size() != n_out || trace.preact.size() != n_out ||
        trace.input.size() != n_in) {
        throw ShapeError("dense backward: gradient " + to_string(grad_output.shape()) +
                         " inconsistent with layer " + to_string(layer.weights.shape()));
    }

    Tensor delta = derivative(layer.activation, trace.preact);
    for (std::size_t i = 0; i < n_out; ++i) {
        delta[i] *= grad_output[i];
    }

    DenseGradients grads{Tensor::make({n_out, n_in}), delta, Tensor::make({n_in})};
    kernels::parallel::outer(delta.data(), trace.input.data(), grads.weights.data());
    kernels::parallel::matvec_transposed(n_out, n_in, layer.weights.data(), delta.data(),
                                         grads.input.data());
    return grads;
}

} // namespace cnn
