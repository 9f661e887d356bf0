#ifndef CNNBP_LAYERS_HPP
#define CNNBP_LAYERS_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "cnnbp/activations.hpp"
#include "cnnbp/tensor.hpp"

namespace cnn {

struct Dims3 {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t depth = 0;

    friend bool operator==(const Dims3&, const Dims3&) = default;
};

/// Input image extents, kernel extents, filter count, stride and zero padding
/// of one convolution layer.
struct ConvGeometry {
    std::size_t in_h = 1;
    std::size_t in_w = 1;
    std::size_t in_c = 1;
    std::size_t k_h = 1;
    std::size_t k_w = 1;
    std::size_t n_kernels = 1;
    std::size_t stride = 1;
    std::size_t pad = 0;

    friend bool operator==(const ConvGeometry&, const ConvGeometry&) = default;
};

struct PoolGeometry {
    std::size_t window = 1;
    std::size_t stride = 1;

    friend bool operator==(const PoolGeometry&, const PoolGeometry&) = default;
};

/// ((H + 2P - k_h) / S + 1, (W + 2P - k_w) / S + 1, K). Throws GeometryError
/// unless both divisions are exact and the kernel fits the padded image.
Dims3 conv_output_dims(const ConvGeometry& g);

/// ((H1 - k) / S + 1, (W1 - k) / S + 1, D1); pooling keeps the channel count.
Dims3 pool_output_dims(std::size_t h1, std::size_t w1, std::size_t d1, const PoolGeometry& g);

/// Convolution filters indexed (filter, channel, u, v), filter-major, plus
/// one scalar bias per filter.
class KernelBank {
public:
    explicit KernelBank(const ConvGeometry& geometry);
    KernelBank(const ConvGeometry& geometry, std::vector<double> weights,
               std::vector<double> biases);

    const ConvGeometry& geometry() const noexcept { return geometry_; }

    std::span<double> weights() noexcept { return weights_; }
    std::span<const double> weights() const noexcept { return weights_; }
    std::span<double> biases() noexcept { return biases_; }
    std::span<const double> biases() const noexcept { return biases_; }

    std::size_t index(std::size_t p, std::size_t c, std::size_t u, std::size_t v) const noexcept {
        return ((p * geometry_.in_c + c) * geometry_.k_h + u) * geometry_.k_w + v;
    }
    double weight(std::size_t p, std::size_t c, std::size_t u, std::size_t v) const noexcept {
        return weights_[index(p, c, u, v)];
    }

    friend bool operator==(const KernelBank&, const KernelBank&) = default;

private:
    ConvGeometry geometry_;
    std::vector<double> weights_;
    std::vector<double> biases_;
};

/// Fully connected layer: z = W a + b with W stored n_out x n_in.
struct DenseLayer {
    Tensor weights;
    Tensor biases;
    Activation activation = Activation::ReLU;

    static DenseLayer zeros(std::size_t n_in, std::size_t n_out, Activation activation);

    std::size_t n_in() const { return weights.extent(1); }
    std::size_t n_out() const { return weights.extent(0); }

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Throws ShapeError if weights/biases extents disagree.
void check_layer(const DenseLayer& layer);

struct ConvTrace {
    Tensor input;  // unpadded image
    Tensor preact; // C^{p} before the activation
};

/// Winning input position of every pooled output, as flat indices into the
/// pre-pool tensor.
struct PoolTrace {
    Shape input_shape;
    Shape output_shape;
    std::size_t window = 1;
    std::size_t stride = 1;
    std::vector<std::size_t> winners;
};

struct DenseTrace {
    Tensor input;  // a^{l-1}
    Tensor preact; // z^{l}
};

struct ConvForward {
    Tensor output;
    ConvTrace trace;
};

struct PoolForward {
    Tensor output;
    PoolTrace trace;
};

struct DenseForward {
    Tensor output;
    DenseTrace trace;
};

struct ConvGradients {
    std::vector<double> weights;
    std::vector<double> biases;
};

struct DenseGradients {
    Tensor weights;
    Tensor biases;
    Tensor input;
};

/// Symmetric zero border of `pad` pixels around every channel.
Tensor zero_pad(const Tensor& image, std::size_t pad);

ConvForward conv_forward(const Tensor& image, const KernelBank& bank, Activation activation);

/// Per-channel max over k x k windows; ties go to the first maximum in
/// row-major window order.
PoolForward maxpool_forward(const Tensor& input, const PoolGeometry& g);

/// Routes each pooled gradient to its recorded winner; everything else is 0.
/// Overlapping windows accumulate.
Tensor maxpool_backward(const Tensor& grad_pooled, const PoolTrace& trace);

/// Kernel and bias gradients from dL/dpreact, as the cross-correlation of the
/// padded input with the output gradient. Stride 1 only.
ConvGradients conv_backward(const Tensor& grad_preact, const Tensor& image,
                            const KernelBank& bank);

/// Kernel gradient computed the other way round: a true convolution of the
/// 180-degree-rotated padded input with the output gradient, read back
/// rotated. Agrees with conv_backward up to summation-order rounding.
std::vector<double> conv_kernel_grad_rot180(const Tensor& grad_preact, const Tensor& image,
                                            const KernelBank& bank);

DenseForward dense_forward(const Tensor& input, const DenseLayer& layer);

/// With delta = grad_output * f'(z): dW = delta a^T, db = delta, da = W^T delta.
DenseGradients dense_backward(const Tensor& grad_output, const DenseLayer& layer,
                              const DenseTrace& trace);

} // namespace cnn

#endif // CNNBP_LAYERS_HPP
