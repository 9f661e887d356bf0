#ifndef CNNBP_NETWORK_HPP
#define CNNBP_NETWORK_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cnnbp/dataset.hpp"
#include "cnnbp/layers.hpp"

namespace cnn {

/// Shape of the canonical topology: conv -> max pool -> flatten -> dense+.
/// `dense_widths` lists each dense layer's output width; the first layer's
/// input width follows from the pooled extents and the last width is the
/// class count. Hidden dense layers use ReLU, the last one Sigmoid.
struct Architecture {
    ConvGeometry conv;
    PoolGeometry pool;
    std::vector<std::size_t> dense_widths;
};

struct ParamGroup {
    std::string name;
    std::span<double> values;
};

struct ConstParamGroup {
    std::string name;
    std::span<const double> values;
};

class Network {
public:
    static constexpr Activation kConvActivation = Activation::ReLU;

    /// Throws ShapeError / GeometryError unless the extents chain from the
    /// convolution through the pool into the first dense layer and between
    /// successive dense layers. Dense layers may not use Softmax.
    Network(KernelBank conv, PoolGeometry pool, std::vector<DenseLayer> dense);

    const KernelBank& conv() const noexcept { return conv_; }
    const PoolGeometry& pool() const noexcept { return pool_; }
    const std::vector<DenseLayer>& dense() const noexcept { return dense_; }

    Shape input_shape() const;
    Dims3 conv_dims() const;
    Dims3 pooled_dims() const;
    std::size_t class_count() const { return dense_.back().n_out(); }
    Architecture architecture() const;

    /// Every trainable array in a fixed order: conv kernels, conv biases,
    /// then weights and biases of each dense layer.
    std::vector<ParamGroup> parameters();
    std::vector<ConstParamGroup> parameters() const;

    friend bool operator==(const Network&, const Network&) = default;

private:
    KernelBank conv_;
    PoolGeometry pool_;
    std::vector<DenseLayer> dense_;
};

struct NetworkTrace {
    ConvTrace conv;
    Tensor conv_output;
    PoolTrace pool;
    std::vector<DenseTrace> dense;
};

struct ForwardResult {
    Tensor yhat;
    NetworkTrace trace;
};

struct DenseParamGradients {
    Tensor weights;
    Tensor biases;
};

/// Loss gradients laid out exactly like the Network's parameters.
struct GradientSet {
    std::vector<double> kernels;
    std::vector<double> kernel_biases;
    std::vector<DenseParamGradients> dense;

    static GradientSet zeros_like(const Network& net);

    std::vector<ParamGroup> groups();
    std::vector<ConstParamGroup> groups() const;

    /// this += other; extents must match.
    void accumulate(const GradientSet& other);
    void scale(double factor);
};

/// Deliberate backward-pass bugs, used to show the gradient checker catches them.
enum class SeededFault {
    None,
    DropActivationDerivative, // dense layers use delta = dL/da, skipping f'(z)
    TransposedPropagation,    // dL/da_prev reads W's buffer with swapped layout
    UnroutedPool,             // pool gradient lands on the window's top-left cell
};

struct TrainConfig {
    double learning_rate = 0.05;
    std::size_t epochs = 1;
    std::size_t batch_size = 1;
    std::uint64_t seed = 0;

    /// Throws DomainError for a negative / non-finite rate or zero counts.
    void validate() const;
};

struct EpochStats {
    std::size_t epoch = 0;
    double mean_loss = 0.0;
    double accuracy = 0.0;

    friend bool operator==(const EpochStats&, const EpochStats&) = default;
};

struct Metrics {
    double mean_loss = 0.0;
    double accuracy = 0.0;

    friend bool operator==(const Metrics&, const Metrics&) = default;
};

struct TrainResult {
    Network net;
    std::vector<EpochStats> history;
};

/// Weights ~ U[-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero; a pure function
/// of (arch, seed).
Network init(const Architecture& arch, std::uint64_t seed);

ForwardResult forward(const Network& net, const Tensor& image);

/// Gradient of the per-sample cross-entropy loss(CrossEntropy, yhat, y).
GradientSet backward(const Network& net, const ForwardResult& fwd, const Tensor& y,
                     SeededFault fault = SeededFault::None);

/// Mean of per-sample gradients over the samples at `indices` (non-empty),
/// summed in the given order.
GradientSet batch_gradient(const Network& net, const Dataset& data,
                           std::span<const std::size_t> indices);

/// theta <- theta - alpha * grad, in place.
void apply_update(Network& net, const GradientSet& grads, double alpha);
Network sgd_step(Network net, const GradientSet& grads, double alpha);

/// Mini-batch gradient descent; each epoch visits a seed-derived permutation.
/// History holds post-epoch training-set metrics.
TrainResult train(Network net, const Dataset& data, const TrainConfig& cfg);

/// Mean per-sample cross-entropy and argmax accuracy. Samples may be spread
/// across threads; the reduction runs in sample order so the result does not
/// depend on the thread count.
Metrics evaluate(const Network& net, const Dataset& data);

/// Binary model file, little-endian; see README for the byte layout.
void save(const Network& net, std::ostream& out);
Network load(std::istream& in);

/// Writes through a temporary sibling and renames, so a failure leaves no file.
void save_file(const Network& net, const std::filesystem::path& path);
Network load_file(const std::filesystem::path& path);

} // namespace cnn

#endif // CNNBP_NETWORK_HPP
