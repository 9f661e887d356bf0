#include "cnnbp/network.hpp"

#include <cmath>
#include <exception>
#include <numeric>
#include <utility>

#include "cnnbp/errors.hpp"
#include "cnnbp/kernels.hpp"
#include "cnnbp/losses.hpp"
#include "cnnbp/random.hpp"

namespace cnn {

namespace {

constexpr std::uint64_t kShuffleStream = 0x5348'5546'0000'0000ULL;

void check_same_extent(std::size_t a, std::size_t b, const std::string& what) {
    if (a != b) {
        throw ShapeError(what + ": " + std::to_string(a) + " vs " + std::to_string(b));
    }
}

void fill_uniform(std::span<double> values, double bound, std::uint64_t seed,
                  std::uint64_t stream) {
    const CounterRng rng(seed, stream);
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = rng.uniform(i, -bound, bound);
    }
}

// Dense backward with one of the seeded faults applied.
DenseGradients faulty_dense_backward(const Tensor& grad_output, const DenseLayer& layer,
                                     const DenseTrace& trace, SeededFault fault) {
    if (fault == SeededFault::DropActivationDerivative) {
        const Tensor& delta = grad_output;
        DenseGradients grads{Tensor::make(layer.weights.shape()), delta,
                             Tensor::make({layer.n_in()})};
        kernels::serial::outer(delta.data(), trace.input.data(), grads.weights.data());
        kernels::serial::matvec_transposed(layer.n_out(), layer.n_in(), layer.weights.data(),
                                           delta.data(), grads.input.data());
        return grads;
    }
    DenseGradients grads = dense_backward(grad_output, layer, trace);
    if (fault == SeededFault::TransposedPropagation) {
        // Treats the n_out x n_in buffer as if it were n_in x n_out.
        kernels::serial::matvec(layer.n_in(), layer.n_out(), layer.weights.data(),
                                grads.biases.data(), grads.input.data());
    }
    return grads;
}

} // namespace

// --- Network ----------------------------------------------------------------

Network::Network(KernelBank conv, PoolGeometry pool, std::vector<DenseLayer> dense)
    : conv_(std::move(conv)), pool_(pool), dense_(std::move(dense)) {
    if (dense_.empty()) {
        throw ShapeError("network needs at least one dense layer");
    }
    const Dims3 pooled = pooled_dims();
    std::size_t width = pooled.height * pooled.width * pooled.depth;
    for (std::size_t l = 0; l < dense_.size(); ++l) {
        check_layer(dense_[l]);
        check_same_extent(dense_[l].n_in(), width,
                          "dense layer " + std::to_string(l) + " input width mismatch");
        if (dense_[l].activation == Activation::Softmax) {
            throw UnsupportedError("dense layer " + std::to_string(l) +
                                   " uses softmax, which cannot be backpropagated");
        }
        width = dense_[l].n_out();
    }
}

Shape Network::input_shape() const {
    const ConvGeometry& g = conv_.geometry();
    return {g.in_c, g.in_h, g.in_w};
}

Dims3 Network::conv_dims() const { return conv_output_dims(conv_.geometry()); }

Dims3 Network::pooled_dims() const {
    const Dims3 c = conv_dims();
    return pool_output_dims(c.height, c.width, c.depth, pool_);
}

Architecture Network::architecture() const {
    Architecture arch{conv_.geometry(), pool_, {}};
    for (const DenseLayer& layer : dense_) {
        arch.dense_widths.push_back(layer.n_out());
    }
    return arch;
}

std::vector<ParamGroup> Network::parameters() {
    std::vector<ParamGroup> groups{{"conv.kernels", conv_.weights()},
                                   {"conv.biases", conv_.biases()}};
    for (std::size_t l = 0; l < dense_.size(); ++l) {
        groups.push_back({"dense" + std::to_string(l) + ".weights", dense_[l].weights.data()});
        groups.push_back({"dense" + std::to_string(l) + ".biases", dense_[l].biases.data()});
    }
    return groups;
}

std::vector<ConstParamGroup> Network::parameters() const {
    std::vector<ConstParamGroup> groups{{"conv.kernels", conv_.weights()},
                                        {"conv.biases", conv_.biases()}};
    for (std::size_t l = 0; l < dense_.size(); ++l) {
        groups.push_back({"dense" + std::to_string(l) + ".weights", dense_[l].weights.data()});
        groups.push_back({"dense" + std::to_string(l) + ".biases", dense_[l].biases.data()});
    }
    return groups;
}

// --- GradientSet ------------------------------------------------------------

GradientSet GradientSet::zeros_like(const Network& net) {
    GradientSet g{std::vector<double>(net.conv().weights().size()),
                  std::vector<double>(net.conv().biases().size()),
                  {}};
    for (const DenseLayer& layer : net.dense()) {
        g.dense.push_back({Tensor::make(layer.weights.shape()), Tensor::make(layer.biases.shape())});
    }
    return g;
}

std::vector<ParamGroup> GradientSet::groups() {
    std::vector<ParamGroup> out{{"conv.kernels", kernels}, {"conv.biases", kernel_biases}};
    for (std::size_t l = 0; l < dense.size(); ++l) {
        out.push_back({"dense" + std::to_string(l) + ".weights", dense[l].weights.data()});
        out.push_back({"dense" + std::to_string(l) + ".biases", dense[l].biases.data()});
    }
    return out;
}

std::vector<ConstParamGroup> GradientSet::groups() const {
    std::vector<ConstParamGroup> out{{"conv.kernels", kernels}, {"conv.biases", kernel_biases}};
    for (std::size_t l = 0; l < dense.size(); ++l) {
        out.push_back({"dense" + std::to_string(l) + ".weights", dense[l].weights.data()});
        out.push_back({"dense" + std::to_string(l) + ".biases", dense[l].biases.data()});
    }
    return out;
}

void GradientSet::accumulate(const GradientSet& other) {
    auto dst = groups();
    const auto src = other.groups();
    check_same_extent(dst.size(), src.size(), "gradient group count");
    for (std::size_t g = 0; g < dst.size(); ++g) {
        check_same_extent(dst[g].values.size(), src[g].values.size(), dst[g].name + " extent");
        for (std::size_t i = 0; i < dst[g].values.size(); ++i) {
            dst[g].values[i] += src[g].values[i];
        }
    }
}

void GradientSet::scale(double factor) {
    for (ParamGroup& group : groups()) {
        for (double& v : group.values) {
            v *= factor;
        }
    }
}

// --- TrainConfig ------------------------------------------------------------

void TrainConfig::validate() const {
    if (!std::isfinite(learning_rate) || learning_rate < 0.0) {
        throw DomainError("learning rate must be a finite non-negative number");
    }
    if (epochs == 0) {
        throw DomainError("epochs must be at least 1");
    }
    if (batch_size == 0) {
        throw DomainError("batch size must be at least 1");
    }
}

// --- init / forward / backward ----------------------------------------------

Network init(const Architecture& arch, std::uint64_t seed) {
    if (arch.dense_widths.empty()) {
        throw GeometryError("architecture needs at least one dense layer");
    }
    const Dims3 conv = conv_output_dims(arch.conv);
    const Dims3 pooled = pool_output_dims(conv.height, conv.width, conv.depth, arch.pool);

    KernelBank bank(arch.conv);
    const double conv_fan_in = static_cast<double>(arch.conv.in_c * arch.conv.k_h * arch.conv.k_w);
    fill_uniform(bank.weights(), 1.0 / std::sqrt(conv_fan_in), seed, 0);

    std::vector<DenseLayer> dense;
    std::size_t n_in = pooled.height * pooled.width * pooled.depth;
    for (std::size_t l = 0; l < arch.dense_widths.size(); ++l) {
        const std::size_t n_out = arch.dense_widths[l];
        if (n_out == 0) {
            throw GeometryError("dense layer " + std::to_string(l) + " has zero width");
        }
        const bool last = l + 1 == arch.dense_widths.size();
        DenseLayer layer =
            DenseLayer::zeros(n_in, n_out, last ? Activation::Sigmoid : Activation::ReLU);
        fill_uniform(layer.weights.data(), 1.0 / std::sqrt(static_cast<double>(n_in)), seed, l + 1);
        dense.push_back(std::move(layer));
        n_in = n_out;
    }
    return Network(std::move(bank), arch.pool, std::move(dense));
}

ForwardResult forward(const Network& net, const Tensor& image) {
    if (image.shape() != net.input_shape()) {
        throw ShapeError("image shape " + to_string(image.shape()) +
                         " does not match network input " + to_string(net.input_shape()));
    }
    ConvForward conv = conv_forward(image, net.conv(), Network::kConvActivation);
    PoolForward pool = maxpool_forward(conv.output, net.pool());

    NetworkTrace trace{std::move(conv.trace), std::move(conv.output), std::move(pool.trace), {}};
    Tensor a = flatten(pool.output);
    for (const DenseLayer& layer : net.dense()) {
        DenseForward step = dense_forward(a, layer);
        trace.dense.push_back(std::move(step.trace));
        a = std::move(step.output);
    }
    return ForwardResult{std::move(a), std::move(trace)};
}

GradientSet backward(const Network& net, const ForwardResult& fwd, const Tensor& y,
                     SeededFault fault) {
    const NetworkTrace& trace = fwd.trace;
    check_same_extent(trace.dense.size(), net.dense().size(), "trace dense layer count");
    if (y.rank() != 1 || y.size() != net.class_count()) {
        throw ShapeError("label shape " + to_string(y.shape()) + " does not match " +
                         std::to_string(net.class_count()) + " classes");
    }

    GradientSet grads;
    grads.dense.resize(net.dense().size());

    Tensor grad = ce_grad(fwd.yhat, y);
    for (std::size_t l = net.dense().size(); l-- > 0;) {
        DenseGradients step = fault == SeededFault::None
                                  ? dense_backward(grad, net.dense()[l], trace.dense[l])
                                  : faulty_dense_backward(grad, net.dense()[l], trace.dense[l], fault);
        grads.dense[l] = {std::move(step.weights), std::move(step.biases)};
        grad = std::move(step.input);
    }

    const Tensor grad_pooled = unflatten(grad, trace.pool.output_shape);
    Tensor grad_conv;
    if (fault == SeededFault::UnroutedPool) {
        PoolTrace unrouted = trace.pool;
        const std::size_t h1 = unrouted.input_shape[1];
        const std::size_t w1 = unrouted.input_shape[2];
        const std::size_t h2 = unrouted.output_shape[1];
        const std::size_t w2 = unrouted.output_shape[2];
        for (std::size_t k = 0; k < unrouted.winners.size(); ++k) {
            const std::size_t c = k / (h2 * w2);
            const std::size_t i = (k / w2) % h2;
            const std::size_t j = k % w2;
            unrouted.winners[k] = (c * h1 + i * unrouted.stride) * w1 + j * unrouted.stride;
        }
        grad_conv = maxpool_backward(grad_pooled, unrouted);
    } else {
        grad_conv = maxpool_backward(grad_pooled, trace.pool);
    }

    const Tensor relu_slope = derivative(Network::kConvActivation, trace.conv.preact);
    for (std::size_t i = 0; i < grad_conv.size(); ++i) {
        grad_conv[i] *= relu_slope[i];
    }
    ConvGradients conv = conv_backward(grad_conv, trace.conv.input, net.conv());
    grads.kernels = std::move(conv.weights);
    grads.kernel_biases = std::move(conv.biases);
    return grads;
}

GradientSet batch_gradient(const Network& net, const Dataset& data,
                           std::span<const std::size_t> indices) {
    if (indices.empty()) {
        throw DomainError("batch_gradient needs at least one sample");
    }
    GradientSet total = GradientSet::zeros_like(net);
    for (std::size_t idx : indices) {
        const ForwardResult fwd = forward(net, data.images.at(idx));
        total.accumulate(backward(net, fwd, data.labels.at(idx)));
    }
    total.scale(1.0 / static_cast<double>(indices.size()));
    return total;
}

// --- updates / training -----------------------------------------------------

void apply_update(Network& net, const GradientSet& grads, double alpha) {
    if (!std::isfinite(alpha) || alpha < 0.0) {
        throw DomainError("learning rate must be a finite non-negative number");
    }
    auto params = net.parameters();
    const auto g = grads.groups();
    check_same_extent(params.size(), g.size(), "gradient group count");
    for (std::size_t k = 0; k < params.size(); ++k) {
        check_same_extent(params[k].values.size(), g[k].values.size(), params[k].name + " extent");
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
        for (std::size_t i = 0; i < params[k].values.size(); ++i) {
            params[k].values[i] -= alpha * g[k].values[i];
        }
    }
}

Network sgd_step(Network net, const GradientSet& grads, double alpha) {
    apply_update(net, grads, alpha);
    return net;
}

TrainResult train(Network net, const Dataset& data, const TrainConfig& cfg) {
    cfg.validate();
    if (data.empty()) {
        throw DomainError("cannot train on an empty dataset");
    }
    data.validate();
    if (data.images.front().shape() != net.input_shape() || data.class_count != net.class_count()) {
        throw ShapeError("dataset images " + to_string(data.images.front().shape()) + " with " +
                         std::to_string(data.class_count) + " classes do not fit network input " +
                         to_string(net.input_shape()) + " with " +
                         std::to_string(net.class_count()) + " classes");
    }

    std::vector<std::size_t> order(data.size());
    std::vector<EpochStats> history;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        const CounterRng rng(cfg.seed, kShuffleStream + epoch);
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[rng.below(i, i)]);
        }

        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t len = std::min(cfg.batch_size, order.size() - start);
            const GradientSet grads =
                batch_gradient(net, data, std::span<const std::size_t>(order).subspan(start, len));
            apply_update(net, grads, cfg.learning_rate);
        }

        const Metrics m = evaluate(net, data);
        history.push_back({epoch, m.mean_loss, m.accuracy});
    }
    return TrainResult{std::move(net), std::move(history)};
}

Metrics evaluate(const Network& net, const Dataset& data) {
    if (data.empty()) {
        throw DomainError("cannot evaluate on an empty dataset");
    }
    data.validate();
    if (data.images.front().shape() != net.input_shape() || data.class_count != net.class_count()) {
        throw ShapeError("data extent " + to_string(data.images.front().shape()) + " with " +
                         std::to_string(data.class_count) + " classes does not match model extent " +
                         to_string(net.input_shape()) + " with " +
                         std::to_string(net.class_count()) + " classes");
    }

    const std::size_t n = data.size();
    std::vector<double> losses(n);
    std::vector<unsigned char> correct(n);
    std::vector<std::exception_ptr> failures(n);
    const auto count = static_cast<std::int64_t>(n);

#pragma omp parallel for schedule(static)
    for (std::int64_t s = 0; s < count; ++s) {
        const auto k = static_cast<std::size_t>(s);
        try {
            const ForwardResult fwd = forward(net, data.images[k]);
            losses[k] = loss(Loss::CrossEntropy, fwd.yhat, data.labels[k]);
            correct[k] = argmax(fwd.yhat) == argmax(data.labels[k]) ? 1 : 0;
        } catch (...) {
            failures[k] = std::current_exception();
        }
    }
    for (const std::exception_ptr& failure : failures) {
        if (failure) {
            std::rethrow_exception(failure);
        }
    }

    double total_loss = 0.0;
    std::size_t hits = 0;
    for (std::size_t k = 0; k < n; ++k) {
        total_loss += losses[k];
        hits += correct[k];
    }
    return Metrics{total_loss / static_cast<double>(n),
                   static_cast<double>(hits) / static_cast<double>(n)};
}

} // namespace cnn
