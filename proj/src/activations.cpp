#include "cnnbp/activations.hpp"

#include <algorithm>
#include <cmath>

#include "cnnbp/errors.hpp"

namespace cnn {

std::string_view name(Activation kind) noexcept {
    switch (kind) {
    case Activation::Sigmoid:
        return "sigmoid";
    case Activation::Tanh:
        return "tanh";
    case Activation::ReLU:
        return "relu";
    case Activation::LeakyReLU:
        return "leaky_relu";
    case Activation::Softmax:
        return "softmax";
    }
    return "unknown";
}

std::optional<Activation> activation_from_tag(std::uint8_t tag) noexcept {
    if (tag > static_cast<std::uint8_t>(Activation::Softmax)) {
        return std::nullopt;
    }
    return static_cast<Activation>(tag);
}

double sigmoid(double z) noexcept {
    // Branch on sign so exp() never overflows.
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double apply_scalar(Activation kind, double z) {
    switch (kind) {
    case Activation::Sigmoid:
        return sigmoid(z);
    case Activation::Tanh:
        return std::tanh(z);
    case Activation::ReLU:
        return z >= 0.0 ? z : 0.0;
    case Activation::LeakyReLU:
        return z >= 0.0 ? z : kLeakySlope * z;
    case Activation::Softmax:
        break;
    }
    throw UnsupportedError("softmax is not an elementwise activation");
}

double derivative_scalar(Activation kind, double z) {
    switch (kind) {
    case Activation::Sigmoid: {
        const double s = sigmoid(z);
        return s * (1.0 - s);
    }
    case Activation::Tanh: {
        const double t = std::tanh(z);
        return 1.0 - t * t;
    }
    case Activation::ReLU:
        return z >= 0.0 ? 1.0 : 0.0;
    case Activation::LeakyReLU:
        return z >= 0.0 ? 1.0 : kLeakySlope;
    case Activation::Softmax:
        break;
    }
    throw UnsupportedError("softmax derivative is not supported; softmax is inference-only");
}

Tensor apply(Activation kind, const Tensor& z) {
    Tensor out = z;
    if (kind == Activation::Softmax) {
        if (z.rank() != 1) {
            throw ShapeError("softmax needs a rank-1 input, got shape " + to_string(z.shape()));
        }
        const auto in = z.data();
        const double peak = *std::max_element(in.begin(), in.end());
        double total = 0.0;
        for (double& x : out.data()) {
            x = std::exp(x - peak);
            total += x;
        }
        for (double& x : out.data()) {
            x /= total;
        }
        return out;
    }
    for (double& x : out.data()) {
        x = apply_scalar(kind, x);
    }
    return out;
}

Tensor derivative(Activation kind, const Tensor& z) {
    if (kind == Activation::Softmax) {
        throw UnsupportedError("softmax derivative is not supported; softmax is inference-only");
    }
    Tensor out = z;
    for (double& x : out.data()) {
        x = derivative_scalar(kind, x);
    }
    return out;
}

} // namespace cnn
