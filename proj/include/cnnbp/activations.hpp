#ifndef CNNBP_ACTIVATIONS_HPP
#define CNNBP_ACTIVATIONS_HPP

#include <cstdint>
#include <optional>
#include <string_view>

#include "cnnbp/tensor.hpp"

namespace cnn {

/// Tag values are part of the model file format; do not renumber.
enum class Activation : std::uint8_t {
    Sigmoid = 0,
    Tanh = 1,
    ReLU = 2,
    LeakyReLU = 3,
    Softmax = 4,
};

inline constexpr double kLeakySlope = 0.01;

std::string_view name(Activation kind) noexcept;
std::optional<Activation> activation_from_tag(std::uint8_t tag) noexcept;

double sigmoid(double z) noexcept;

/// Elementwise, except Softmax which normalizes over a rank-1 input.
Tensor apply(Activation kind, const Tensor& z);

/// Elementwise first derivative evaluated at the pre-activation `z`.
/// ReLU and LeakyReLU take the x >= 0 branch at zero. Softmax has no
/// elementwise derivative and throws UnsupportedError.
Tensor derivative(Activation kind, const Tensor& z);

/// Scalar forms of the elementwise activations (not Softmax).
double apply_scalar(Activation kind, double z);
double derivative_scalar(Activation kind, double z);

} // namespace cnn

#endif // CNNBP_ACTIVATIONS_HPP
