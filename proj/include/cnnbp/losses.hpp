#ifndef CNNBP_LOSSES_HPP
#define CNNBP_LOSSES_HPP

#include <string_view>

#include "cnnbp/tensor.hpp"

namespace cnn {

enum class Loss {
    MSE,
    MSLE,
    L2,
    L1,
    MAE,
    MAPE,
    CrossEntropy,
};

/// Clamp applied to predictions before any log or division in cross-entropy.
inline constexpr double kProbabilityEpsilon = 1e-12;

std::string_view name(Loss kind) noexcept;

/// Scalar loss between prediction `yhat` and target `y`, both rank-1 of
/// equal length t. Mean-style losses divide by t; L1 and L2 are plain sums.
///
/// Cross-entropy treats every component as an independent Bernoulli label,
/// so `y` must be 0/1 and `yhat` must lie in [0, 1].
double loss(Loss kind, const Tensor& yhat, const Tensor& y);

/// d(cross-entropy)/d(yhat), componentwise:
///   (1/t) * (-y / yc + (1 - y) / (1 - yc)),  yc = clamp(yhat, eps, 1 - eps)
Tensor ce_grad(const Tensor& yhat, const Tensor& y);

} // namespace cnn

#endif // CNNBP_LOSSES_HPP
