#include "cnnbp/losses.hpp"

#include <algorithm>
#include <cmath>

#include "cnnbp/errors.hpp"

namespace cnn {

namespace {

void check_pair(const Tensor& yhat, const Tensor& y, std::string_view what) {
    if (yhat.rank() != 1 || y.rank() != 1 || yhat.size() != y.size()) {
        throw ShapeError(std::string(what) + ": prediction " + to_string(yhat.shape()) +
                         " and target " + to_string(y.shape()) +
                         " must be rank-1 of equal length");
    }
}

void check_bernoulli(const Tensor& yhat, const Tensor& y) {
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] != 0.0 && y[i] != 1.0) {
            throw DomainError("cross-entropy labels must be 0 or 1, got " +
                              std::to_string(y[i]) + " at index " + std::to_string(i));
        }
        if (!(yhat[i] >= 0.0 && yhat[i] <= 1.0)) {
            throw DomainError("cross-entropy predictions must lie in [0, 1], got " +
                              std::to_string(yhat[i]) + " at index " + std::to_string(i));
        }
    }
}

double clamp_probability(double p) {
    return std::clamp(p, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
}

} // namespace

std::string_view name(Loss kind) noexcept {
    switch (kind) {
    case Loss::MSE:
        return "mse";
    case Loss::MSLE:
        return "msle";
    case Loss::L2:
        return "l2";
    case Loss::L1:
        return "l1";
    case Loss::MAE:
        return "mae";
    case Loss::MAPE:
        return "mape";
    case Loss::CrossEntropy:
        return "cross_entropy";
    }
    return "unknown";
}

double loss(Loss kind, const Tensor& yhat, const Tensor& y) {
    check_pair(yhat, y, name(kind));
    const auto t = static_cast<double>(y.size());

    double sum = 0.0;
    switch (kind) {
    case Loss::MSE:
    case Loss::L2:
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double r = y[i] - yhat[i];
            sum += r * r;
        }
        return kind == Loss::L2 ? sum : sum / t;

    case Loss::L1:
    case Loss::MAE:
        for (std::size_t i = 0; i < y.size(); ++i) {
            sum += std::abs(y[i] - yhat[i]);
        }
        return kind == Loss::L1 ? sum : sum / t;

    case Loss::MSLE:
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (!(y[i] > -1.0) || !(yhat[i] > -1.0)) {
                throw DomainError("msle needs values greater than -1 at index " +
                                  std::to_string(i));
            }
            const double r = std::log1p(y[i]) - std::log1p(yhat[i]);
            sum += r * r;
        }
        return sum / t;

    case Loss::MAPE:
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (y[i] == 0.0) {
                throw DomainError("mape is undefined for a zero target at index " +
                                  std::to_string(i));
            }
            sum += std::abs((y[i] - yhat[i]) / y[i]);
        }
        return sum / t * 100.0;

    case Loss::CrossEntropy:
        check_bernoulli(yhat, y);
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double p = clamp_probability(yhat[i]);
            sum += y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p);
        }
        return -sum / t;
    }
    throw DomainError("unknown loss kind");
}

Tensor ce_grad(const Tensor& yhat, const Tensor& y) {
    check_pair(yhat, y, "ce_grad");
    check_bernoulli(yhat, y);
    const auto t = static_cast<double>(y.size());
    Tensor out = Tensor::make(y.shape());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double p = clamp_probability(yhat[i]);
        out[i] = (-y[i] / p + (1.0 - y[i]) / (1.0 - p)) / t;
    }
    return out;
}

} // namespace cnn
