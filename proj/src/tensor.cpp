#include "cnnbp/tensor.hpp"

#include <cmath>
#include <utility>

#include "cnnbp/errors.hpp"
#include "cnnbp/kernels.hpp"

namespace cnn {

std::string to_string(const Shape& shape) {
    std::string s;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i != 0) {
            s += 'x';
        }
        s += std::to_string(shape[i]);
    }
    return s.empty() ? "<empty>" : s;
}

std::size_t checked_element_count(const Shape& shape) {
    if (shape.empty() || shape.size() > 3) {
        throw ShapeError("tensor rank must be 1..3, got " + std::to_string(shape.size()));
    }
    std::size_t n = 1;
    for (std::size_t e : shape) {
        if (e == 0) {
            throw ShapeError("tensor extent of zero in shape " + to_string(shape));
        }
        if (e > Tensor::kMaxElements / n) {
            throw ShapeError("tensor shape " + to_string(shape) + " is too large");
        }
        n *= e;
    }
    return n;
}

Tensor::Tensor() : shape_{1}, data_(1, 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_element_count(shape_) != data_.size()) {
        throw ShapeError("tensor shape " + to_string(shape_) + " needs " +
                         std::to_string(checked_element_count(shape_)) + " values, got " +
                         std::to_string(data_.size()));
    }
}

Tensor Tensor::make(Shape shape, double fill) {
    const std::size_t n = checked_element_count(shape);
    return Tensor(std::move(shape), std::vector<double>(n, fill));
}

Tensor rot180(const Tensor& m) {
    if (m.rank() != 2) {
        throw ShapeError("rot180 needs a rank-2 tensor, got shape " + to_string(m.shape()));
    }
    const std::size_t h = m.extent(0);
    const std::size_t w = m.extent(1);
    Tensor out = Tensor::make(m.shape());
    for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
            out.at(i, j) = m.at(h - 1 - i, w - 1 - j);
        }
    }
    return out;
}

Tensor matvec(const Tensor& weights, const Tensor& a) {
    if (weights.rank() != 2 || a.rank() != 1 || weights.extent(1) != a.extent(0)) {
        throw ShapeError("matvec: cannot multiply " + to_string(weights.shape()) + " by " +
                         to_string(a.shape()));
    }
    Tensor out = Tensor::make({weights.extent(0)});
    kernels::parallel::matvec(weights.extent(0), weights.extent(1), weights.data(), a.data(),
                              out.data());
    return out;
}

Tensor flatten(const Tensor& t) {
    return Tensor({t.size()}, std::vector<double>(t.data().begin(), t.data().end()));
}

Tensor unflatten(const Tensor& v, Shape shape) {
    if (v.rank() != 1) {
        throw ShapeError("unflatten needs a rank-1 tensor, got shape " + to_string(v.shape()));
    }
    if (checked_element_count(shape) != v.size()) {
        throw ShapeError("unflatten: " + std::to_string(v.size()) + " values do not fill shape " +
                         to_string(shape));
    }
    return Tensor(std::move(shape), std::vector<double>(v.data().begin(), v.data().end()));
}

bool all_finite(const Tensor& t) noexcept {
    for (double x : t.data()) {
        if (!std::isfinite(x)) {
            return false;
        }
    }
    return true;
}

} // namespace cnn
