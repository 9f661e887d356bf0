#ifndef CNNBP_TENSOR_HPP
#define CNNBP_TENSOR_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cnn {

using Shape = std::vector<std::size_t>;

std::string to_string(const Shape& shape);

/// Dense rank-1..3 array of doubles in row-major order.
///
/// Rank-3 tensors are channel-major: element (c, h, w) lives at
/// ((c * H) + h) * W + w. Every extent is at least 1.
class Tensor {
public:
    static constexpr std::size_t kMaxElements = std::size_t{1} << 31;

    /// A single zero; lets aggregates default-construct.
    Tensor();

    /// Takes ownership of `data`; its length must equal the shape product.
    Tensor(Shape shape, std::vector<double> data);

    static Tensor make(Shape shape, double fill = 0.0);

    std::size_t rank() const noexcept { return shape_.size(); }
    const Shape& shape() const noexcept { return shape_; }
    std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

    double& at(std::size_t c, std::size_t h, std::size_t w) {
        return data_[(c * shape_[1] + h) * shape_[2] + w];
    }
    double at(std::size_t c, std::size_t h, std::size_t w) const {
        return data_[(c * shape_[1] + h) * shape_[2] + w];
    }

    /// Exact elementwise equality, shape included.
    friend bool operator==(const Tensor& a, const Tensor& b) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

/// Throws ShapeError for rank outside 1..3, zero extents, or oversize products.
std::size_t checked_element_count(const Shape& shape);

/// out[i][j] = in[H-1-i][W-1-j].
Tensor rot180(const Tensor& m);

/// W (n_out x n_in) times a (n_in), summed in ascending column order.
Tensor matvec(const Tensor& weights, const Tensor& a);

Tensor flatten(const Tensor& t);
Tensor unflatten(const Tensor& v, Shape shape);

bool all_finite(const Tensor& t) noexcept;

} // namespace cnn

#endif // CNNBP_TENSOR_HPP
