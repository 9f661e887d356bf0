#ifndef CNNBP_DATASET_HPP
#define CNNBP_DATASET_HPP

#include <cstddef>
#include <vector>

#include "cnnbp/tensor.hpp"

namespace cnn {

/// Images (C x H x W, values in [0, 1]) paired with one-hot labels.
struct Dataset {
    std::vector<Tensor> images;
    std::vector<Tensor> labels;
    std::size_t class_count = 0;

    std::size_t size() const noexcept { return images.size(); }
    bool empty() const noexcept { return images.empty(); }

    /// Throws ShapeError / DomainError when the invariants do not hold: equal
    /// list lengths, uniform image extents, one-hot labels of class_count.
    void validate() const;
};

/// Index of the largest component; ties resolve to the lowest index.
std::size_t argmax(const Tensor& v);

} // namespace cnn

#endif // CNNBP_DATASET_HPP
