#include "cnnbp/dataset.hpp"

#include <string>

#include "cnnbp/errors.hpp"

namespace cnn {

void Dataset::validate() const {
    if (images.size() != labels.size()) {
        throw ShapeError("dataset has " + std::to_string(images.size()) + " images but " +
                         std::to_string(labels.size()) + " labels");
    }
    if (class_count == 0) {
        throw DomainError("dataset class count must be positive");
    }
    for (std::size_t k = 0; k < images.size(); ++k) {
        if (images[k].rank() != 3 || images[k].shape() != images.front().shape()) {
            throw ShapeError("image " + std::to_string(k) + " has shape " +
                             to_string(images[k].shape()) + ", expected " +
                             to_string(images.front().shape()));
        }
        const Tensor& y = labels[k];
        if (y.rank() != 1 || y.size() != class_count) {
            throw ShapeError("label " + std::to_string(k) + " has shape " + to_string(y.shape()) +
                             ", expected " + std::to_string(class_count));
        }
        double sum = 0.0;
        for (double v : y.data()) {
            if (v != 0.0 && v != 1.0) {
                throw DomainError("label " + std::to_string(k) + " is not one-hot");
            }
            sum += v;
        }
        if (sum != 1.0) {
            throw DomainError("label " + std::to_string(k) + " is not one-hot");
        }
    }
}

std::size_t argmax(const Tensor& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) {
            best = i;
        }
    }
    return best;
}

} // namespace cnn
