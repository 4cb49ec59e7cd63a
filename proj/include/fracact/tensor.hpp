#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fracact/errors.hpp"

namespace fracact {

/// Dense row-major array of doubles. The only numeric container used by
/// the trainer; 1-D (vectors) and 2-D (batch x features) are the shapes
/// that actually occur.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape)
        : shape_(std::move(shape)), data_(count(shape_), 0.0) {}

    Tensor(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != count(shape_))
            throw ShapeError("Tensor: data length " + std::to_string(data_.size()) +
                             " does not match shape product " +
                             std::to_string(count(shape_)));
    }

    static Tensor matrix(std::size_t rows, std::size_t cols) {
        return Tensor({rows, cols});
    }

    static Tensor vector(std::size_t n) { return Tensor({n}); }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::size_t rows() const {
        require_2d("rows");
        return shape_[0];
    }
    std::size_t cols() const {
        require_2d("cols");
        return shape_[1];
    }

    double& operator()(std::size_t i, std::size_t j) {
        return data_[i * shape_[1] + j];
    }
    double operator()(std::size_t i, std::size_t j) const {
        return data_[i * shape_[1] + j];
    }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

private:
    static std::size_t count(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (std::size_t d : shape) n *= d;
        return shape.empty() ? 0 : n;
    }

    void require_2d(const char* what) const {
        if (shape_.size() != 2)
            throw ShapeError(std::string("Tensor::") + what +
                             ": tensor is not 2-D");
    }

    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

} // namespace fracact
