#include "rankguide/tensor.hpp"

#include <cmath>
#include <utility>

namespace rankguide {

std::size_t shape_product(const std::vector<std::size_t>& dims) {
    std::size_t p = 1;
    for (std::size_t d : dims) p *= d;
    return p;
}

namespace {

void check_dims(const std::vector<std::size_t>& dims, std::size_t data_len) {
    if (dims.empty()) {
        throw config_error("EmptyShape", "tensor needs at least one mode");
    }
    for (std::size_t d : dims) {
        if (d == 0) {
            throw config_error("DimMismatch", "every mode size must be >= 1");
        }
    }
    const std::size_t expected = shape_product(dims);
    if (expected != data_len) {
        throw config_error("DimMismatch",
                           "data length " + std::to_string(data_len) +
                               " does not match shape product " + std::to_string(expected));
    }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
    check_dims(dims_, data_.size());
}

Tensor Tensor::zeros(std::vector<std::size_t> dims) {
    std::vector<double> data(shape_product(dims), 0.0);
    return Tensor(std::move(dims), std::move(data));
}

double frobenius_norm(const Tensor& t) {
    double sum = 0.0;
    for (double v : t.data()) sum += v * v;
    return std::sqrt(sum);
}

Tensor reshape(const Tensor& t, std::vector<std::size_t> new_dims) {
    if (new_dims.empty()) {
        throw config_error("EmptyShape", "reshape target needs at least one mode");
    }
    if (shape_product(new_dims) != t.size()) {
        throw config_error("DimMismatch",
                           "reshape target product " +
                               std::to_string(shape_product(new_dims)) +
                               " does not match element count " + std::to_string(t.size()));
    }
    return Tensor(std::move(new_dims), t.data());
}

ConstMatrixView unfold(const Tensor& t, std::size_t left_modes) {
    if (left_modes < 1 || left_modes >= t.ndims()) {
        throw config_error("DimMismatch",
                           "left_modes " + std::to_string(left_modes) +
                               " out of range for a " + std::to_string(t.ndims()) +
                               "-mode tensor");
    }
    std::size_t rows = 1;
    for (std::size_t i = 0; i < left_modes; ++i) rows *= t.dims()[i];
    const std::size_t cols = t.size() / rows;
    return ConstMatrixView(t.data().data(), static_cast<Eigen::Index>(rows),
                           static_cast<Eigen::Index>(cols));
}

double relative_error(const Tensor& a, const Tensor& b) {
    if (a.dims() != b.dims()) {
        throw config_error("DimMismatch", "relative_error requires identical shapes");
    }
    const double ref = frobenius_norm(a);
    if (ref == 0.0) {
        throw config_error("ZeroReference", "reference tensor has zero Frobenius norm");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return std::sqrt(sum) / ref;
}

}  // namespace rankguide
