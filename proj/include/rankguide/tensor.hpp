#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "rankguide/errors.hpp"

namespace rankguide {

using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixView = Eigen::Map<const RowMajorMatrix>;

/// Dense N-dimensional tensor with value semantics.
/// Row-major storage (last index fastest), float64 throughout.
/// Immutable after construction; safe to share across threads.
class Tensor {
public:
    Tensor(std::vector<std::size_t> dims, std::vector<double> data);

    static Tensor zeros(std::vector<std::size_t> dims);

    [[nodiscard]] const std::vector<std::size_t>& dims() const noexcept { return dims_; }
    [[nodiscard]] std::size_t ndims() const noexcept { return dims_.size(); }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] const std::vector<double>& data() const noexcept { return data_; }

    [[nodiscard]] double operator[](std::size_t flat_index) const { return data_[flat_index]; }

    bool operator==(const Tensor&) const = default;

private:
    std::vector<std::size_t> dims_;
    std::vector<double> data_;
};

[[nodiscard]] std::size_t shape_product(const std::vector<std::size_t>& dims);

[[nodiscard]] double frobenius_norm(const Tensor& t);

/// Same buffer, new shape metadata. product(new_dims) must match.
[[nodiscard]] Tensor reshape(const Tensor& t, std::vector<std::size_t> new_dims);

/// Matricization (product of the first `left_modes` dims) x (product of the
/// rest). Zero-copy under row-major storage; the view borrows from `t`.
[[nodiscard]] ConstMatrixView unfold(const Tensor& t, std::size_t left_modes);

/// ||a - b||_F / ||a||_F with `a` as the reference.
[[nodiscard]] double relative_error(const Tensor& a, const Tensor& b);

}  // namespace rankguide
