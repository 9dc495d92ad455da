#pragma once

#include <cstddef>
#include <vector>

#include "rankguide/tensor.hpp"

namespace rankguide {

/// Tensor-train factorization of a (W, d_1, ..., d_N) tensor.
///
/// cores[0] has shape (W, r_1); interior cores have shape (r_k, d_k, r_{k+1});
/// the final core has shape (r_N, d_N) and absorbs the residual
/// singular-value factor, so every stored core except the last is
/// column-orthonormal when unfolded to (rows, r).
struct TensorTrain {
    std::vector<Tensor> cores;
    std::vector<std::size_t> ranks;  // [r_1, ..., r_N]
    double epsilon = 0.0;
    double source_norm = 0.0;
};

/// Error-bounded sequential truncated-SVD decomposition.
///
/// The squared budget epsilon^2 * ||t||_F^2 is split uniformly over the N
/// truncation steps (N = ndims - 1). At each step the smallest rank is kept
/// whose discarded singular-value energy stays within the per-step share,
/// which guarantees ||t - tt_reconstruct(result)||_F <= epsilon * ||t||_F.
///
/// A zero tensor yields all ranks = 1 with zero cores.
[[nodiscard]] TensorTrain tt_decompose(const Tensor& t, double epsilon);

/// Contract the cores back into a dense (W, d_1, ..., d_N) tensor by
/// chaining each core's rank mode into the next core's first mode.
[[nodiscard]] Tensor tt_reconstruct(const TensorTrain& tt);

}  // namespace rankguide
