#include "rankguide/tensor_train.hpp"

#include <cmath>
#include <cstring>
#include <string>
#include <utility>

#include "rankguide/svd.hpp"

namespace rankguide {

namespace {

/// Smallest rank r >= 1 such that sum_{i > r} sigma_i^2 <= budget.
/// The tail is accumulated from the smallest value upward.
std::size_t select_rank(const Eigen::VectorXd& sigma, double budget) {
    const auto p = sigma.size();
    double tail = 0.0;
    for (Eigen::Index i = p - 1; i >= 1; --i) {
        tail += sigma(i) * sigma(i);
        if (tail > budget) {
            return static_cast<std::size_t>(i) + 1;
        }
    }
    return 1;
}

std::vector<double> row_major_copy(const Eigen::MatrixXd& m) {
    RowMajorMatrix rm = m;
    return std::vector<double>(rm.data(), rm.data() + rm.size());
}

TensorTrain zero_train(const Tensor& t, double epsilon) {
    TensorTrain out;
    out.epsilon = epsilon;
    out.source_norm = 0.0;
    const auto& dims = t.dims();
    const std::size_t n_steps = dims.size() - 1;
    out.cores.push_back(Tensor::zeros({dims[0], 1}));
    for (std::size_t k = 1; k < n_steps; ++k) {
        out.cores.push_back(Tensor::zeros({1, dims[k], 1}));
    }
    out.cores.push_back(Tensor::zeros({1, dims[n_steps]}));
    out.ranks.assign(n_steps, 1);
    return out;
}

}  // namespace

TensorTrain tt_decompose(const Tensor& t, double epsilon) {
    if (!(epsilon > 0.0) || epsilon > 1.0) {
        throw config_error("InvalidEpsilon",
                           "epsilon must lie in (0, 1], got " + std::to_string(epsilon));
    }
    if (t.ndims() < 2) {
        throw config_error("DimMismatch", "tensor train needs at least 2 modes");
    }

    const auto& dims = t.dims();
    const std::size_t n_steps = dims.size() - 1;

    const double norm = frobenius_norm(t);
    if (norm == 0.0) {
        return zero_train(t, epsilon);
    }
    const double budget = epsilon * epsilon * norm * norm / static_cast<double>(n_steps);

    TensorTrain out;
    out.epsilon = epsilon;
    out.source_norm = norm;

    // Working matrix starts as the (W, d_1 ... d_N) unfolding.
    Eigen::MatrixXd work = unfold(t, 1);
    std::size_t left_rank = 1;

    for (std::size_t k = 0; k < n_steps; ++k) {
        const SvdResult svd = thin_svd(work);
        const std::size_t rank = select_rank(svd.singular_values, budget);
        out.ranks.push_back(rank);

        const Eigen::MatrixXd u_r = svd.u.leftCols(static_cast<Eigen::Index>(rank));
        if (k == 0) {
            out.cores.emplace_back(std::vector<std::size_t>{dims[0], rank},
                                   row_major_copy(u_r));
        } else {
            out.cores.emplace_back(std::vector<std::size_t>{left_rank, dims[k], rank},
                                   row_major_copy(u_r));
        }

        Eigen::MatrixXd residual =
            svd.singular_values.head(static_cast<Eigen::Index>(rank)).asDiagonal() *
            svd.vt.topRows(static_cast<Eigen::Index>(rank));

        if (k + 1 < n_steps) {
            // Fold the next mode into the row dimension, row-major.
            const std::size_t next_mode = dims[k + 1];
            const std::size_t right = static_cast<std::size_t>(residual.cols()) / next_mode;
            RowMajorMatrix rm = residual;
            work = ConstMatrixView(rm.data(), static_cast<Eigen::Index>(rank * next_mode),
                                   static_cast<Eigen::Index>(right));
        } else {
            out.cores.emplace_back(std::vector<std::size_t>{rank, dims[n_steps]},
                                   row_major_copy(residual));
        }
        left_rank = rank;
    }
    return out;
}

Tensor tt_reconstruct(const TensorTrain& tt) {
    if (tt.cores.size() < 2) {
        throw config_error("RankMismatch", "tensor train needs at least 2 cores");
    }

    std::vector<std::size_t> shape;
    shape.push_back(tt.cores.front().dims().front());

    // Accumulator starts as the first core, (W x r_1).
    const Tensor& head = tt.cores.front();
    RowMajorMatrix acc = ConstMatrixView(head.data().data(),
                                         static_cast<Eigen::Index>(head.dims()[0]),
                                         static_cast<Eigen::Index>(head.dims()[1]));

    for (std::size_t k = 1; k < tt.cores.size(); ++k) {
        const Tensor& core = tt.cores[k];
        const std::size_t in_rank = core.dims().front();
        if (static_cast<std::size_t>(acc.cols()) != in_rank) {
            throw config_error("RankMismatch",
                               "core " + std::to_string(k) + " expects rank " +
                                   std::to_string(acc.cols()) + " but has first mode " +
                                   std::to_string(in_rank));
        }
        const std::size_t mode = core.dims()[1];
        const std::size_t out_rank = core.ndims() == 3 ? core.dims()[2] : 1;
        shape.push_back(mode);

        ConstMatrixView core_mat(core.data().data(), static_cast<Eigen::Index>(in_rank),
                                 static_cast<Eigen::Index>(mode * out_rank));
        RowMajorMatrix next = acc * core_mat;  // (rows, mode * out_rank)
        acc = ConstMatrixView(next.data(),
                              static_cast<Eigen::Index>(next.rows() * static_cast<Eigen::Index>(mode)),
                              static_cast<Eigen::Index>(out_rank));
    }

    std::vector<double> data(acc.data(), acc.data() + acc.size());
    return Tensor(std::move(shape), std::move(data));
}

}  // namespace rankguide
