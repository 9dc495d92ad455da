#include "rankguide/svd.hpp"

#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "rankguide/errors.hpp"

namespace rankguide {

SvdResult thin_svd(const Eigen::MatrixXd& m) {
    if (!m.allFinite()) {
        throw numerical_error("NumericalFailure",
                              "SVD input of shape " + std::to_string(m.rows()) + "x" +
                                  std::to_string(m.cols()) + " has non-finite entries");
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) {
        const auto sv = svd.singularValues();
        const double smax = sv.size() > 0 ? sv(0) : 0.0;
        const double smin = sv.size() > 0 ? sv(sv.size() - 1) : 0.0;
        throw numerical_error(
            "NumericalFailure",
            "SVD failed to converge for a " + std::to_string(m.rows()) + "x" +
                std::to_string(m.cols()) + " matrix (||M||_F=" + std::to_string(m.norm()) +
                ", sigma_max=" + std::to_string(smax) + ", sigma_min=" + std::to_string(smin) +
                ")");
    }

    SvdResult out;
    out.u = svd.matrixU();
    out.singular_values = svd.singularValues();
    out.vt = svd.matrixV().transpose();

    // Canonical signs: flip any column of U whose largest-magnitude entry is
    // negative, together with the matching row of V^T.
    for (Eigen::Index j = 0; j < out.u.cols(); ++j) {
        Eigen::Index argmax = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < out.u.rows(); ++i) {
            const double mag = std::abs(out.u(i, j));
            if (mag > best) {
                best = mag;
                argmax = i;
            }
        }
        if (out.u(argmax, j) < 0.0) {
            out.u.col(j) = -out.u.col(j);
            out.vt.row(j) = -out.vt.row(j);
        }
    }
    return out;
}

}  // namespace rankguide
