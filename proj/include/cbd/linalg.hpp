#pragma once

#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace cbd {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using RowVector = RowVectorX<double>;

/// σ(z) = 1 / (1 + e^{-z}), evaluated without overflow for any finite z.
template <typename Scalar>
Scalar sigmoid(Scalar z) noexcept {
    using std::exp;
    if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-z));
    const Scalar e = exp(z);
    return e / (Scalar(1) + e);
}

/// log(1 + e^{z}), stable for large |z|.
template <typename Scalar>
Scalar softplus(Scalar z) noexcept {
    using std::exp;
    using std::log1p;
    return z > Scalar(0) ? z + log1p(exp(-z)) : log1p(exp(z));
}

/// Binary cross-entropy of label y ∈ {0,1} given the pre-sigmoid logit z.
template <typename Scalar>
Scalar bce_with_logit(Scalar z, Scalar y) noexcept {
    return softplus(z) - y * z;
}

template <typename Scalar>
Scalar prelu(Scalar x, Scalar a) noexcept {
    return x >= Scalar(0) ? x : a * x;
}

/// Row-wise softmax over the columns whose key mask is set; masked columns
/// receive exactly zero weight. At least one column must be unmasked.
template <typename Derived, typename MaskVec>
MatrixX<typename Derived::Scalar> masked_softmax_rows(const Eigen::MatrixBase<Derived>& scores,
                                                      const MaskVec& key_mask) {
    using Scalar = typename Derived::Scalar;
    MatrixX<Scalar> out = MatrixX<Scalar>::Zero(scores.rows(), scores.cols());
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
        Scalar hi = -std::numeric_limits<Scalar>::infinity();
        for (Eigen::Index c = 0; c < scores.cols(); ++c) {
            if (key_mask[c]) hi = std::max(hi, scores(r, c));
        }
        Scalar total(0);
        for (Eigen::Index c = 0; c < scores.cols(); ++c) {
            if (key_mask[c]) {
                out(r, c) = std::exp(scores(r, c) - hi);
                total += out(r, c);
            }
        }
        out.row(r) /= total;
    }
    return out;
}

/// Relative discrepancy ‖a − b‖ / max(‖a‖ + ‖b‖, floor), the usual
/// gradient-check metric.
template <typename DA, typename DB>
double relative_error(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b,
                      double floor = 1e-12) {
    const double num = (a - b).norm();
    const double den = std::max(a.norm() + b.norm(), floor);
    return num / den;
}

/// Central finite-difference gradient of `loss` with respect to the entries
/// of `param`, which is perturbed in place and restored.
template <typename Derived, typename Loss>
MatrixX<typename Derived::Scalar> numeric_gradient(Eigen::MatrixBase<Derived>& param, Loss&& loss,
                                                   double step = 1e-5) {
    using Scalar = typename Derived::Scalar;
    MatrixX<Scalar> g(param.rows(), param.cols());
    for (Eigen::Index c = 0; c < param.cols(); ++c) {
        for (Eigen::Index r = 0; r < param.rows(); ++r) {
            const Scalar saved = param(r, c);
            param(r, c) = saved + step;
            const Scalar up = loss();
            param(r, c) = saved - step;
            const Scalar down = loss();
            param(r, c) = saved;
            g(r, c) = (up - down) / (Scalar(2) * step);
        }
    }
    return g;
}

}  // namespace cbd
