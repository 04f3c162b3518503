#pragma once

#include "dash/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>
#include <string>

namespace dash {

template <typename Scalar>
using TensorT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Dense row-major 2-D array; rows are samples.
using Tensor = TensorT<double>;
using Vector = VectorT<double>;

/// Flattened parameters of one member. Layout is owned by MlpModel.
using ParamVector = Vector;

/// Gradient-norm floor used by every normalization.
inline constexpr double kGradEps = 1e-12;

template <typename Derived>
std::string shape_string(const Eigen::EigenBase<Derived>& t) {
    std::ostringstream os;
    os << '[' << t.rows() << 'x' << t.cols() << ']';
    return os.str();
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& t) {
    return t.derived().array().isFinite().all();
}

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& t, const std::string& what) {
    if (!all_finite(t)) throw NumericError(what + ": non-finite value");
}

/// Checked matrix product.
template <typename A, typename B>
auto matmul(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b)
    -> TensorT<typename A::Scalar> {
    if (a.cols() != b.rows())
        throw DimensionError("matmul: inner extents differ, " + shape_string(a) + " x " +
                             shape_string(b));
    return a * b;
}

/// Row-wise softmax of logits / temperature, max-subtracted.
template <typename Derived>
auto softmax(const Eigen::MatrixBase<Derived>& logits, typename Derived::Scalar temperature = 1)
    -> TensorT<typename Derived::Scalar> {
    using Scalar = typename Derived::Scalar;
    if (!(temperature > 0)) throw ParameterError("softmax: temperature must be positive");
    TensorT<Scalar> out(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const Scalar mx = logits.row(r).maxCoeff();
        out.row(r) = ((logits.row(r).array() - mx) / temperature).exp().matrix();
        out.row(r) /= out.row(r).sum();
    }
    return out;
}

/// Row-wise log-softmax, same stabilization as softmax.
template <typename Derived>
auto log_softmax(const Eigen::MatrixBase<Derived>& logits, typename Derived::Scalar temperature = 1)
    -> TensorT<typename Derived::Scalar> {
    using Scalar = typename Derived::Scalar;
    if (!(temperature > 0)) throw ParameterError("log_softmax: temperature must be positive");
    TensorT<Scalar> out(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const Scalar mx = logits.row(r).maxCoeff();
        auto shifted = ((logits.row(r).array() - mx) / temperature).eval();
        const Scalar lse = std::log(shifted.exp().sum());
        out.row(r) = (shifted - lse).matrix();
    }
    return out;
}

template <typename Derived>
typename Derived::Scalar l2_norm(const Eigen::MatrixBase<Derived>& v) {
    return v.norm();
}

/// Index of the largest entry of each row; ties resolve to the lowest index.
template <typename Derived>
Eigen::VectorXi argmax_rows(const Eigen::MatrixBase<Derived>& t) {
    Eigen::VectorXi out(t.rows());
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
        Eigen::Index best = 0;
        t.row(r).maxCoeff(&best);
        out(r) = static_cast<int>(best);
    }
    return out;
}

} // namespace dash
