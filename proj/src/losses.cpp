#include "dash/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dash {

namespace {

void check_labels(std::span<const int> labels, Eigen::Index rows, Eigen::Index classes) {
    if (static_cast<Eigen::Index>(labels.size()) != rows || rows < 1)
        throw DimensionError("loss: " + std::to_string(labels.size()) + " labels for " +
                             std::to_string(rows) + " rows");
    for (std::size_t n = 0; n < labels.size(); ++n)
        if (labels[n] < 0 || labels[n] >= classes)
            throw IndexError("loss: label " + std::to_string(labels[n]) + " at row " +
                             std::to_string(n) + " outside [0, " + std::to_string(classes) + ")");
}

void check_members(std::span<const Tensor> logits, std::size_t i) {
    if (logits.empty()) throw StateError("loss: no member logits");
    if (i >= logits.size())
        throw IndexError("loss: member index " + std::to_string(i) + " out of range");
    for (const auto& h : logits)
        if (h.rows() != logits.front().rows() || h.cols() != logits.front().cols())
            throw DimensionError("loss: member logits " + shape_string(h) + " vs " +
                                 shape_string(logits.front()));
}

void check_alpha(double alpha) {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw ParameterError("label smoothing alpha must be in [0, 1)");
}

// Smoothed target weight of class c for label y.
inline double target_weight(int c, int y, double alpha, double classes) {
    return (c == y ? 1.0 - alpha : 0.0) + alpha / classes;
}

// Logits of row n with column y removed.
Vector drop_column(const Tensor& logits, Eigen::Index n, int y) {
    const Eigen::Index M = logits.cols();
    Vector out(M - 1);
    for (Eigen::Index c = 0, k = 0; c < M; ++c)
        if (c != y) out(k++) = logits(n, c);
    return out;
}

// log softmax of a vector at temperature tau.
Vector log_softmax_vec(const Vector& z, double tau) {
    const Vector shifted = (z.array() - z.maxCoeff()) / tau;
    const double lse = std::log(shifted.array().exp().sum());
    return shifted.array() - lse;
}

LogitLoss finish(LogitLoss loss, const std::string& what) {
    if (!std::isfinite(loss.value)) throw NumericError(what + ": non-finite loss value");
    require_finite(loss.logits_grad, what + ": gradient");
    return loss;
}

} // namespace

LogitLoss smoothed_ce(const Tensor& logits, std::span<const int> labels, double alpha) {
    check_alpha(alpha);
    check_labels(labels, logits.rows(), logits.cols());
    const Eigen::Index b = logits.rows();
    const double M = static_cast<double>(logits.cols());
    const Tensor logp = log_softmax(logits);
    LogitLoss out;
    out.logits_grad = logp.array().exp().matrix();
    for (Eigen::Index n = 0; n < b; ++n) {
        const int y = labels[n];
        for (Eigen::Index c = 0; c < logits.cols(); ++c) {
            const double q = target_weight(static_cast<int>(c), y, alpha, M);
            out.value -= q * logp(n, c);
            out.logits_grad(n, c) -= q;
        }
    }
    out.value /= static_cast<double>(b);
    out.logits_grad /= static_cast<double>(b);
    return finish(std::move(out), "smoothed_ce");
}

LogitLoss mixture_smoothed_ce(std::span<const Tensor> logits, std::span<const int> labels,
                              double alpha, std::size_t i) {
    check_alpha(alpha);
    check_members(logits, i);
    const Tensor& hi = logits[i];
    check_labels(labels, hi.rows(), hi.cols());
    const Eigen::Index b = hi.rows();
    const Eigen::Index M = hi.cols();
    const double m = static_cast<double>(logits.size());

    const Tensor pi = softmax(hi);
    Tensor mixture = Tensor::Zero(b, M);
    for (std::size_t j = 0; j < logits.size(); ++j) mixture += (j == i) ? pi : softmax(logits[j]);
    mixture /= m;

    LogitLoss out;
    out.logits_grad.resize(b, M);
    Vector u(M);
    for (Eigen::Index n = 0; n < b; ++n) {
        const int y = labels[n];
        for (Eigen::Index c = 0; c < M; ++c) {
            const double q = target_weight(static_cast<int>(c), y, alpha, static_cast<double>(M));
            const double pbar = std::max(mixture(n, c), 1e-300);
            out.value -= q * std::log(pbar);
            u(c) = -q / (static_cast<double>(b) * pbar);
        }
        const double pu = pi.row(n).dot(u.transpose());
        out.logits_grad.row(n) = (pi.row(n).array() * (u.transpose().array() - pu)) / m;
    }
    out.value /= static_cast<double>(b);
    return finish(std::move(out), "mixture_smoothed_ce");
}

LogitLoss diversity_kl(std::span<const Tensor> logits, std::span<const int> labels, double tau,
                       std::size_t i) {
    if (!(tau > 0.0)) throw ParameterError("diversity loss: tau must be positive");
    check_members(logits, i);
    const Tensor& hi = logits[i];
    if (hi.cols() < 2)
        throw ParameterError("diversity loss: unsupported configuration, needs at least 2 classes");
    check_labels(labels, hi.rows(), hi.cols());
    const Eigen::Index b = hi.rows();
    const Eigen::Index M = hi.cols();

    LogitLoss out;
    out.logits_grad = Tensor::Zero(b, M);
    for (Eigen::Index n = 0; n < b; ++n) {
        const int y = labels[n];
        const Vector log_si = log_softmax_vec(drop_column(hi, n, y), tau);
        const Vector si = log_si.array().exp();
        Vector grad_z = Vector::Zero(M - 1);
        for (std::size_t j = 0; j < logits.size(); ++j) {
            if (j == i) continue;
            const Vector log_sj = log_softmax_vec(drop_column(logits[j], n, y), tau);
            const Vector diff = log_si - log_sj;
            const double kl = si.dot(diff);
            out.value += kl;
            // d KL(s || t) / dz_k = s_k (log s_k - log t_k - KL), z = h / tau.
            grad_z.array() += si.array() * (diff.array() - kl);
        }
        for (Eigen::Index c = 0, k = 0; c < M; ++c)
            if (c != y) out.logits_grad(n, c) = grad_z(k++) / tau;
    }
    out.value /= static_cast<double>(b);
    out.logits_grad /= static_cast<double>(b);
    return finish(std::move(out), "diversity_kl");
}

LogitLoss tilde_loss(std::span<const Tensor> logits, std::span<const int> labels, double alpha,
                     double gamma, std::size_t i) {
    if (!(gamma >= 0.0)) throw ParameterError("gamma must be nonnegative");
    check_members(logits, i);
    LogitLoss out = smoothed_ce(logits[i], labels, alpha);
    if (gamma != 0.0) {
        const LogitLoss ens = mixture_smoothed_ce(logits, labels, alpha, i);
        out.value += gamma * ens.value;
        out.logits_grad += gamma * ens.logits_grad;
    }
    return out;
}

namespace {

struct MemberPass {
    std::vector<Tensor> logits;
    ForwardCache cache;
};

MemberPass forward_all(const Ensemble& ens, const Batch& batch, std::size_t i) {
    if (ens.empty()) throw StateError("loss: empty ensemble");
    if (i >= ens.size()) throw IndexError("loss: member index " + std::to_string(i) + " out of range");
    check_batch(batch, ens.classes());
    MemberPass pass;
    pass.logits.reserve(ens.size());
    for (std::size_t j = 0; j < ens.size(); ++j) {
        if (j == i) {
            pass.cache = ens.member(j).forward(batch.inputs);
            pass.logits.push_back(pass.cache.logits());
        } else {
            pass.logits.push_back(ens.member(j).logits(batch.inputs));
        }
    }
    return pass;
}

LossValue to_param_loss(const MlpModel& model, const ForwardCache& cache, const LogitLoss& loss) {
    return LossValue{loss.value, model.backward(cache, loss.logits_grad)};
}

} // namespace

LossValue ce_label_smoothing(const MlpModel& model, const Batch& batch, double alpha) {
    check_batch(batch, model.output_dim());
    const ForwardCache cache = model.forward(batch.inputs);
    return to_param_loss(model, cache, smoothed_ce(cache.logits(), batch.labels, alpha));
}

LossValue ensemble_loss(const Ensemble& ens, const Batch& batch, double alpha, std::size_t i) {
    const MemberPass pass = forward_all(ens, batch, i);
    return to_param_loss(ens.member(i), pass.cache,
                         mixture_smoothed_ce(pass.logits, batch.labels, alpha, i));
}

LossValue diversity_loss(const Ensemble& ens, const Batch& batch, double tau, std::size_t i) {
    const MemberPass pass = forward_all(ens, batch, i);
    return to_param_loss(ens.member(i), pass.cache, diversity_kl(pass.logits, batch.labels, tau, i));
}

LossValue ensemble_coupled_loss(const Ensemble& ens, const Batch& batch, double alpha, double gamma,
                                std::size_t i) {
    const MemberPass pass = forward_all(ens, batch, i);
    return to_param_loss(ens.member(i), pass.cache,
                         tilde_loss(pass.logits, batch.labels, alpha, gamma, i));
}

LossValue combined_loss(const Ensemble& ens, const Batch& batch, double alpha, double gamma,
                        double gamma_c, double tau, std::size_t i) {
    if (!(gamma_c >= 0.0)) throw ParameterError("gamma_c must be nonnegative");
    const MemberPass pass = forward_all(ens, batch, i);
    LogitLoss loss = tilde_loss(pass.logits, batch.labels, alpha, gamma, i);
    if (gamma_c != 0.0) {
        const LogitLoss div = diversity_kl(pass.logits, batch.labels, tau, i);
        loss.value += gamma_c * div.value;
        loss.logits_grad += gamma_c * div.logits_grad;
    }
    return to_param_loss(ens.member(i), pass.cache, loss);
}

} // namespace dash
