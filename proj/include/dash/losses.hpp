#pragma once

#include "dash/model.hpp"

#include <span>
#include <vector>

namespace dash {

/// Scalar loss and, for member-level losses, its parameter gradient.
struct LossValue {
    double value = 0.0;
    ParamVector gradient; // empty when not requested
};

/// Scalar loss with its gradient on one member's logits [b x M].
struct LogitLoss {
    double value = 0.0;
    Tensor logits_grad;
};

// ---------------------------------------------------------------------------
// Logit-level kernels. `logits` holds every member's logits on the same batch;
// gradients are taken w.r.t. member `i`'s logits with the others held fixed.
// ---------------------------------------------------------------------------

/// Mean over the batch of -sum_c q_c log softmax(h)_c with the smoothed target
/// q = (1 - alpha) onehot(y) + alpha / M.
LogitLoss smoothed_ce(const Tensor& logits, std::span<const int> labels, double alpha);

/// Smoothed cross-entropy of the mixture (1/m) sum_j softmax(h_j).
LogitLoss mixture_smoothed_ce(std::span<const Tensor> logits, std::span<const int> labels,
                              double alpha, std::size_t i);

/// (1/b) sum_n sum_{j != i} KL(s_i || s_j), s_k = softmax(non-target logits of k / tau).
LogitLoss diversity_kl(std::span<const Tensor> logits, std::span<const int> labels, double tau,
                       std::size_t i);

/// Member loss plus gamma times the mixture loss: L + gamma L^ens.
LogitLoss tilde_loss(std::span<const Tensor> logits, std::span<const int> labels, double alpha,
                     double gamma, std::size_t i);

// ---------------------------------------------------------------------------
// Parameter-level losses on an ensemble and batch.
// ---------------------------------------------------------------------------

LossValue ce_label_smoothing(const MlpModel& model, const Batch& batch, double alpha);

/// Smoothed CE of the ensemble mixture, differentiated w.r.t. member i only.
LossValue ensemble_loss(const Ensemble& ens, const Batch& batch, double alpha, std::size_t i);

/// Non-target KL diversity loss of member i against all others.
LossValue diversity_loss(const Ensemble& ens, const Batch& batch, double tau, std::size_t i);

/// L + gamma L^ens for member i.
LossValue ensemble_coupled_loss(const Ensemble& ens, const Batch& batch, double alpha, double gamma,
                                std::size_t i);

/// L^c = (L + gamma L^ens) + gamma_c L^div for member i.
LossValue combined_loss(const Ensemble& ens, const Batch& batch, double alpha, double gamma,
                        double gamma_c, double tau, std::size_t i);

} // namespace dash
