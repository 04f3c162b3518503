#pragma once

#include <vector>

namespace dash {

/// Inputs of the ensemble sharpness bound. Sharp losses are maxima of the
/// empirical loss over perturbation balls (radius rho per member, sqrt(m) rho
/// for the joint parameter vector); they are supplied or measured elsewhere.
///
/// The bound holds under two assumptions on the loss and parameters that this
/// evaluator cannot check: Gaussian smoothing around each theta_i (and around
/// the joint theta) must not decrease the expected loss.
struct BoundInputs {
    int m = 1;
    long k = 1;
    long N = 1;
    double rho = 0.05;
    double delta = 0.05;
    double gamma = 0.1;
    double L = 1.0;
    std::vector<double> member_norms;        // ||theta_i||, size m
    std::vector<double> sharp_member_losses; // size m
    double sharp_ensemble_loss = 0.0;
    double C = 4.0;  // stand-in for the unresolved universal constant
    double O1 = 0.0; // stand-in for the O(1) term

    void validate() const;
};

struct BoundBreakdown {
    double sharp_term_ensemble = 0.0;  // gamma * sharp_ensemble_loss
    double sharp_term_members = 0.0;   // (1 - gamma) / m * sum_i sharp_member_losses
    double prefactor = 0.0;            // C L / sqrt(N)
    double complexity_log_term = 0.0;  // m sqrt(log(m (N + k) / delta))
    std::vector<double> member_kl_terms;
    double ensemble_kl_term = 0.0;
    double complexity = 0.0;           // sum of the bracketed terms including O1
    double total = 0.0;
};

/// Evaluates
///   gamma S_ens + (1 - gamma)/m sum_i S_i
///     + C L / sqrt(N) [ m sqrt(log(m (N + k) / delta))
///                       + sum_i sqrt(k log(1 + ||theta_i||^2 / rho^2 (1 + sqrt(log N) / k)^2))
///                       + sqrt(k m log(1 + sum_i ||theta_i||^2 / (m rho^2) (1 + sqrt(log N / (m k)))^2))
///                       + O1 ].
BoundBreakdown evaluate_bound(const BoundInputs& in);

/// Posterior standard deviation rho / (sqrt(k) + sqrt(log N)); N >= 2.
double sigma_from_rho(double rho, long k, double N);

/// KL(N(theta, sigma_q^2 I_k) || N(0, sigma_p^2 I_k))
///   = 1/2 [ (k sigma_q^2 + ||theta||^2) / sigma_p^2 - k + k log(sigma_p^2 / sigma_q^2) ].
double gaussian_kl(double sigma_q, double sigma_p, double mean_norm, long k);

} // namespace dash
