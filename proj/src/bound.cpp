#include "dash/bound.hpp"

#include "dash/errors.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace dash {

void BoundInputs::validate() const {
    if (m < 1) throw ParameterError("bound: m must be at least 1");
    if (k < 1) throw ParameterError("bound: k must be at least 1");
    if (N < 1) throw ParameterError("bound: N must be at least 1");
    if (!(rho > 0)) throw ParameterError("bound: rho must be positive");
    if (!(delta > 0 && delta < 1)) throw ParameterError("bound: delta must lie in (0, 1)");
    if (!(gamma >= 0 && gamma <= 1)) throw ParameterError("bound: gamma must lie in [0, 1]");
    if (!(L >= 0)) throw ParameterError("bound: L must be nonnegative");
    if (member_norms.size() != static_cast<std::size_t>(m))
        throw ParameterError("bound: member_norms needs " + std::to_string(m) + " entries");
    if (sharp_member_losses.size() != static_cast<std::size_t>(m))
        throw ParameterError("bound: sharp_member_losses needs " + std::to_string(m) + " entries");
    for (double v : member_norms)
        if (!(v >= 0) || !std::isfinite(v)) throw ParameterError("bound: norms must be finite and nonnegative");
}

BoundBreakdown evaluate_bound(const BoundInputs& in) {
    in.validate();
    const double m = in.m;
    const double k = static_cast<double>(in.k);
    const double N = static_cast<double>(in.N);
    const double rho2 = in.rho * in.rho;
    const double log_n = std::log(N);

    BoundBreakdown out;
    out.sharp_term_ensemble = in.gamma * in.sharp_ensemble_loss;
    out.sharp_term_members =
        (1.0 - in.gamma) / m *
        std::accumulate(in.sharp_member_losses.begin(), in.sharp_member_losses.end(), 0.0);
    out.prefactor = in.C * in.L / std::sqrt(N);
    out.complexity_log_term = m * std::sqrt(std::log(m * (N + k) / in.delta));

    const double member_inflation = std::pow(1.0 + std::sqrt(log_n) / k, 2);
    double norm_sq_sum = 0.0;
    out.member_kl_terms.reserve(in.member_norms.size());
    for (double norm : in.member_norms) {
        const double sq = norm * norm;
        norm_sq_sum += sq;
        out.member_kl_terms.push_back(std::sqrt(k * std::log1p(sq / rho2 * member_inflation)));
    }
    const double joint_inflation = std::pow(1.0 + std::sqrt(log_n / (m * k)), 2);
    out.ensemble_kl_term = std::sqrt(k * m * std::log1p(norm_sq_sum / (m * rho2) * joint_inflation));

    out.complexity = out.complexity_log_term +
                     std::accumulate(out.member_kl_terms.begin(), out.member_kl_terms.end(), 0.0) +
                     out.ensemble_kl_term + in.O1;
    out.total = out.sharp_term_ensemble + out.sharp_term_members + out.prefactor * out.complexity;
    return out;
}

double sigma_from_rho(double rho, long k, double N) {
    if (!(rho > 0)) throw ParameterError("sigma_from_rho: rho must be positive");
    if (k < 1) throw ParameterError("sigma_from_rho: k must be at least 1");
    if (!(N >= 2)) throw ParameterError("sigma_from_rho: N must be at least 2");
    return rho / (std::sqrt(static_cast<double>(k)) + std::sqrt(std::log(N)));
}

double gaussian_kl(double sigma_q, double sigma_p, double mean_norm, long k) {
    if (!(sigma_q > 0) || !(sigma_p > 0))
        throw ParameterError("gaussian_kl: standard deviations must be positive");
    if (k < 1) throw ParameterError("gaussian_kl: k must be at least 1");
    const double kk = static_cast<double>(k);
    const double vq = sigma_q * sigma_q;
    const double vp = sigma_p * sigma_p;
    return 0.5 * ((kk * vq + mean_norm * mean_norm) / vp - kk + kk * std::log(vp / vq));
}

} // namespace dash
