#include "dash/adversarial.hpp"

#include "dash/data.hpp"

#include <algorithm>
#include <cmath>

namespace dash {

void AttackConfig::validate() const {
    if (!(epsilon >= 0) || !std::isfinite(epsilon)) throw ParameterError("attack: epsilon must be nonnegative");
    if (!(step_size > 0)) throw ParameterError("attack: step_size must be positive");
    if (steps < 1) throw ParameterError("attack: steps must be at least 1");
    if (epsilon > 0 && step_size > 2 * epsilon)
        throw ParameterError("attack: step_size must not exceed 2 epsilon");
    if (lower.has_value() != upper.has_value())
        throw ParameterError("attack: domain box needs both lower and upper bounds");
}

namespace {

// Clip x_adv into [x - eps, x + eps] so that x_adv - x, evaluated in floating
// point, also lies in [-eps, eps].
double project(double x, double x_adv, double eps) {
    double v = std::clamp(x_adv, x - eps, x + eps);
    while (v - x > eps) v = std::nextafter(v, x);
    while (v - x < -eps) v = std::nextafter(v, x);
    return v;
}

Vector sample_losses(const Ensemble& ens, const Tensor& inputs, const std::vector<int>& labels) {
    const Tensor p = ensemble_predict(ens, inputs);
    Vector out(p.rows());
    for (Eigen::Index n = 0; n < p.rows(); ++n) out(n) = -std::log(std::max(p(n, labels[n]), 1e-300));
    return out;
}

} // namespace

Tensor pgd_attack(const Ensemble& ens, const Batch& batch, const AttackConfig& config) {
    config.validate();
    check_batch(batch, ens.classes());
    const Tensor& x = batch.inputs;
    if (config.lower && (config.lower->size() != x.cols() || config.upper->size() != x.cols()))
        throw DimensionError("attack: domain box width differs from input width");
    if (config.epsilon == 0.0) return x;

    const double eps = config.epsilon;
    auto finalize = [&](Tensor& adv) {
        for (Eigen::Index r = 0; r < adv.rows(); ++r)
            for (Eigen::Index c = 0; c < adv.cols(); ++c) {
                double v = project(x(r, c), adv(r, c), eps);
                if (config.lower) {
                    v = std::clamp(v, (*config.lower)(c), (*config.upper)(c));
                    v = project(x(r, c), v, eps);
                }
                adv(r, c) = v;
            }
    };

    Tensor adv = x;
    if (config.random_start) {
        for (Eigen::Index r = 0; r < adv.rows(); ++r) {
            Rng rng = Rng::derive(config.seed, static_cast<std::uint64_t>(r));
            for (Eigen::Index c = 0; c < adv.cols(); ++c) adv(r, c) += rng.uniform(-eps, eps);
        }
        finalize(adv);
    }
    Tensor best = adv;
    Vector best_loss = sample_losses(ens, adv, batch.labels);
    for (int s = 0; s < config.steps; ++s) {
        const Tensor grad = input_gradient(ens, Batch{adv, batch.labels});
        for (Eigen::Index r = 0; r < grad.rows(); ++r)
            if (!grad.row(r).allFinite())
                throw NumericError("attack: non-finite input gradient at sample " + std::to_string(r));
        adv += config.step_size * grad.array().sign().matrix();
        finalize(adv);
        if (!config.keep_best) continue;
        const Vector loss = sample_losses(ens, adv, batch.labels);
        for (Eigen::Index r = 0; r < loss.size(); ++r)
            if (loss(r) > best_loss(r)) {
                best_loss(r) = loss(r);
                best.row(r) = adv.row(r);
            }
    }
    return config.keep_best ? best : adv;
}

double mixture_cross_entropy(const Ensemble& ens, const Tensor& inputs, const std::vector<int>& labels) {
    return sample_losses(ens, inputs, labels).mean();
}

std::vector<RobustPoint> robust_accuracy_curve(const Ensemble& ens, const Dataset& data,
                                               const std::vector<double>& epsilons,
                                               const AttackConfig& base) {
    data.validate();
    if (!std::is_sorted(epsilons.begin(), epsilons.end()))
        throw ParameterError("robust_accuracy_curve: epsilons must be ascending");
    std::vector<RobustPoint> curve;
    const Batch batch = data.as_batch();
    for (double eps : epsilons) {
        AttackConfig cfg = base;
        cfg.epsilon = eps;
        if (eps > 0) cfg.step_size = std::min(base.step_size, 2 * eps);
        const Tensor adv = pgd_attack(ens, batch, cfg);
        const Eigen::VectorXi pred = argmax_rows(ensemble_predict(ens, adv));
        double correct = 0.0;
        for (Eigen::Index n = 0; n < pred.size(); ++n) correct += pred(n) == data.labels[n];
        curve.push_back({eps, correct / static_cast<double>(data.size())});
    }
    return curve;
}

} // namespace dash
