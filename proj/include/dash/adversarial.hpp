#pragma once

#include "dash/model.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace dash {

struct Dataset;

struct AttackConfig {
    double epsilon = 0.0;   // l-infinity budget
    double step_size = 1.0 / 255.0;
    int steps = 10;
    bool random_start = false;
    /// Return, per sample, the iterate with the highest loss seen (the start
    /// point included) instead of the last iterate.
    bool keep_best = true;
    std::uint64_t seed = 0;
    /// Optional data-domain box applied after projection.
    std::optional<Vector> lower;
    std::optional<Vector> upper;

    void validate() const;
};

/// Projected gradient ascent on the mixture cross-entropy -log f_ens(x)_y:
///     x <- Proj_eps(x + step_size sign(grad_x)),
/// starting at x (or x + U[-eps, eps] with random_start, drawn from
/// Rng::derive(seed, row)). Every coordinate of the result differs from the
/// input by at most epsilon, exactly in floating point.
Tensor pgd_attack(const Ensemble& ens, const Batch& batch, const AttackConfig& config);

struct RobustPoint {
    double epsilon = 0.0;
    double accuracy = 0.0;
};

/// Ensemble accuracy under pgd_attack for each epsilon (ascending). The step
/// size is min(base.step_size, 2 epsilon); epsilon = 0 gives clean accuracy.
std::vector<RobustPoint> robust_accuracy_curve(const Ensemble& ens, const Dataset& data,
                                               const std::vector<double>& epsilons,
                                               const AttackConfig& base);

/// Mean unsmoothed cross-entropy of the ensemble mixture.
double mixture_cross_entropy(const Ensemble& ens, const Tensor& inputs, const std::vector<int>& labels);

} // namespace dash
