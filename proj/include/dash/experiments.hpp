#pragma once

#include "dash/bound.hpp"
#include "dash/data.hpp"
#include "dash/metrics.hpp"
#include "dash/optimizer.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dash {

/// Train on `train`, evaluate on `test` with the temperature fitted on `val`.
MetricsReport train_and_evaluate(const TrainConfig& config, const Dataset& train, const Dataset& val,
                                 const Dataset& test, const EvalOptions& options = {});

// ---- gamma sweep -------------------------------------------------------

inline const std::vector<double> kDefaultGammaGrid{0.1, 0.2, 0.5, 0.8, 1.0};

struct GammaSweepRow {
    double gamma = 0.0;
    std::uint64_t seed = 0;
    MetricsReport metrics;
};

struct GammaSweepResult {
    std::vector<GammaSweepRow> per_seed; // gamma-major, then seed
    std::vector<GammaSweepRow> mean;     // one per gamma; seed unused
    double best_gamma = 0.0;             // highest mean accuracy, first on ties
};

GammaSweepResult gamma_sweep(const TrainConfig& base, const Dataset& train, const Dataset& val,
                             const Dataset& test, const std::vector<double>& gammas,
                             const std::vector<std::uint64_t>& seeds, const EvalOptions& options = {});

/// Columns gamma,accuracy,nll,brier,ece; one row per gamma (seed means).
std::string gamma_sweep_csv(const GammaSweepResult& r);
/// Same columns with a seed column, one row per (gamma, seed).
std::string gamma_sweep_seeds_csv(const GammaSweepResult& r);

// ---- ablation ----------------------------------------------------------

enum class AblationVariant { sgd, dash_flat, dash };
std::string_view to_string(AblationVariant v);

/// Config of one ablation arm. sgd ignores the radii; dash_flat keeps the
/// flat-seeking direction only (rho2 = 0, fixed gamma_c = 0); dash is the
/// base config, using dash_two_direction unless the base already names a DASH
/// optimizer.
TrainConfig ablation_config(const TrainConfig& base, AblationVariant v);

struct AblationRow {
    AblationVariant variant = AblationVariant::sgd;
    std::uint64_t seed = 0;
    double rho1 = 0.0;
    double rho2 = 0.0;
    double accuracy = 0.0;
    double ld = 0.0;
    double d = 0.0;
    double avg_accuracy = 0.0;
    double congruence = 0.0;
};

struct AblationResult {
    std::vector<AblationRow> per_seed; // seed-major, variants in enum order
    std::vector<AblationRow> mean;     // one per variant
};

AblationResult ablation(const TrainConfig& base, const Dataset& train, const Dataset& test,
                        const std::vector<std::uint64_t>& seeds);

/// Columns variant,seed,rho1,rho2,accuracy,ld,d,avg_accuracy; per-seed rows
/// then mean rows with seed "mean".
std::string ablation_csv(const AblationResult& r);

// ---- sharp losses for the bound ---------------------------------------

struct SharpLossMeasurement {
    std::vector<double> member_norms;
    std::vector<double> member_losses;        // unperturbed CE per member
    std::vector<double> sharp_member_losses;  // max over sampled perturbations
    double ensemble_loss = 0.0;
    double sharp_ensemble_loss = 0.0;
    long k = 0; // largest member parameter count
};

/// Random search for the worst loss in the perturbation balls: `samples`
/// points on the sphere of radius rho around each theta_i (member loss) and
/// of radius sqrt(m) rho around the joint parameter vector (mixture loss).
/// The unperturbed point is always included. Losses are unsmoothed CE.
SharpLossMeasurement measure_sharp_losses(const Ensemble& ens, const Dataset& data, double rho,
                                          int samples, std::uint64_t seed);

/// Fill m, k, N, norms and sharp losses of `base` from a measurement.
BoundInputs bound_inputs_from_measurement(BoundInputs base, const SharpLossMeasurement& m, long N);

} // namespace dash
