#include "dash/experiments.hpp"

#include "dash/adversarial.hpp"
#include "dash/io.hpp"
#include "dash/losses.hpp"

#include <cmath>
#include <sstream>

namespace dash {

MetricsReport train_and_evaluate(const TrainConfig& config, const Dataset& train, const Dataset& val,
                                 const Dataset& test, const EvalOptions& options) {
    TrainResult result = dash::train(make_ensemble(config, static_cast<int>(train.dim()), train.classes),
                                     train, config);
    return evaluate(result.ensemble, test, val, options);
}

// ---- gamma sweep -------------------------------------------------------

GammaSweepResult gamma_sweep(const TrainConfig& base, const Dataset& train, const Dataset& val,
                             const Dataset& test, const std::vector<double>& gammas,
                             const std::vector<std::uint64_t>& seeds, const EvalOptions& options) {
    if (gammas.empty()) throw ParameterError("gamma_sweep: empty gamma grid");
    if (seeds.empty()) throw ParameterError("gamma_sweep: no seeds");
    GammaSweepResult out;
    double best_accuracy = -1.0;
    for (double gamma : gammas) {
        GammaSweepRow mean;
        mean.gamma = gamma;
        for (std::uint64_t seed : seeds) {
            TrainConfig cfg = base;
            cfg.gamma = gamma;
            cfg.seed = seed;
            GammaSweepRow row{gamma, seed, train_and_evaluate(cfg, train, val, test, options)};
            mean.metrics.accuracy += row.metrics.accuracy;
            mean.metrics.nll += row.metrics.nll;
            mean.metrics.brier += row.metrics.brier;
            mean.metrics.ece += row.metrics.ece;
            out.per_seed.push_back(std::move(row));
        }
        const double s = static_cast<double>(seeds.size());
        mean.metrics.accuracy /= s;
        mean.metrics.nll /= s;
        mean.metrics.brier /= s;
        mean.metrics.ece /= s;
        mean.metrics.n_eval = static_cast<long>(test.size());
        if (mean.metrics.accuracy > best_accuracy) {
            best_accuracy = mean.metrics.accuracy;
            out.best_gamma = gamma;
        }
        out.mean.push_back(mean);
    }
    return out;
}

namespace {

void gamma_columns(std::ostringstream& out, const MetricsReport& m) {
    out << format_number(m.accuracy) << ',' << format_number(m.nll) << ',' << format_number(m.brier) << ','
        << format_number(m.ece) << '\n';
}

} // namespace

std::string gamma_sweep_csv(const GammaSweepResult& r) {
    std::ostringstream out;
    out << "gamma,accuracy,nll,brier,ece\n";
    for (const auto& row : r.mean) {
        out << format_number(row.gamma) << ',';
        gamma_columns(out, row.metrics);
    }
    return out.str();
}

std::string gamma_sweep_seeds_csv(const GammaSweepResult& r) {
    std::ostringstream out;
    out << "gamma,seed,accuracy,nll,brier,ece\n";
    for (const auto& row : r.per_seed) {
        out << format_number(row.gamma) << ',' << row.seed << ',';
        gamma_columns(out, row.metrics);
    }
    return out.str();
}

// ---- ablation ----------------------------------------------------------

std::string_view to_string(AblationVariant v) {
    switch (v) {
    case AblationVariant::sgd: return "sgd";
    case AblationVariant::dash_flat: return "dash_f";
    case AblationVariant::dash: return "dash";
    }
    return "?";
}

TrainConfig ablation_config(const TrainConfig& base, AblationVariant v) {
    TrainConfig cfg = base;
    const bool dash_kind = base.optimizer == OptimizerKind::dash_two_direction ||
                           base.optimizer == OptimizerKind::dash_combined;
    if (!dash_kind) cfg.optimizer = OptimizerKind::dash_two_direction;
    switch (v) {
    case AblationVariant::sgd:
        cfg.optimizer = OptimizerKind::sgd;
        cfg.rho1 = 0.0;
        cfg.rho2 = 0.0;
        break;
    case AblationVariant::dash_flat:
        cfg.rho2 = 0.0;
        cfg.gamma_c_mode = GammaCMode::fixed;
        cfg.gamma_c = 0.0;
        break;
    case AblationVariant::dash:
        break;
    }
    return cfg;
}

AblationResult ablation(const TrainConfig& base, const Dataset& train, const Dataset& test,
                        const std::vector<std::uint64_t>& seeds) {
    if (seeds.empty()) throw ParameterError("ablation: no seeds");
    constexpr AblationVariant variants[] = {AblationVariant::sgd, AblationVariant::dash_flat,
                                            AblationVariant::dash};
    AblationResult out;
    for (AblationVariant v : variants) {
        const TrainConfig cfg = ablation_config(base, v);
        AblationRow mean{v, 0, cfg.rho1, cfg.rho2};
        out.mean.push_back(mean);
    }
    for (std::uint64_t seed : seeds) {
        for (std::size_t k = 0; k < 3; ++k) {
            TrainConfig cfg = ablation_config(base, variants[k]);
            cfg.seed = seed;
            TrainResult result =
                dash::train(make_ensemble(cfg, static_cast<int>(train.dim()), train.classes), train, cfg);
            const MetricsReport m = evaluate_uncalibrated(result.ensemble, test);
            AblationRow row{variants[k], seed, cfg.rho1, cfg.rho2, m.accuracy, m.log_det,
                            m.disagreement, m.avg_member_accuracy, result.report.mean_congruence};
            AblationRow& mean = out.mean[k];
            mean.accuracy += row.accuracy;
            mean.ld += row.ld;
            mean.d += row.d;
            mean.avg_accuracy += row.avg_accuracy;
            mean.congruence += row.congruence;
            out.per_seed.push_back(row);
        }
    }
    const double s = static_cast<double>(seeds.size());
    for (auto& mean : out.mean) {
        mean.accuracy /= s;
        mean.ld /= s;
        mean.d /= s;
        mean.avg_accuracy /= s;
        mean.congruence /= s;
    }
    return out;
}

std::string ablation_csv(const AblationResult& r) {
    std::ostringstream out;
    out << "variant,seed,rho1,rho2,accuracy,ld,d,avg_accuracy\n";
    auto emit = [&](const AblationRow& row, const std::string& seed) {
        out << to_string(row.variant) << ',' << seed << ',' << format_number(row.rho1) << ','
            << format_number(row.rho2) << ',' << format_number(row.accuracy) << ',' << format_number(row.ld)
            << ',' << format_number(row.d) << ',' << format_number(row.avg_accuracy) << '\n';
    };
    for (const auto& row : r.per_seed) emit(row, std::to_string(row.seed));
    for (const auto& row : r.mean) emit(row, "mean");
    return out.str();
}

// ---- sharp losses ------------------------------------------------------

namespace {

ParamVector random_direction(Rng& rng, Eigen::Index k) {
    ParamVector v(k);
    for (;;) {
        for (Eigen::Index j = 0; j < k; ++j) v(j) = rng.normal();
        const double n = v.norm();
        if (n > kGradEps) return v / n;
    }
}

double member_ce(const MlpModel& model, const Dataset& data) {
    return smoothed_ce(model.logits(data.inputs), data.labels, 0.0).value;
}

} // namespace

SharpLossMeasurement measure_sharp_losses(const Ensemble& ens, const Dataset& data, double rho,
                                          int samples, std::uint64_t seed) {
    if (!(rho >= 0)) throw ParameterError("sharp loss: rho must be nonnegative");
    if (samples < 0) throw ParameterError("sharp loss: samples must be nonnegative");
    data.validate();
    SharpLossMeasurement out;
    const std::size_t m = ens.size();
    for (std::size_t i = 0; i < m; ++i) {
        const MlpModel& base = ens.member(i);
        const ParamVector theta = base.flatten();
        out.k = std::max<long>(out.k, static_cast<long>(theta.size()));
        out.member_norms.push_back(theta.norm());
        const double loss = member_ce(base, data);
        out.member_losses.push_back(loss);
        double worst = loss;
        Rng rng = Rng::derive(seed, i);
        MlpModel probe = base;
        for (int s = 0; s < samples; ++s) {
            probe.unflatten(theta + rho * random_direction(rng, theta.size()));
            worst = std::max(worst, member_ce(probe, data));
        }
        out.sharp_member_losses.push_back(worst);
    }

    out.ensemble_loss = mixture_cross_entropy(ens, data.inputs, data.labels);
    double worst = out.ensemble_loss;
    Eigen::Index total = 0;
    std::vector<ParamVector> thetas;
    for (const auto& model : ens.members()) {
        thetas.push_back(model.flatten());
        total += thetas.back().size();
    }
    Rng rng = Rng::derive(seed, m);
    const double radius = std::sqrt(static_cast<double>(m)) * rho;
    Ensemble probe = ens;
    for (int s = 0; s < samples; ++s) {
        const ParamVector dir = random_direction(rng, total);
        Eigen::Index offset = 0;
        for (std::size_t i = 0; i < m; ++i) {
            const Eigen::Index k = thetas[i].size();
            probe.member(i).unflatten(thetas[i] + radius * dir.segment(offset, k));
            offset += k;
        }
        worst = std::max(worst, mixture_cross_entropy(probe, data.inputs, data.labels));
    }
    out.sharp_ensemble_loss = worst;
    return out;
}

BoundInputs bound_inputs_from_measurement(BoundInputs in, const SharpLossMeasurement& m, long N) {
    in.m = static_cast<int>(m.member_norms.size());
    in.k = m.k;
    in.N = N;
    in.member_norms = m.member_norms;
    in.sharp_member_losses = m.sharp_member_losses;
    in.sharp_ensemble_loss = m.sharp_ensemble_loss;
    return in;
}

} // namespace dash
