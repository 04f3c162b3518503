#pragma once

#include "dash/losses.hpp"
#include "dash/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dash {

struct Dataset;

enum class OptimizerKind { sgd, sam, asam, dash_two_direction, dash_combined };
enum class UpdateOrder { sequential, snapshot };
enum class GammaCMode { fixed, adaptive };
/// Loss whose gradient at the perturbed point drives the descent step:
/// `tilde` = L + gamma L^ens, `plain` = member smoothed CE only.
enum class DescentLoss { tilde, plain };

std::string_view to_string(OptimizerKind k);
std::string_view to_string(UpdateOrder u);
std::string_view to_string(GammaCMode g);
std::string_view to_string(DescentLoss d);
OptimizerKind optimizer_from_string(std::string_view s);
UpdateOrder update_order_from_string(std::string_view s);
GammaCMode gamma_c_mode_from_string(std::string_view s);
DescentLoss descent_loss_from_string(std::string_view s);

inline constexpr double kGammaCCap = 100.0;

struct TrainConfig {
    double rho1 = 0.05;
    double rho2 = 0.05;
    double gamma = 0.1;
    GammaCMode gamma_c_mode = GammaCMode::adaptive;
    double gamma_c = 0.0; // used when gamma_c_mode == fixed
    double tau = 0.5;
    double alpha = 0.1;
    double eta = 0.05;
    double momentum = 0.9;
    double weight_decay = 0.005;
    int epochs = 30;
    int batch_size = 64;
    std::uint64_t seed = 0;
    OptimizerKind optimizer = OptimizerKind::dash_two_direction;
    UpdateOrder update_order = UpdateOrder::sequential;
    DescentLoss descent_loss = DescentLoss::tilde;

    // Ensemble architecture.
    int members = 3;
    std::vector<std::vector<int>> hidden{{32, 32}, {32, 32}, {32, 32}};
    Activation activation = Activation::relu;

    /// Record cos(-grad L~, grad L^div) per step (one extra backward per member).
    bool diagnostics = true;

    /// Throws ConfigError naming the first invalid field.
    void validate() const;
};

/// One SGD update with momentum and L2 decay:
///     v <- momentum v + grad + weight_decay theta;  theta <- theta - eta v.
/// `velocity` is updated in place (empty means zero).
ParamVector sgd_step(const ParamVector& param, const ParamVector& grad, double eta, double momentum,
                     ParamVector& velocity, double weight_decay);

/// theta + rho g / ||g||; theta unchanged when ||g|| <= kGradEps.
ParamVector sam_perturb(const ParamVector& param, const ParamVector& grad, double rho);

/// theta + rho T^2 g / ||T g|| with T = |theta| elementwise.
ParamVector asam_perturb(const ParamVector& param, const ParamVector& grad, double rho);

/// theta + rho1 g1/||g1|| + rho2 g2/||g2||; a direction whose norm is below
/// kGradEps contributes nothing.
ParamVector two_direction_perturb(const ParamVector& param, const ParamVector& g_tilde,
                                  const ParamVector& g_div, double rho1, double rho2);

/// Agnostic perturbation of member i from separate L~ and L^div gradients.
ParamVector dash_perturb_two_direction(const Ensemble& ens, const Batch& batch,
                                       const TrainConfig& config, std::size_t i);

/// Single ascent on L^c = L~ + gamma_c L^div.
ParamVector dash_perturb_combined(const Ensemble& ens, const Batch& batch, const TrainConfig& config,
                                  double gamma_c, std::size_t i);

/// Mean over members of ||grad L~|| / max(||grad L^div||, kGradEps), capped at
/// kGammaCCap. In fixed mode returns config.gamma_c.
double resolve_gamma_c(const Ensemble& ens, const Batch& batch, const TrainConfig& config);

/// Build an ensemble with the configured architecture, seeded by config.seed.
Ensemble make_ensemble(const TrainConfig& config, int input_dim, int classes);

struct StepStats {
    double tilde_loss = 0.0;     // mean over members of L~ at theta_i
    double diversity_loss = 0.0; // mean over members of L^div at theta_i
    double congruence = 0.0;     // mean cos(-grad L~, grad L^div)
    int congruence_count = 0;
};

/// Stateful ensemble optimizer: holds the ensemble, per-member momentum and the
/// resolved gamma_c. One call to step() performs one batch update of every
/// member.
class EnsembleTrainer {
public:
    EnsembleTrainer(Ensemble ensemble, TrainConfig config);

    /// Resolve gamma_c on this batch (adaptive mode) and freeze it.
    void begin_epoch(const Batch& first_batch);

    StepStats step(const Batch& batch);

    const Ensemble& ensemble() const { return ensemble_; }
    Ensemble release() && { return std::move(ensemble_); }
    const TrainConfig& config() const { return config_; }
    double gamma_c() const { return gamma_c_; }

private:
    struct MemberUpdate {
        ParamVector params;
        double tilde = 0.0;
        double div = 0.0;
        std::optional<double> cosine;
    };

    MemberUpdate update_member(const Batch& batch, std::vector<Tensor>& logits, std::size_t i);

    Ensemble ensemble_;
    TrainConfig config_;
    std::vector<ParamVector> velocity_;
    double gamma_c_;
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double diversity_loss = 0.0;
    double train_accuracy = 0.0;
    double train_member_accuracy = 0.0;
    std::optional<double> test_accuracy;
    std::optional<double> test_member_accuracy;
    double gamma_c = 0.0;
    double congruence = 0.0;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    /// Mean of per-step congruence over all of training.
    double mean_congruence = 0.0;
    std::string checkpoint_path;
};

struct TrainResult {
    Ensemble ensemble;
    TrainReport report;
};

/// Full training loop. Batches are drawn from a per-epoch permutation seeded by
/// (config.seed, epoch); the final partial batch is kept. Non-finite values
/// abort with a NumericError naming epoch, batch and member.
TrainResult train(Ensemble ensemble, const Dataset& train_set, const TrainConfig& config,
                  const Dataset* test_set = nullptr);

} // namespace dash
