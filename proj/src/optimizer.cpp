#include "dash/optimizer.hpp"

#include "dash/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dash {

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::array<std::pair<std::string_view, Enum>, N>& table,
                const char* what) {
    for (const auto& [name, value] : table)
        if (name == s) return value;
    throw ParameterError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

constexpr std::array<std::pair<std::string_view, OptimizerKind>, 5> kOptimizers{{
    {"sgd", OptimizerKind::sgd},
    {"sam", OptimizerKind::sam},
    {"asam", OptimizerKind::asam},
    {"dash_two_direction", OptimizerKind::dash_two_direction},
    {"dash_combined", OptimizerKind::dash_combined},
}};

} // namespace

std::string_view to_string(OptimizerKind k) {
    for (const auto& [name, value] : kOptimizers)
        if (value == k) return name;
    return "?";
}
std::string_view to_string(UpdateOrder u) {
    return u == UpdateOrder::sequential ? "sequential" : "snapshot";
}
std::string_view to_string(GammaCMode g) { return g == GammaCMode::fixed ? "fixed" : "adaptive"; }
std::string_view to_string(DescentLoss d) { return d == DescentLoss::tilde ? "tilde" : "plain"; }

OptimizerKind optimizer_from_string(std::string_view s) {
    return parse_enum(s, kOptimizers, "optimizer");
}
UpdateOrder update_order_from_string(std::string_view s) {
    return parse_enum(s,
                      std::array<std::pair<std::string_view, UpdateOrder>, 2>{
                          {{"sequential", UpdateOrder::sequential}, {"snapshot", UpdateOrder::snapshot}}},
                      "update_order");
}
GammaCMode gamma_c_mode_from_string(std::string_view s) {
    return parse_enum(s,
                      std::array<std::pair<std::string_view, GammaCMode>, 2>{
                          {{"fixed", GammaCMode::fixed}, {"adaptive", GammaCMode::adaptive}}},
                      "gamma_c_mode");
}
DescentLoss descent_loss_from_string(std::string_view s) {
    return parse_enum(s,
                      std::array<std::pair<std::string_view, DescentLoss>, 2>{
                          {{"tilde", DescentLoss::tilde}, {"plain", DescentLoss::plain}}},
                      "descent_loss");
}

void TrainConfig::validate() const {
    auto require = [](bool ok, const char* field, const char* what) {
        if (!ok) throw ConfigError(field, what);
    };
    require(std::isfinite(rho1) && rho1 >= 0, "rho1", "must be a nonnegative real");
    require(std::isfinite(rho2) && rho2 >= 0, "rho2", "must be a nonnegative real");
    require(gamma >= 0 && gamma <= 1, "gamma", "must lie in [0, 1]");
    require(std::isfinite(gamma_c) && gamma_c >= 0, "gamma_c", "must be a nonnegative real");
    require(std::isfinite(tau) && tau > 0, "tau", "must be positive");
    require(alpha >= 0 && alpha < 1, "alpha", "must lie in [0, 1)");
    require(std::isfinite(eta) && eta > 0, "eta", "must be positive");
    require(momentum >= 0 && momentum < 1, "momentum", "must lie in [0, 1)");
    require(std::isfinite(weight_decay) && weight_decay >= 0, "weight_decay", "must be nonnegative");
    require(epochs >= 1, "epochs", "must be a positive integer");
    require(batch_size >= 1, "batch_size", "must be a positive integer");
    require(members >= 2, "members", "an ensemble needs at least 2 members");
    require(hidden.size() == static_cast<std::size_t>(members), "hidden",
            "needs one layer list per member");
    for (const auto& layers : hidden)
        for (int w : layers) require(w >= 1, "hidden", "layer widths must be positive");
}

ParamVector sgd_step(const ParamVector& param, const ParamVector& grad, double eta, double momentum,
                     ParamVector& velocity, double weight_decay) {
    if (grad.size() != param.size())
        throw DimensionError("sgd_step: gradient length " + std::to_string(grad.size()) +
                             " vs parameters " + std::to_string(param.size()));
    if (velocity.size() == 0) velocity = ParamVector::Zero(param.size());
    if (velocity.size() != param.size()) throw DimensionError("sgd_step: momentum state length");
    velocity = momentum * velocity + grad + weight_decay * param;
    return param - eta * velocity;
}

ParamVector sam_perturb(const ParamVector& param, const ParamVector& grad, double rho) {
    if (!(rho >= 0)) throw ParameterError("sam_perturb: rho must be nonnegative");
    if (grad.size() != param.size()) throw DimensionError("sam_perturb: gradient length");
    const double norm = grad.norm();
    if (norm <= kGradEps || rho == 0.0) return param;
    return param + (rho / norm) * grad;
}

ParamVector asam_perturb(const ParamVector& param, const ParamVector& grad, double rho) {
    if (!(rho >= 0)) throw ParameterError("asam_perturb: rho must be nonnegative");
    if (grad.size() != param.size()) throw DimensionError("asam_perturb: gradient length");
    const Vector scale = param.cwiseAbs();
    const Vector scaled = scale.cwiseProduct(grad);
    const double norm = scaled.norm();
    if (norm <= kGradEps || rho == 0.0) return param;
    return param + (rho / norm) * scale.cwiseProduct(scaled);
}

ParamVector two_direction_perturb(const ParamVector& param, const ParamVector& g_tilde,
                                  const ParamVector& g_div, double rho1, double rho2) {
    if (!(rho1 >= 0 && rho2 >= 0)) throw ParameterError("two_direction_perturb: radii must be nonnegative");
    if (g_tilde.size() != param.size() || g_div.size() != param.size())
        throw DimensionError("two_direction_perturb: gradient length");
    ParamVector out = param;
    const double n1 = g_tilde.norm();
    const double n2 = g_div.norm();
    if (n1 > kGradEps && rho1 != 0.0) out += (rho1 / n1) * g_tilde;
    if (n2 > kGradEps && rho2 != 0.0) out += (rho2 / n2) * g_div;
    return out;
}

namespace {

struct MemberGradients {
    ForwardCache cache;
    LogitLoss tilde;
    std::optional<LogitLoss> div;
    ParamVector g_tilde;
    ParamVector g_div;
};

// Gradients of L~ and (when m >= 2) L^div for member i at its current
// parameters. `logits[i]` is overwritten with the fresh forward result.
MemberGradients member_gradients(const MlpModel& model, const Batch& batch,
                                 std::vector<Tensor>& logits, const TrainConfig& cfg, std::size_t i,
                                 bool want_div) {
    MemberGradients out;
    out.cache = model.forward(batch.inputs);
    logits[i] = out.cache.logits();
    out.tilde = tilde_loss(logits, batch.labels, cfg.alpha, cfg.gamma, i);
    out.g_tilde = model.backward(out.cache, out.tilde.logits_grad);
    if (want_div && logits.size() >= 2) {
        out.div = diversity_kl(logits, batch.labels, cfg.tau, i);
        out.g_div = model.backward(out.cache, out.div->logits_grad);
    } else {
        out.g_div = ParamVector::Zero(out.g_tilde.size());
    }
    return out;
}

void require_members(const Ensemble& ens, std::size_t i, const char* what) {
    if (ens.size() < 2) throw StateError(std::string(what) + ": needs at least 2 members");
    if (i >= ens.size()) throw IndexError(std::string(what) + ": member index out of range");
}

} // namespace

ParamVector dash_perturb_two_direction(const Ensemble& ens, const Batch& batch,
                                       const TrainConfig& config, std::size_t i) {
    require_members(ens, i, "dash_perturb_two_direction");
    check_batch(batch, ens.classes());
    auto logits = ens.member_logits(batch.inputs);
    const MlpModel& model = ens.member(i);
    const MemberGradients g = member_gradients(model, batch, logits, config, i, true);
    return two_direction_perturb(model.flatten(), g.g_tilde, g.g_div, config.rho1, config.rho2);
}

ParamVector dash_perturb_combined(const Ensemble& ens, const Batch& batch, const TrainConfig& config,
                                  double gamma_c, std::size_t i) {
    require_members(ens, i, "dash_perturb_combined");
    const LossValue lc =
        combined_loss(ens, batch, config.alpha, config.gamma, gamma_c, config.tau, i);
    return sam_perturb(ens.member(i).flatten(), lc.gradient, config.rho1);
}

double resolve_gamma_c(const Ensemble& ens, const Batch& batch, const TrainConfig& config) {
    if (config.gamma_c_mode == GammaCMode::fixed) return config.gamma_c;
    if (ens.size() < 2) throw StateError("resolve_gamma_c: needs at least 2 members");
    check_batch(batch, ens.classes());
    auto logits = ens.member_logits(batch.inputs);
    double total = 0.0;
    for (std::size_t i = 0; i < ens.size(); ++i) {
        const MemberGradients g = member_gradients(ens.member(i), batch, logits, config, i, true);
        total += g.g_tilde.norm() / std::max(g.g_div.norm(), kGradEps);
    }
    return std::min(total / static_cast<double>(ens.size()), kGammaCCap);
}

Ensemble make_ensemble(const TrainConfig& config, int input_dim, int classes) {
    return Ensemble::create(input_dim, classes, config.hidden, config.activation, config.seed);
}

EnsembleTrainer::EnsembleTrainer(Ensemble ensemble, TrainConfig config)
    : ensemble_(std::move(ensemble)), config_(std::move(config)),
      velocity_(ensemble_.size()), gamma_c_(config_.gamma_c) {
    if (ensemble_.empty()) throw StateError("EnsembleTrainer: empty ensemble");
}

void EnsembleTrainer::begin_epoch(const Batch& first_batch) {
    if (config_.optimizer == OptimizerKind::dash_combined &&
        config_.gamma_c_mode == GammaCMode::adaptive)
        gamma_c_ = resolve_gamma_c(ensemble_, first_batch, config_);
}

EnsembleTrainer::MemberUpdate EnsembleTrainer::update_member(const Batch& batch,
                                                             std::vector<Tensor>& logits,
                                                             std::size_t i) {
    const MlpModel& model = ensemble_.member(i);
    const bool dash = config_.optimizer == OptimizerKind::dash_two_direction ||
                      config_.optimizer == OptimizerKind::dash_combined;
    const MemberGradients g =
        member_gradients(model, batch, logits, config_, i, dash || config_.diagnostics);

    MemberUpdate out;
    out.tilde = g.tilde.value;
    out.div = g.div ? g.div->value : 0.0;
    const double nt = g.g_tilde.norm();
    const double nd = g.g_div.norm();
    if (g.div && nt > kGradEps && nd > kGradEps) out.cosine = -g.g_tilde.dot(g.g_div) / (nt * nd);

    const ParamVector theta = model.flatten();
    ParamVector theta_a;
    switch (config_.optimizer) {
    case OptimizerKind::sgd: theta_a = theta; break;
    case OptimizerKind::sam: theta_a = sam_perturb(theta, g.g_tilde, config_.rho1); break;
    case OptimizerKind::asam: theta_a = asam_perturb(theta, g.g_tilde, config_.rho1); break;
    case OptimizerKind::dash_two_direction:
        theta_a = two_direction_perturb(theta, g.g_tilde, g.g_div, config_.rho1, config_.rho2);
        break;
    case OptimizerKind::dash_combined:
        theta_a = sam_perturb(theta, g.g_tilde + gamma_c_ * g.g_div, config_.rho1);
        break;
    }

    ParamVector descent;
    const bool unperturbed = (theta_a.array() == theta.array()).all();
    if (unperturbed && config_.descent_loss == DescentLoss::tilde) {
        descent = g.g_tilde;
    } else {
        MlpModel perturbed = model;
        perturbed.unflatten(theta_a);
        const ForwardCache cache = perturbed.forward(batch.inputs);
        std::vector<Tensor> logits_a = logits;
        logits_a[i] = cache.logits();
        const LogitLoss loss = config_.descent_loss == DescentLoss::tilde
                                   ? tilde_loss(logits_a, batch.labels, config_.alpha, config_.gamma, i)
                                   : smoothed_ce(logits_a[i], batch.labels, config_.alpha);
        descent = perturbed.backward(cache, loss.logits_grad);
    }
    out.params = sgd_step(theta, descent, config_.eta, config_.momentum, velocity_[i],
                          config_.weight_decay);
    require_finite(out.params, "parameters");
    return out;
}

StepStats EnsembleTrainer::step(const Batch& batch) {
    check_batch(batch, ensemble_.classes());
    std::vector<Tensor> logits = ensemble_.member_logits(batch.inputs);
    const std::size_t m = ensemble_.size();
    StepStats stats;
    std::vector<ParamVector> pending;
    for (std::size_t i = 0; i < m; ++i) {
        MemberUpdate u;
        try {
            u = update_member(batch, logits, i);
        } catch (const NumericError& e) {
            throw NumericError("member " + std::to_string(i) + ": " + e.what());
        }
        stats.tilde_loss += u.tilde;
        stats.diversity_loss += u.div;
        if (u.cosine) {
            stats.congruence += *u.cosine;
            ++stats.congruence_count;
        }
        if (config_.update_order == UpdateOrder::sequential) {
            ensemble_.member(i).unflatten(u.params);
            logits[i] = ensemble_.member(i).logits(batch.inputs);
        } else {
            // logits[i] still holds batch-start values for the members after i.
            pending.push_back(std::move(u.params));
        }
    }
    if (config_.update_order == UpdateOrder::snapshot)
        for (std::size_t i = 0; i < m; ++i) ensemble_.member(i).unflatten(pending[i]);
    stats.tilde_loss /= static_cast<double>(m);
    stats.diversity_loss /= static_cast<double>(m);
    if (stats.congruence_count > 0) stats.congruence /= stats.congruence_count;
    return stats;
}

namespace {

struct Accuracies {
    double ensemble = 0.0;
    double member_mean = 0.0;
};

Accuracies accuracies(const Ensemble& ens, const Dataset& data) {
    const auto logits = ens.member_logits(data.inputs);
    const Eigen::VectorXi pred = argmax_rows(average_softmax(logits));
    const auto n = static_cast<double>(data.size());
    Accuracies acc;
    for (Eigen::Index r = 0; r < data.size(); ++r) acc.ensemble += pred(r) == data.labels[r];
    for (const auto& h : logits) {
        const Eigen::VectorXi p = argmax_rows(h);
        double correct = 0.0;
        for (Eigen::Index r = 0; r < data.size(); ++r) correct += p(r) == data.labels[r];
        acc.member_mean += correct / n;
    }
    acc.ensemble /= n;
    acc.member_mean /= static_cast<double>(logits.size());
    return acc;
}

} // namespace

TrainResult train(Ensemble ensemble, const Dataset& train_set, const TrainConfig& config,
                  const Dataset* test_set) {
    config.validate();
    train_set.validate();
    if (ensemble.size() < 2) throw StateError("train: needs at least 2 members");
    if (ensemble.input_dim() != train_set.dim() || ensemble.classes() < train_set.classes)
        throw DimensionError("train: ensemble shape does not match the dataset");

    EnsembleTrainer trainer(std::move(ensemble), config);
    TrainReport report;
    double congruence_sum = 0.0;
    long congruence_steps = 0;
    const Eigen::Index n = train_set.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        Rng rng = Rng::derive(config.seed ^ 0xD1B54A32D192ED03ULL, static_cast<std::uint64_t>(epoch));
        for (std::size_t k = order.size(); k > 1; --k)
            std::swap(order[k - 1], order[rng.below(k)]);

        EpochRecord rec;
        rec.epoch = epoch;
        double epoch_cong = 0.0;
        int cong_batches = 0;
        int batches = 0;
        for (Eigen::Index start = 0; start < n; start += config.batch_size, ++batches) {
            const Eigen::Index stop = std::min<Eigen::Index>(start + config.batch_size, n);
            const Batch batch = train_set.batch({order.begin() + start, order.begin() + stop});
            StepStats s;
            try {
                if (start == 0) trainer.begin_epoch(batch);
                s = trainer.step(batch);
            } catch (const NumericError& e) {
                throw NumericError("epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(batches) + ", " + e.what());
            }
            rec.train_loss += s.tilde_loss;
            rec.diversity_loss += s.diversity_loss;
            if (s.congruence_count > 0) {
                epoch_cong += s.congruence;
                ++cong_batches;
            }
        }
        rec.train_loss /= batches;
        rec.diversity_loss /= batches;
        rec.congruence = cong_batches > 0 ? epoch_cong / cong_batches : 0.0;
        congruence_sum += epoch_cong;
        congruence_steps += cong_batches;
        rec.gamma_c = trainer.gamma_c();

        const Accuracies tr = accuracies(trainer.ensemble(), train_set);
        rec.train_accuracy = tr.ensemble;
        rec.train_member_accuracy = tr.member_mean;
        if (test_set) {
            const Accuracies te = accuracies(trainer.ensemble(), *test_set);
            rec.test_accuracy = te.ensemble;
            rec.test_member_accuracy = te.member_mean;
        }
        if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.diversity_loss))
            throw NumericError("epoch " + std::to_string(epoch) + ": non-finite loss");
        report.epochs.push_back(rec);
    }
    report.mean_congruence = congruence_steps > 0 ? congruence_sum / congruence_steps : 0.0;
    return TrainResult{std::move(trainer).release(), std::move(report)};
}

} // namespace dash
