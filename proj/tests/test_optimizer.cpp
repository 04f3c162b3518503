#include "dash/data.hpp"
#include "dash/losses.hpp"
#include "dash/metrics.hpp"
#include "dash/optimizer.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace dash;
using namespace dash::test;

namespace {

ParamVector vec(std::initializer_list<double> v) {
    ParamVector p(static_cast<Eigen::Index>(v.size()));
    Eigen::Index k = 0;
    for (double x : v) p(k++) = x;
    return p;
}

TrainConfig small_config(OptimizerKind kind) {
    TrainConfig c;
    c.optimizer = kind;
    c.members = 3;
    c.hidden = {{6}, {5, 4}, {7}};
    c.activation = Activation::tanh;
    c.epochs = 1;
    c.batch_size = 16;
    return c;
}

/// Parameters of every member after each of `steps` trainer steps.
std::vector<std::vector<ParamVector>> trajectory(const TrainConfig& cfg, int steps) {
    const Ensemble ens = random_ensemble(cfg.seed + 77, 3, 4, 3);
    EnsembleTrainer trainer(ens, cfg);
    Rng rng(1234);
    std::vector<std::vector<ParamVector>> out;
    for (int s = 0; s < steps; ++s) {
        const Batch b = random_batch(rng, 12, 3, 4);
        if (s % 10 == 0) trainer.begin_epoch(b);
        trainer.step(b);
        std::vector<ParamVector> ps;
        for (const auto& m : trainer.ensemble().members()) ps.push_back(m.flatten());
        out.push_back(std::move(ps));
    }
    return out;
}

double max_trajectory_gap(const std::vector<std::vector<ParamVector>>& a,
                          const std::vector<std::vector<ParamVector>>& b) {
    double gap = 0.0;
    for (std::size_t s = 0; s < a.size(); ++s)
        for (std::size_t i = 0; i < a[s].size(); ++i) gap = std::max(gap, (a[s][i] - b[s][i]).cwiseAbs().maxCoeff());
    return gap;
}

} // namespace

TEST(SgdStep, ZeroGradientNoDecayIsIdentity) {
    ParamVector v;
    const ParamVector theta = vec({1, -2, 3});
    EXPECT_EQ(sgd_step(theta, ParamVector::Zero(3), 0.1, 0.9, v, 0.0), theta);
}

TEST(SgdStep, PlainStep) {
    ParamVector v;
    const ParamVector theta = vec({1, -2});
    const ParamVector g = vec({0.5, 4});
    EXPECT_EQ(sgd_step(theta, g, 0.1, 0.0, v, 0.0), theta - 0.1 * g);
}

TEST(SgdStep, MomentumRecurrence) {
    const ParamVector t0 = vec({1.0, 2.0});
    const ParamVector g1 = vec({0.3, -0.1});
    const ParamVector g2 = vec({-0.2, 0.4});
    const double eta = 0.05, mu = 0.9, wd = 0.005;
    ParamVector v;
    const ParamVector t1 = sgd_step(t0, g1, eta, mu, v, wd);
    const ParamVector t2 = sgd_step(t1, g2, eta, mu, v, wd);
    // Hand-unrolled.
    const ParamVector v1 = g1 + wd * t0;
    const ParamVector e1 = t0 - eta * v1;
    const ParamVector v2 = mu * v1 + g2 + wd * e1;
    const ParamVector e2 = e1 - eta * v2;
    EXPECT_LE((t2 - e2).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SgdStep, ShapeMismatch) {
    ParamVector v;
    EXPECT_THROW(sgd_step(vec({1, 2}), vec({1}), 0.1, 0, v, 0), DimensionError);
}

TEST(SamPerturb, Examples) {
    const ParamVector theta = vec({1, 1});
    EXPECT_LE((sam_perturb(theta, vec({3, 4}), 1.0) - vec({1.6, 1.8})).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(sam_perturb(theta, vec({3, 4}), 0.0), theta);
    EXPECT_EQ(sam_perturb(theta, vec({1e-13, 0}), 1.0), theta);
}

TEST(SamPerturb, NormEqualsRho) {
    Rng rng(1);
    for (int t = 0; t < 100; ++t) {
        const ParamVector theta = random_vector(rng, 30);
        const double rho = rng.uniform(0.01, 2);
        const ParamVector d = sam_perturb(theta, random_vector(rng, 30), rho) - theta;
        EXPECT_NEAR(d.norm(), rho, 1e-12);
    }
}

TEST(AsamPerturb, Examples) {
    EXPECT_EQ(asam_perturb(ParamVector::Zero(3), vec({1, 2, 3}), 1.0), ParamVector::Zero(3));
    EXPECT_NEAR(asam_perturb(vec({2}), vec({1}), 1.0)(0), 4.0, 1e-15);
    // Zero coordinates stay put.
    const ParamVector out = asam_perturb(vec({0, 1}), vec({5, 1}), 0.5);
    EXPECT_EQ(out(0), 0.0);
}

TEST(AsamPerturb, ComponentwiseFormula) {
    Rng rng(2);
    for (int t = 0; t < 50; ++t) {
        const ParamVector theta = random_vector(rng, 10);
        const ParamVector g = random_vector(rng, 10);
        const double rho = 2.0;
        ParamVector tg(10), t2g(10);
        for (int k = 0; k < 10; ++k) {
            tg(k) = std::abs(theta(k)) * g(k);
            t2g(k) = theta(k) * theta(k) * g(k);
        }
        const ParamVector expect = theta + rho * t2g / tg.norm();
        EXPECT_LE((asam_perturb(theta, g, rho) - expect).cwiseAbs().maxCoeff(), 1e-12);
        // Rescaling theta -> c theta, g -> g / c scales the perturbation by c.
        const double c = rng.uniform(0.5, 3);
        const ParamVector scaled = asam_perturb(c * theta, g / c, rho) - c * theta;
        EXPECT_LE((scaled - c * (asam_perturb(theta, g, rho) - theta)).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(TwoDirection, Geometry) {
    const ParamVector theta = vec({0, 0, 0});
    const double rho = 0.3;
    EXPECT_NEAR((two_direction_perturb(theta, vec({1, 0, 0}), vec({2, 0, 0}), rho, rho) - theta).norm(), 2 * rho, 1e-15);
    EXPECT_EQ(two_direction_perturb(theta, vec({1, 0, 0}), vec({-2, 0, 0}), rho, rho), theta);
    EXPECT_NEAR((two_direction_perturb(theta, vec({1, 0, 0}), vec({0, 3, 0}), 0.3, 0.4) - theta).norm(), 0.5, 1e-15);
    Rng rng(3);
    for (int t = 0; t < 200; ++t) {
        const double r1 = rng.uniform(0, 1), r2 = rng.uniform(0, 1);
        const ParamVector th = random_vector(rng, 8);
        const double n = (two_direction_perturb(th, random_vector(rng, 8), random_vector(rng, 8), r1, r2) - th).norm();
        EXPECT_GE(n, std::abs(r1 - r2) - 1e-12);
        EXPECT_LE(n, r1 + r2 + 1e-12);
    }
}

TEST(DashPerturb, TwoDirectionUsesBothGradients) {
    const Ensemble ens = random_ensemble(5, 3, 4, 3);
    Rng rng(6);
    const Batch b = random_batch(rng, 8, 3, 4);
    TrainConfig cfg = small_config(OptimizerKind::dash_two_direction);
    cfg.rho1 = 0.05;
    cfg.rho2 = 0.07;
    const ParamVector theta = ens.member(1).flatten();
    const ParamVector gt = ensemble_coupled_loss(ens, b, cfg.alpha, cfg.gamma, 1).gradient;
    const ParamVector gd = diversity_loss(ens, b, cfg.tau, 1).gradient;
    const ParamVector expect = theta + 0.05 * gt / gt.norm() + 0.07 * gd / gd.norm();
    EXPECT_LE((dash_perturb_two_direction(ens, b, cfg, 1) - expect).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(DashPerturb, CombinedReductions) {
    const Ensemble ens = random_ensemble(7, 3, 4, 3);
    Rng rng(8);
    const Batch b = random_batch(rng, 8, 3, 4);
    TrainConfig cfg = small_config(OptimizerKind::dash_combined);
    const ParamVector theta = ens.member(0).flatten();
    const ParamVector gt = ensemble_coupled_loss(ens, b, cfg.alpha, cfg.gamma, 0).gradient;
    EXPECT_EQ(dash_perturb_combined(ens, b, cfg, 0.0, 0), sam_perturb(theta, gt, cfg.rho1));
    for (double gc : {0.3, 1.0, 5.0}) {
        const ParamVector d = dash_perturb_combined(ens, b, cfg, gc, 0) - theta;
        EXPECT_NEAR(d.norm(), cfg.rho1, 1e-12);
    }
    const Ensemble same({ens.member(0), ens.member(0), ens.member(0)});
    const ParamVector gs = ensemble_coupled_loss(same, b, cfg.alpha, cfg.gamma, 0).gradient;
    EXPECT_LE((dash_perturb_combined(same, b, cfg, 2.0, 0) - sam_perturb(theta, gs, cfg.rho1)).cwiseAbs().maxCoeff(),
              1e-15);
}

TEST(ResolveGammaC, RatioOracleAndFixedMode) {
    const Ensemble ens = random_ensemble(9, 3, 5, 3);
    Rng rng(10);
    const Batch b = random_batch(rng, 10, 3, 5);
    TrainConfig cfg = small_config(OptimizerKind::dash_combined);
    double expect = 0;
    for (std::size_t i = 0; i < 3; ++i)
        expect += ensemble_coupled_loss(ens, b, cfg.alpha, cfg.gamma, i).gradient.norm() /
                  diversity_loss(ens, b, cfg.tau, i).gradient.norm();
    EXPECT_NEAR(resolve_gamma_c(ens, b, cfg), std::min(expect / 3, kGammaCCap), 1e-12);
    cfg.gamma_c_mode = GammaCMode::fixed;
    cfg.gamma_c = 0.25;
    EXPECT_EQ(resolve_gamma_c(ens, b, cfg), 0.25);
}

TEST(ResolveGammaC, ZeroDiversityGradientHitsCap) {
    const Ensemble one = random_ensemble(11, 3, 4, 2);
    const Ensemble same({one.member(0), one.member(0)});
    Rng rng(12);
    const Batch b = random_batch(rng, 6, 3, 4);
    const double g = resolve_gamma_c(same, b, small_config(OptimizerKind::dash_combined));
    EXPECT_TRUE(std::isfinite(g));
    EXPECT_EQ(g, kGammaCCap);
}

TEST(Trainer, DashWithoutDiversityEqualsSam) {
    TrainConfig dash = small_config(OptimizerKind::dash_two_direction);
    dash.rho2 = 0.0;
    dash.gamma = 0.0;
    dash.gamma_c_mode = GammaCMode::fixed;
    dash.gamma_c = 0.0;
    TrainConfig sam = dash;
    sam.optimizer = OptimizerKind::sam;
    EXPECT_LE(max_trajectory_gap(trajectory(dash, 50), trajectory(sam, 50)), 1e-12);
    TrainConfig comb = dash;
    comb.optimizer = OptimizerKind::dash_combined;
    EXPECT_LE(max_trajectory_gap(trajectory(comb, 50), trajectory(sam, 50)), 1e-12);
}

TEST(Trainer, SamWithZeroRadiusEqualsSgd) {
    TrainConfig sam = small_config(OptimizerKind::sam);
    sam.rho1 = 0.0;
    TrainConfig sgd = sam;
    sgd.optimizer = OptimizerKind::sgd;
    EXPECT_EQ(max_trajectory_gap(trajectory(sam, 50), trajectory(sgd, 50)), 0.0);
}

TEST(Trainer, SnapshotOrderIsDeterministicAndDiffers) {
    TrainConfig seq = small_config(OptimizerKind::dash_two_direction);
    TrainConfig snap = seq;
    snap.update_order = UpdateOrder::snapshot;
    const auto a = trajectory(snap, 10);
    EXPECT_EQ(max_trajectory_gap(a, trajectory(snap, 10)), 0.0);
    EXPECT_GT(max_trajectory_gap(a, trajectory(seq, 10)), 0.0);
}

TEST(Trainer, SmallStepDecreasesTildeLoss) {
    int decreased = 0;
    for (int t = 0; t < 100; ++t) {
        const Ensemble ens = random_ensemble(1000 + t, 3, 4, 3);
        Rng rng(2000 + t);
        const Batch b = random_batch(rng, 10, 3, 4);
        TrainConfig cfg = small_config(OptimizerKind::dash_two_direction);
        cfg.eta = 1e-3;
        cfg.momentum = 0.0;
        cfg.weight_decay = 0.0;
        const double before = ensemble_coupled_loss(ens, b, cfg.alpha, cfg.gamma, 0).value;
        EnsembleTrainer trainer(ens, cfg);
        trainer.step(b);
        Ensemble after = ens;
        after.member(0) = trainer.ensemble().member(0);
        decreased += ensemble_coupled_loss(after, b, cfg.alpha, cfg.gamma, 0).value < before;
    }
    EXPECT_GE(decreased, 95);
}

TEST(Train, DeterministicGivenSeed) {
    const Dataset d = gen_two_moons(100, 0.1, 3);
    TrainConfig cfg = small_config(OptimizerKind::dash_combined);
    cfg.epochs = 3;
    const auto a = train(make_ensemble(cfg, 2, 2), d, cfg);
    const auto b = train(make_ensemble(cfg, 2, 2), d, cfg);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a.ensemble.member(i).flatten(), b.ensemble.member(i).flatten());
    EXPECT_EQ(a.report.epochs.size(), 3u);
}

TEST(Train, NonFiniteAbortsWithLocation) {
    const Dataset d = gen_two_moons(40, 0.1, 3);
    TrainConfig cfg = small_config(OptimizerKind::sgd);
    cfg.eta = 1e200;
    cfg.momentum = 0.0;
    try {
        train(make_ensemble(cfg, 2, 2), d, cfg);
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("epoch 1"), std::string::npos) << msg;
        EXPECT_NE(msg.find("batch"), std::string::npos) << msg;
        EXPECT_NE(msg.find("member"), std::string::npos) << msg;
    }
}

TEST(Train, TwoMoonsReachesHighAccuracy) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Dataset tr = gen_two_moons(500, 0.1, 100 + seed);
        const Dataset te = gen_two_moons(500, 0.1, 200 + seed);
        TrainConfig cfg;
        cfg.seed = seed;
        cfg.epochs = 30;
        const auto r = train(make_ensemble(cfg, 2, 2), tr, cfg, &te);
        EXPECT_GT(*r.report.epochs.back().test_accuracy, 0.9) << "seed " << seed;
    }
}

TEST(TrainConfig, ValidationNamesField) {
    TrainConfig c;
    c.gamma = 2;
    try {
        c.validate();
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field(), "gamma");
    }
    c = TrainConfig{};
    c.hidden.pop_back();
    EXPECT_THROW(c.validate(), ConfigError);
}
