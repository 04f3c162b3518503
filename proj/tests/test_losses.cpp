#include "dash/losses.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace dash;
using namespace dash::test;

namespace {

/// Loss of member i as a function of its flattened parameters.
template <class F>
double member_fd_error(const Ensemble& ens, std::size_t i, F loss, const ParamVector& analytic) {
    Ensemble probe = ens;
    auto f = [&](const ParamVector& p) {
        probe.member(i).unflatten(p);
        return loss(probe);
    };
    return fd_relative_error(f, ens.member(i).flatten(), analytic);
}

Tensor row(std::initializer_list<double> v) {
    Tensor t(1, static_cast<Eigen::Index>(v.size()));
    Eigen::Index k = 0;
    for (double x : v) t(0, k++) = x;
    return t;
}

} // namespace

TEST(SmoothedCe, ConfidentCorrectIsZero) {
    const std::vector<int> y{0};
    EXPECT_NEAR(smoothed_ce(row({1000, 0, 0}), y, 0.0).value, 0.0, 1e-300);
}

TEST(SmoothedCe, UniformPredictionIsLogM) {
    const std::vector<int> y{2};
    for (double alpha : {0.0, 0.1, 0.5, 0.9})
        EXPECT_NEAR(smoothed_ce(Tensor::Zero(1, 5), y, alpha).value, std::log(5.0), 1e-14);
}

TEST(SmoothedCe, TwoClassValue) {
    // Logits whose softmax is [0.8, 0.2].
    const std::vector<int> y{0};
    const double v = smoothed_ce(row({std::log(0.8), std::log(0.2)}), y, 0.1).value;
    EXPECT_NEAR(v, -(0.95 * std::log(0.8) + 0.05 * std::log(0.2)), 1e-14);
    EXPECT_NEAR(v, 0.29246, 1e-5);
}

TEST(SmoothedCe, LabelOutOfRangeIsIndexError) {
    const std::vector<int> y{3};
    EXPECT_THROW(smoothed_ce(Tensor::Zero(1, 3), y, 0.1), IndexError);
    EXPECT_THROW(smoothed_ce(Tensor::Zero(1, 3), std::vector<int>{0}, 1.0), ParameterError);
}

TEST(SmoothedCe, BoundedBelowByTargetEntropy) {
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        const int M = 2 + static_cast<int>(rng.below(5));
        const double alpha = rng.uniform(0, 0.9);
        const std::vector<int> y{static_cast<int>(rng.below(M))};
        const double loss = smoothed_ce(random_tensor(rng, 1, M, 2.0), y, alpha).value;
        double h = 0;
        for (int c = 0; c < M; ++c) {
            const double q = (c == y[0] ? 1 - alpha : 0.0) + alpha / M;
            if (q > 0) h -= q * std::log(q);
        }
        EXPECT_GE(loss, h - 1e-12);
        // Equality at p = q.
        Tensor logq(1, M);
        for (int c = 0; c < M; ++c) logq(0, c) = std::log((c == y[0] ? 1 - alpha : 0.0) + alpha / M);
        EXPECT_NEAR(smoothed_ce(logq, y, alpha).value, h, 1e-12);
    }
}

TEST(SmoothedCe, ParameterGradientMatchesFiniteDifferences) {
    for (int trial = 0; trial < 5; ++trial) {
        const Ensemble ens = random_ensemble(40 + trial, 3, 4, 2);
        Rng rng(50 + trial);
        const Batch b = random_batch(rng, 6, 3, 4);
        const LossValue lv = ce_label_smoothing(ens.member(0), b, 0.1);
        EXPECT_LE(member_fd_error(ens, 0, [&](const Ensemble& e) {
                      return ce_label_smoothing(e.member(0), b, 0.1).value;
                  }, lv.gradient), 1e-5);
    }
}

TEST(EnsembleLoss, IdenticalMembersEqualSingleMemberLoss) {
    const Ensemble one = random_ensemble(60, 3, 4, 2);
    const Ensemble ens({one.member(0), one.member(0), one.member(0)});
    Rng rng(61);
    const Batch b = random_batch(rng, 5, 3, 4);
    EXPECT_NEAR(ensemble_loss(ens, b, 0.1, 1).value, ce_label_smoothing(one.member(0), b, 0.1).value, 1e-14);
}

TEST(EnsembleLoss, MixtureWithUniformMember) {
    Ensemble ens = random_ensemble(62, 3, 4, 2);
    MlpModel uniform(ens.member(1).layer_sizes(), Activation::tanh); // zero logits
    ens.member(1) = uniform;
    Rng rng(63);
    const Batch b = random_batch(rng, 5, 3, 4);
    const Tensor p = softmax(ens.member(0).logits(b.inputs));
    double expect = 0;
    for (int n = 0; n < 5; ++n)
        for (int c = 0; c < 4; ++c) {
            const double q = (c == b.labels[n] ? 0.9 : 0.0) + 0.1 / 4;
            expect -= q * std::log((p(n, c) + 0.25) / 2);
        }
    EXPECT_NEAR(ensemble_loss(ens, b, 0.1, 0).value, expect / 5, 1e-13);
}

TEST(EnsembleLoss, GradientMatchesFiniteDifferences) {
    for (int trial = 0; trial < 5; ++trial) {
        const Ensemble ens = random_ensemble(70 + trial, 3, 4, 3);
        Rng rng(80 + trial);
        const Batch b = random_batch(rng, 6, 3, 4);
        for (std::size_t i = 0; i < 3; ++i) {
            const LossValue lv = ensemble_loss(ens, b, 0.1, i);
            EXPECT_LE(member_fd_error(ens, i, [&](const Ensemble& e) { return ensemble_loss(e, b, 0.1, i).value; },
                                      lv.gradient), 1e-5);
        }
    }
}

TEST(DiversityLoss, IdenticalMembersGiveZero) {
    const Ensemble one = random_ensemble(90, 3, 4, 2);
    const Ensemble ens({one.member(0), one.member(0), one.member(0)});
    Rng rng(91);
    const Batch b = random_batch(rng, 5, 3, 4);
    const LossValue lv = diversity_loss(ens, b, 0.5, 0);
    EXPECT_NEAR(lv.value, 0.0, 1e-15);
    EXPECT_LE(lv.gradient.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(DiversityLoss, ScalarKlValue) {
    // Non-target logits [1, 0] and [0, 1] with the target (class 2) dropped.
    const std::vector<Tensor> logits{row({1, 0, 7}), row({0, 1, -3})};
    const std::vector<int> y{2};
    const double v = diversity_kl(logits, y, 1.0, 0).value;
    const double e = std::exp(1.0);
    EXPECT_NEAR(v, (e - 1) / (e + 1), 1e-14);
    EXPECT_NEAR(v, 0.46212, 1e-5);
}

TEST(DiversityLoss, InvariantToTargetLogit) {
    Rng rng(92);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Tensor> logits{random_tensor(rng, 4, 5), random_tensor(rng, 4, 5), random_tensor(rng, 4, 5)};
        const std::vector<int> y = random_labels(rng, 4, 5);
        const double before = diversity_kl(logits, y, 0.5, 1).value;
        for (int n = 0; n < 4; ++n) logits[rng.below(3)](n, y[n]) += rng.uniform(-100, 100);
        EXPECT_NEAR(diversity_kl(logits, y, 0.5, 1).value, before, 1e-12);
        EXPECT_GE(before, 0.0);
    }
}

TEST(DiversityLoss, SingleClassUnsupported) {
    const std::vector<Tensor> logits{Tensor::Zero(2, 1), Tensor::Zero(2, 1)};
    EXPECT_THROW(diversity_kl(logits, std::vector<int>{0, 0}, 0.5, 0), ParameterError);
}

TEST(DiversityLoss, GradientMatchesFiniteDifferences) {
    for (int trial = 0; trial < 5; ++trial) {
        const Ensemble ens = random_ensemble(100 + trial, 3, 5, 3);
        Rng rng(110 + trial);
        const Batch b = random_batch(rng, 6, 3, 5);
        for (std::size_t i = 0; i < 3; ++i) {
            const LossValue lv = diversity_loss(ens, b, 0.5, i);
            EXPECT_LE(member_fd_error(ens, i, [&](const Ensemble& e) { return diversity_loss(e, b, 0.5, i).value; },
                                      lv.gradient), 1e-5);
        }
    }
}

TEST(CombinedLoss, ReductionsAndGradient) {
    const Ensemble ens = random_ensemble(120, 3, 4, 3);
    Rng rng(121);
    const Batch b = random_batch(rng, 6, 3, 4);
    EXPECT_NEAR(combined_loss(ens, b, 0.1, 0.1, 0.0, 0.5, 1).value,
                ensemble_coupled_loss(ens, b, 0.1, 0.1, 1).value, 1e-15);
    EXPECT_NEAR(combined_loss(ens, b, 0.1, 0.0, 0.0, 0.5, 1).value,
                ce_label_smoothing(ens.member(1), b, 0.1).value, 1e-15);
    for (std::size_t i = 0; i < 3; ++i) {
        const LossValue lv = combined_loss(ens, b, 0.1, 0.1, 0.5, 0.5, i);
        EXPECT_LE(member_fd_error(ens, i, [&](const Ensemble& e) {
                      return combined_loss(e, b, 0.1, 0.1, 0.5, 0.5, i).value;
                  }, lv.gradient), 1e-5);
    }
}

TEST(TildeLoss, IsMemberPlusGammaEnsemble) {
    const Ensemble ens = random_ensemble(130, 3, 4, 3);
    Rng rng(131);
    const Batch b = random_batch(rng, 6, 3, 4);
    const double expect = ce_label_smoothing(ens.member(2), b, 0.1).value + 0.3 * ensemble_loss(ens, b, 0.1, 2).value;
    EXPECT_NEAR(ensemble_coupled_loss(ens, b, 0.1, 0.3, 2).value, expect, 1e-14);
}
