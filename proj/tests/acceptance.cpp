// Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero if any
// criterion fails, unless it is listed with --known-failure N; a listed
// criterion that passes is also an error so the list cannot go stale.

#include "dash/adversarial.hpp"
#include "dash/bound.hpp"
#include "dash/data.hpp"
#include "dash/experiments.hpp"
#include "dash/io.hpp"
#include "dash/losses.hpp"
#include "dash/metrics.hpp"
#include "dash/optimizer.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

using namespace dash;
using namespace dash::test;
using namespace dash::oracle;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
    void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

// ---- 1 ------------------------------------------------------------------

Outcome gradient_exactness() {
    Outcome out;
    constexpr double tol = 1e-5;
    double worst[5] = {0, 0, 0, 0, 0};
    for (int t = 0; t < 20; ++t) {
        Ensemble ens = random_ensemble(500 + t, 3, 4, 3);
        Rng rng(900 + t);
        const Batch b = random_batch(rng, 6, 3, 4);
        const std::size_t i = static_cast<std::size_t>(t % 3);
        const ParamVector theta = ens.member(i).flatten();
        auto at = [&](const ParamVector& p, auto loss) {
            Ensemble e = ens;
            e.member(i).unflatten(p);
            return loss(e).value;
        };
        const auto ce = [&](const Ensemble& e) { return ce_label_smoothing(e.member(i), b, 0.1); };
        const auto tilde = [&](const Ensemble& e) { return ensemble_coupled_loss(e, b, 0.1, 0.3, i); };
        const auto div = [&](const Ensemble& e) { return diversity_loss(e, b, 0.5, i); };
        const auto comb = [&](const Ensemble& e) { return combined_loss(e, b, 0.1, 0.3, 0.7, 0.5, i); };
        worst[0] = std::max(worst[0], fd_relative_error([&](const ParamVector& p) { return at(p, ce); }, theta,
                                                        ce(ens).gradient));
        worst[1] = std::max(worst[1], fd_relative_error([&](const ParamVector& p) { return at(p, tilde); }, theta,
                                                        tilde(ens).gradient));
        worst[2] = std::max(worst[2], fd_relative_error([&](const ParamVector& p) { return at(p, div); }, theta,
                                                        div(ens).gradient));
        worst[3] = std::max(worst[3], fd_relative_error([&](const ParamVector& p) { return at(p, comb); }, theta,
                                                        comb(ens).gradient));
        const ParamVector x = as_vector(b.inputs);
        const auto mix = [&](const ParamVector& v) { return mixture_cross_entropy(ens, as_tensor(v, 6, 3), b.labels); };
        worst[4] = std::max(worst[4], fd_relative_error(mix, x, as_vector(input_gradient(ens, b))));
    }
    const char* names[] = {"ce", "tilde", "diversity", "combined", "input"};
    for (int k = 0; k < 5; ++k) {
        out.check(worst[k] <= tol, std::string(names[k]) + " rel err " + fmt(worst[k]));
        if (worst[k] <= tol) out.note(std::string(names[k]) + " " + fmt(worst[k], 2));
    }
    return out;
}

// ---- 2 ------------------------------------------------------------------

std::vector<std::vector<ParamVector>> trajectory(const TrainConfig& cfg, int steps) {
    EnsembleTrainer trainer(random_ensemble(77, 3, 4, 3), cfg);
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

double max_gap(const std::vector<std::vector<ParamVector>>& a, const std::vector<std::vector<ParamVector>>& b) {
    double gap = 0.0;
    for (std::size_t s = 0; s < a.size(); ++s)
        for (std::size_t i = 0; i < a[s].size(); ++i) gap = std::max(gap, (a[s][i] - b[s][i]).cwiseAbs().maxCoeff());
    return gap;
}

Outcome reduction_lattice() {
    Outcome out;
    TrainConfig base;
    base.members = 3;
    base.hidden = {{6}, {5, 4}, {7}};
    base.activation = Activation::tanh;
    base.batch_size = 12;
    TrainConfig dash = base;
    dash.optimizer = OptimizerKind::dash_two_direction;
    dash.rho2 = 0.0;
    dash.gamma = 0.0;
    dash.gamma_c_mode = GammaCMode::fixed;
    dash.gamma_c = 0.0;
    TrainConfig sam = dash;
    sam.optimizer = OptimizerKind::sam;
    TrainConfig comb = dash;
    comb.optimizer = OptimizerKind::dash_combined;
    const auto sam_traj = trajectory(sam, 50);
    const double g1 = max_gap(trajectory(dash, 50), sam_traj);
    const double g2 = max_gap(trajectory(comb, 50), sam_traj);
    TrainConfig sam0 = base;
    sam0.optimizer = OptimizerKind::sam;
    sam0.rho1 = 0.0;
    TrainConfig sgd = sam0;
    sgd.optimizer = OptimizerKind::sgd;
    const double g3 = max_gap(trajectory(sam0, 50), trajectory(sgd, 50));
    out.check(g1 <= 1e-12, "dash_two_direction vs sam gap " + fmt(g1));
    out.check(g2 <= 1e-12, "dash_combined vs sam gap " + fmt(g2));
    out.check(g3 <= 1e-12, "sam(rho=0) vs sgd gap " + fmt(g3));
    if (out.pass) out.note("max gaps " + fmt(g1, 2) + ", " + fmt(g2, 2) + ", " + fmt(g3, 2) + " over 50 steps");
    return out;
}

// ---- 3 ------------------------------------------------------------------

Outcome metric_oracles() {
    Outcome out;
    double worst = 0.0;
    Rng rng(31);
    for (int t = 0; t < 200; ++t) {
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(50));
        const int m = 2 + static_cast<int>(rng.below(3));
        const Eigen::Index M = m + 1 + static_cast<Eigen::Index>(rng.below(3));
        std::vector<Tensor> probs;
        std::vector<Eigen::VectorXi> preds;
        for (int j = 0; j < m; ++j) {
            probs.push_back(softmax(random_tensor(rng, n, M, 2.0)));
            preds.push_back(argmax_rows(probs.back()));
        }
        const auto y = random_labels(rng, static_cast<std::size_t>(n), static_cast<int>(M));
        Tensor p = Tensor::Zero(n, M);
        for (const auto& q : probs) p += q / m;
        double acc = 0, nl = 0, br = 0, d = 0;
        for (Eigen::Index r = 0; r < n; ++r) {
            acc += argmax_of(p, r) == y[r];
            nl -= std::log(std::max(p(r, y[r]), 1e-12));
            for (Eigen::Index c = 0; c < M; ++c) br += (p(r, c) - (c == y[r])) * (p(r, c) - (c == y[r]));
        }
        int pairs = 0;
        for (int a = 0; a < m; ++a)
            for (int b = a + 1; b < m; ++b, ++pairs)
                for (Eigen::Index r = 0; r < n; ++r) d += preds[a](r) != preds[b](r);
        const double nn = static_cast<double>(n);
        const double diffs[] = {
            std::abs(accuracy(p, y) - acc / nn),
            std::abs(nll(p, y) - nl / nn),
            std::abs(brier(p, y) - br / nn),
            std::abs(ece(p, y, 15) - naive_ece(p, y, 15)),
            std::abs(disagreement(preds) - d / (pairs * nn)),
            std::abs(log_det_diversity(probs, y) - naive_log_det(probs, y, kGramJitter)),
            std::abs(cal_aac(p, y) - naive_cal_aac(p, y)),
        };
        for (double v : diffs) worst = std::max(worst, v);
    }
    out.check(worst <= 1e-10, "worst deviation " + fmt(worst));
    if (out.pass) out.note("200 instances, worst deviation " + fmt(worst, 2));
    return out;
}

// ---- 4 ------------------------------------------------------------------

Outcome perturbation_geometry() {
    Outcome out;
    Rng rng(41);
    double sam_err = 0.0;
    int two_dir_bad = 0, box_bad = 0;
    for (int t = 0; t < 200; ++t) {
        const ParamVector theta = random_vector(rng, 25);
        const double r1 = rng.uniform(0.001, 1), r2 = rng.uniform(0, 1);
        sam_err = std::max(sam_err, std::abs((sam_perturb(theta, random_vector(rng, 25), r1) - theta).norm() - r1));
        const double n2 =
            (two_direction_perturb(theta, random_vector(rng, 25), random_vector(rng, 25), r1, r2) - theta).norm();
        two_dir_bad += n2 < std::abs(r1 - r2) - 1e-12 || n2 > r1 + r2 + 1e-12;
    }
    for (int t = 0; t < 30; ++t) {
        const Ensemble ens = random_ensemble(600 + t, 3, 3, 2, t % 2 ? Activation::relu : Activation::tanh);
        const Batch b = random_batch(rng, 16, 3, 3);
        AttackConfig cfg;
        cfg.epsilon = rng.uniform(1e-3, 0.5);
        cfg.step_size = cfg.epsilon * rng.uniform(0.05, 2.0);
        cfg.steps = 10;
        cfg.random_start = t % 3 == 0;
        cfg.seed = static_cast<std::uint64_t>(t);
        const Tensor adv = pgd_attack(ens, b, cfg);
        for (Eigen::Index r = 0; r < adv.rows(); ++r)
            for (Eigen::Index c = 0; c < adv.cols(); ++c) {
                const double d = adv(r, c) - b.inputs(r, c);
                box_bad += !(d <= cfg.epsilon && d >= -cfg.epsilon);
            }
    }
    out.check(sam_err <= 1e-12, "sam norm error " + fmt(sam_err));
    out.check(two_dir_bad == 0, std::to_string(two_dir_bad) + " two-direction norms outside range");
    out.check(box_bad == 0, std::to_string(box_bad) + " PGD coordinates outside the box");
    if (out.pass) out.note("sam norm error " + fmt(sam_err, 2) + ", 200 two-direction draws, 30 PGD batches");
    return out;
}

// ---- 5 ------------------------------------------------------------------

Outcome calibration() {
    Outcome out;
    Rng rng(51);
    int violations = 0;
    for (int t = 0; t < 50; ++t) {
        std::vector<Tensor> logits{random_tensor(rng, 60, 4, 3), random_tensor(rng, 60, 4, 3),
                                   random_tensor(rng, 60, 4, 3)};
        const auto y = random_labels(rng, 60, 4);
        for (auto level : {CalibrationLevel::member, CalibrationLevel::mixture}) {
            const TemperatureFit fit = temperature_scale(logits, y, level);
            violations += fit.nll > fit.nll_at_one;
        }
    }
    // Labels sampled from softmax(z); the model reports 2 z.
    const Eigen::Index n = 4000, M = 4;
    const Tensor z = random_tensor(rng, n, M, 1.5);
    const Tensor p = softmax(z);
    std::vector<int> y(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < n; ++r) {
        const double u = rng.uniform();
        double acc = 0;
        int c = 0;
        for (; c < M - 1; ++c) {
            acc += p(r, c);
            if (u < acc) break;
        }
        y[static_cast<std::size_t>(r)] = c;
    }
    const double t = temperature_scale(std::vector<Tensor>{Tensor(2.0 * z)}, y).temperature;
    out.check(violations == 0, std::to_string(violations) + " fits worse than T = 1");
    out.check(std::abs(t - 2.0) <= 0.1, "recovered T " + fmt(t));
    if (out.pass) out.note("100 fits never worse than T = 1; recovered T " + fmt(t, 5) + " for scale 2");
    return out;
}

// ---- 6, 7 ----------------------------------------------------------------

struct SpiralSetup {
    TrainConfig base;
    Dataset train;
    Dataset test;
};

SpiralSetup spiral_setup() {
    SpiralSetup s;
    s.train = gen_spirals(1000, 1.0, 0.05, 4, 1000);
    s.test = gen_spirals(1000, 1.0, 0.05, 4, 2000);
    TrainConfig& c = s.base;
    c.optimizer = OptimizerKind::dash_two_direction;
    c.members = 3;
    c.hidden = {{64, 64}, {64, 64}, {64, 64}};
    c.epochs = 50;
    c.eta = 0.1;
    c.batch_size = 32;
    c.weight_decay = 5e-4;
    c.rho1 = 0.05;
    c.rho2 = 0.05;
    return s;
}

const AblationRow& row_of(const AblationResult& r, std::uint64_t seed, AblationVariant v) {
    for (const auto& row : r.per_seed)
        if (row.seed == seed && row.variant == v) return row;
    throw StateError("missing ablation row");
}

Outcome flat_ablation(const AblationResult& r, double seconds) {
    Outcome out;
    int acc_top = 0, acc_flat = 0, ld = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto& sgd = row_of(r, seed, AblationVariant::sgd);
        const auto& flat = row_of(r, seed, AblationVariant::dash_flat);
        const auto& full = row_of(r, seed, AblationVariant::dash);
        std::printf("    seed %llu  acc sgd %.4f dash_f %.4f dash %.4f | ld dash_f %.3f dash %.3f\n",
                    static_cast<unsigned long long>(seed), sgd.accuracy, flat.accuracy, full.accuracy, flat.ld,
                    full.ld);
        acc_top += full.accuracy >= flat.accuracy;
        acc_flat += flat.accuracy >= sgd.accuracy;
        ld += full.ld > flat.ld;
    }
    out.check(acc_top >= 4, "DASH >= DASH^F in " + std::to_string(acc_top) + "/5 seeds");
    out.check(acc_flat >= 4, "DASH^F >= SGD in " + std::to_string(acc_flat) + "/5 seeds");
    out.check(ld >= 4, "LD(DASH) > LD(DASH^F) in " + std::to_string(ld) + "/5 seeds");
    out.check(seconds < 600, "runtime " + fmt(seconds) + " s");
    if (out.pass)
        out.note("acc orderings " + std::to_string(acc_top) + "/5 and " + std::to_string(acc_flat) + "/5, LD " +
                 std::to_string(ld) + "/5");
    out.note("mean acc sgd " + fmt(r.mean[0].accuracy) + ", dash_f " + fmt(r.mean[1].accuracy) + ", dash " +
             fmt(r.mean[2].accuracy) + "; " + fmt(seconds, 3) + " s");
    return out;
}

Outcome congruence(const AblationResult& r) {
    Outcome out;
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const double flat = row_of(r, seed, AblationVariant::dash_flat).congruence;
        const double full = row_of(r, seed, AblationVariant::dash).congruence;
        std::printf("    seed %llu  congruence dash_f %.4f dash %.4f\n", static_cast<unsigned long long>(seed), flat,
                    full);
        wins += full > flat;
    }
    out.check(wins >= 4, "DASH more congruent in " + std::to_string(wins) + "/5 seeds");
    if (out.pass) out.note("DASH more congruent in " + std::to_string(wins) + "/5 seeds");
    return out;
}

// ---- 8 ------------------------------------------------------------------

double complexity_terms(const BoundBreakdown& b) {
    double s = b.complexity_log_term + b.ensemble_kl_term;
    for (double v : b.member_kl_terms) s += v;
    return s;
}

Outcome bound_evaluator() {
    Outcome out;
    Rng rng(81);
    double worst = 0.0;
    int monotone_bad = 0, zero_bad = 0;
    for (int t = 0; t < 100; ++t) {
        const BoundInputs b = random_bound_inputs(rng);
        const double total = evaluate_bound(b).total;
        worst = std::max(worst, std::abs(total - transcribed_total(b)) / std::max(1.0, std::abs(total)));

        BoundInputs sweep = b;
        double prev = complexity_terms(evaluate_bound(sweep));
        const std::size_t i = rng.below(static_cast<std::uint64_t>(b.m));
        for (int s = 0; s < 5; ++s) {
            sweep.member_norms[i] += rng.uniform(0, 5);
            const double c = complexity_terms(evaluate_bound(sweep));
            monotone_bad += c < prev;
            prev = c;
        }
        BoundInputs bigger = b;
        bigger.m += 1;
        bigger.member_norms.push_back(b.member_norms[0]);
        bigger.sharp_member_losses.push_back(b.sharp_member_losses[0]);
        monotone_bad += complexity_terms(evaluate_bound(bigger)) < complexity_terms(evaluate_bound(b));

        BoundInputs zero = b;
        std::fill(zero.member_norms.begin(), zero.member_norms.end(), 0.0);
        const BoundBreakdown z = evaluate_bound(zero);
        zero_bad += z.ensemble_kl_term != 0.0;
        for (double v : z.member_kl_terms) zero_bad += v != 0.0;
    }
    out.check(worst <= 1e-12, "transcriptions differ by " + fmt(worst));
    out.check(monotone_bad == 0, std::to_string(monotone_bad) + " monotonicity violations");
    out.check(zero_bad == 0, std::to_string(zero_bad) + " nonzero log terms at zero norms");
    if (out.pass) out.note("100 inputs, transcription gap " + fmt(worst, 2));
    return out;
}

// ---- 9 ------------------------------------------------------------------

Outcome gamma_sweep_table() {
    Outcome out;
    const Dataset train = gen_two_moons(500, 0.2, 91);
    const Dataset val = gen_two_moons(250, 0.2, 92);
    const Dataset test = gen_two_moons(250, 0.2, 93);
    TrainConfig base;
    base.epochs = 20;
    const GammaSweepResult r = gamma_sweep(base, train, val, test, kDefaultGammaGrid, {0, 1, 2});
    const std::string csv = gamma_sweep_csv(r);
    std::istringstream lines(csv);
    std::string line;
    int rows = -1;
    while (std::getline(lines, line)) {
        std::printf("    %s\n", line.c_str());
        ++rows;
    }
    out.check(rows == 5, std::to_string(rows) + " rows");
    out.check(csv.rfind("gamma,accuracy,nll,brier,ece\n", 0) == 0, "unexpected header");
    out.note("best gamma " + format_number(r.best_gamma));
    return out;
}

// ---- 10 -----------------------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

int run(const std::string& args) {
    const std::string cmd = std::string(DASH_CLI) + " --quiet " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
}

Outcome determinism() {
    Outcome out;
    const fs::path root = fs::temp_directory_path() / "dash_acceptance_determinism";
    fs::remove_all(root);
    fs::create_directories(root / "in");
    const std::string in = (root / "in").string();
    {
        std::ofstream(root / "in" / "tiny.json") << R"({"epochs": 3, "members": 2, "hidden": [12, 12]})";
        std::ofstream(root / "in" / "bound.json")
            << R"({"m": 2, "k": 50, "N": 400, "member_norms": [3, 4], "sharp_member_losses": [0.3, 0.4], "sharp_ensemble_loss": 0.2})";
    }
    if (run("generate --kind spirals --classes 3 --n 300 --seed 4 --out " + in + "/data.csv") != 0)
        out.check(false, "generate failed");
    if (run("generate --kind two-moons --n 200 --seed 5 --out " + in + "/val.csv") != 0)
        out.check(false, "generate failed");
    if (run("generate --kind two-moons --n 400 --seed 6 --out " + in + "/moons.csv") != 0)
        out.check(false, "generate failed");
    const std::string cfg = " --config " + in + "/tiny.json";
    const std::string o = (root / "out").string();
    const std::vector<std::string> cmds = {
        "--out " + o + "/gen.csv generate --kind two-moons --n 100 --seed 3 --noise 0.2",
        cfg + " --out " + o + "/train train --data " + in + "/moons.csv --optimizer dash_combined --seed 7",
        "--out " + o + "/eval evaluate --checkpoint " + o + "/train/checkpoint.json --data " + in +
            "/moons.csv --val " + in + "/val.csv",
        cfg + " --seeds 0..1 --out " + o + "/sweep gamma-sweep --data " + in + "/data.csv --gammas 0.1,0.5",
        cfg + " --seeds 0 --out " + o + "/ablation ablation --data " + in + "/data.csv",
        "--out " + o + "/bound bound --inputs " + in + "/bound.json",
        "--out " + o + "/bound_measured bound --checkpoint " + o + "/train/checkpoint.json --data " + in +
            "/moons.csv --samples 4 --seed 2",
        "--out " + o + "/attack attack --checkpoint " + o + "/train/checkpoint.json --data " + in +
            "/moons.csv --epsilons 0,0.05,0.1 --step-size 0.02 --random-start --seed 9",
    };
    auto snapshot = [&] {
        std::map<std::string, std::string> files;
        for (const auto& entry : fs::recursive_directory_iterator(o))
            if (entry.is_regular_file()) files[fs::relative(entry.path(), o).string()] = slurp(entry.path());
        return files;
    };
    // Each command runs twice with identical flags; the second run overwrites
    // the first, and every output file must come back byte for byte.
    std::map<std::string, std::string> first;
    for (int pass = 0; pass < 2; ++pass) {
        for (const auto& c : cmds)
            if (run(c) != 0) out.check(false, "command failed: " + c);
        if (pass == 0) first = snapshot();
    }
    const auto second = snapshot();
    for (const auto& [name, bytes] : first) {
        const auto it = second.find(name);
        if (it == second.end() || it->second != bytes) out.check(false, name + " differs");
    }
    out.check(!first.empty() && first.size() == second.size(), "file sets differ");
    if (out.pass) out.note(std::to_string(first.size()) + " files byte-identical across reruns of 8 commands");
    return out;
}

} // namespace

int main(int argc, char** argv) {
    std::set<int> known;
    for (int a = 1; a < argc; ++a) {
        if (std::string(argv[a]) == "--known-failure" && a + 1 < argc) {
            known.insert(std::atoi(argv[++a]));
        } else {
            std::fprintf(stderr, "usage: acceptance [--known-failure N]...\n");
            return 2;
        }
    }
    int failures = 0, unexpected = 0;
    auto report = [&](int id, const char* name, const std::function<Outcome()>& f) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = f();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += !o.pass;
        unexpected += o.pass == known.contains(id);
        std::printf("%s %d %s (%.1fs): %s\n", o.pass ? "PASS" : "FAIL", id, name, s, o.detail.c_str());
        std::fflush(stdout);
    };

    report(1, "gradient exactness", gradient_exactness);
    report(2, "reduction lattice", reduction_lattice);
    report(3, "metric oracle equivalence", metric_oracles);
    report(4, "perturbation geometry", perturbation_geometry);
    report(5, "calibration", calibration);

    const SpiralSetup setup = spiral_setup();
    AblationResult abl;
    double abl_seconds = 0.0;
    {
        const auto t0 = std::chrono::steady_clock::now();
        abl = ablation(setup.base, setup.train, setup.test, {0, 1, 2, 3, 4});
        abl_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    report(6, "flat-seeking ablation on spirals", [&] { return flat_ablation(abl, abl_seconds); });
    report(7, "congruence diagnostic", [&] { return congruence(abl); });
    report(8, "bound evaluator", bound_evaluator);
    report(9, "gamma sweep table", gamma_sweep_table);
    report(10, "determinism", determinism);

    std::printf("%d of 10 criteria passed\n", 10 - failures);
    for (int id : known) std::printf("criterion %d is listed as a known failure\n", id);
    return unexpected == 0 ? 0 : 1;
}
