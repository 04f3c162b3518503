// Command-line runner: generate | train | evaluate | gamma-sweep | ablation |
// bound | attack. Every command writes its artifacts plus manifest.json.
//
// Exit codes: 0 success, 2 usage or configuration, 3 data or schema,
// 4 numeric abort, 1 anything unexpected.

#include "dash/adversarial.hpp"
#include "dash/bound.hpp"
#include "dash/data.hpp"
#include "dash/experiments.hpp"
#include "dash/io.hpp"
#include "dash/metrics.hpp"
#include "dash/optimizer.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace dash;

namespace {

constexpr const char* kToolVersion = "1.0.0";

enum ExitCode { kOk = 0, kUnexpected = 1, kUsage = 2, kData = 3, kNumeric = 4 };

/// Bad flag values or missing input paths.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::string config;
    std::string out;
    std::string seeds;
    bool quiet = false;
    bool record_timings = false;
};

// ---- manifest ----------------------------------------------------------

std::string git_blob_sha1(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read '" + path.string() + "' for hashing");
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string body = buf.str();
    const std::string header = "blob " + std::to_string(body.size()) + '\0';
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
    EVP_DigestUpdate(ctx, header.data(), header.size());
    EVP_DigestUpdate(ctx, body.data(), body.size());
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int k = 0; k < len; ++k) {
        out += hex[digest[k] >> 4];
        out += hex[digest[k] & 15];
    }
    return out;
}

class Manifest {
public:
    Manifest(std::string command, const Globals& g)
        : command_(std::move(command)), globals_(g), start_(std::chrono::steady_clock::now()) {}

    void input(const fs::path& p) { inputs_.push_back(p); }
    void artifact(const fs::path& p) { artifacts_.push_back(p); }
    void set(const std::string& key, Json value) { echo_[key] = std::move(value); }

    void write(const fs::path& path) {
        Json j;
        j["tool"] = "dash";
        j["version"] = kToolVersion;
        j["command"] = command_;
        j["schemas"] = {{"checkpoint", kCheckpointVersion}, {"metrics", 1}, {"train_report", 1},
                        {"bound", 1}, {"curve", 1}, {"manifest", 1}};
        j["config"] = echo_;
        Json inputs = Json::array();
        for (const auto& p : inputs_) inputs.push_back({{"path", p.string()}, {"sha1", git_blob_sha1(p)}});
        j["inputs"] = std::move(inputs);
        Json artifacts = Json::array();
        // Relative to the manifest so runs into different directories match.
        const fs::path base = path.parent_path();
        for (const auto& p : artifacts_) artifacts.push_back(p.lexically_relative(base).generic_string());
        artifacts.push_back(path.filename().generic_string());
        j["artifacts"] = std::move(artifacts);
        if (globals_.record_timings)
            j["wall_seconds"] =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        write_json(j, path);
    }

private:
    std::string command_;
    Globals globals_;
    std::chrono::steady_clock::time_point start_;
    std::vector<fs::path> inputs_;
    std::vector<fs::path> artifacts_;
    Json echo_ = Json::object();
};

// ---- helpers -----------------------------------------------------------

void require_file(const std::string& path, const char* what) {
    if (path.empty()) throw UsageError(std::string(what) + " path is required");
    if (!fs::is_regular_file(path)) throw UsageError(std::string(what) + " not found: '" + path + "'");
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> out;
    auto number = [&](const std::string& s) {
        std::uint64_t v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
            throw UsageError("--seeds: '" + text + "' is not a range 'a..b' or a list 'a,b,c'");
        return v;
    };
    if (const auto dots = text.find(".."); dots != std::string::npos) {
        const std::uint64_t a = number(text.substr(0, dots));
        const std::uint64_t b = number(text.substr(dots + 2));
        if (b < a) throw UsageError("--seeds: empty range '" + text + "'");
        for (std::uint64_t s = a; s <= b; ++s) out.push_back(s);
        return out;
    }
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) out.push_back(number(item));
    if (out.empty()) throw UsageError("--seeds: empty list");
    return out;
}

std::vector<double> parse_reals(const std::string& text, const char* flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        double v = 0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc() || ptr != item.data() + item.size() || item.empty())
            throw UsageError(std::string(flag) + ": '" + text + "' is not a comma-separated list of numbers");
        out.push_back(v);
    }
    if (out.empty()) throw UsageError(std::string(flag) + ": empty list");
    return out;
}

char parse_delimiter(const std::string& s) {
    if (s == "," || s == "comma") return ',';
    if (s == "\\t" || s == "\t" || s == "tab") return '\t';
    throw UsageError("--delimiter must be ',' or 'tab'");
}

struct DataFlags {
    std::string data;
    std::string train;
    std::string val;
    std::string test;
    std::string split = "0.6,0.2,0.2";
    std::uint64_t split_seed = 0;
    int label_column = -1;
    std::string delimiter = ",";
    bool standardize = false;

    void add(CLI::App* cmd) {
        cmd->add_option("--data", data, "Dataset split into train/val/test by --split");
        cmd->add_option("--train", train, "Training file (instead of --data)");
        cmd->add_option("--val", val, "Validation file (instead of --data)");
        cmd->add_option("--test", test, "Test file (instead of --data)");
        cmd->add_option("--split", split, "Train,val,test fractions for --data");
        cmd->add_option("--split-seed", split_seed, "Shuffle seed for --split");
        cmd->add_option("--label-column", label_column, "Label column; negative counts from the end");
        cmd->add_option("--delimiter", delimiter, "',' or 'tab'");
        cmd->add_flag("--standardize", standardize, "Standardize features with train statistics");
    }

    Dataset load(const std::string& path, Manifest& manifest, const char* what) const {
        require_file(path, what);
        manifest.input(path);
        return load_delimited(path, label_column, parse_delimiter(delimiter));
    }

    /// Resolve train/val/test. `need_val` demands a validation part.
    SplitResult resolve(Manifest& manifest, bool need_val) const {
        SplitResult parts;
        if (!data.empty()) {
            if (!train.empty() || !test.empty())
                throw UsageError("use either --data or --train/--val/--test");
            const auto f = parse_reals(split, "--split");
            if (f.size() != 3) throw UsageError("--split needs three fractions");
            const Dataset all = load(data, manifest, "dataset");
            parts = dash::split(all, {f[0], f[1], f[2]}, split_seed, true);
            if (need_val && parts.val.size() == 0) throw UsageError("--split leaves no validation rows");
        } else {
            parts.train = load(train, manifest, "training file");
            parts.test = load(test, manifest, "test file");
            if (!val.empty() || need_val) parts.val = load(val, manifest, "validation file");
        }
        const int classes = std::max({parts.train.classes, parts.val.classes, parts.test.classes});
        parts.train.classes = parts.val.classes = parts.test.classes = classes;
        if (standardize) {
            const Standardizer st = Standardizer::fit(parts.train);
            parts.train = st.apply(parts.train);
            if (parts.val.size() > 0) parts.val = st.apply(parts.val);
            parts.test = st.apply(parts.test);
        }
        return parts;
    }
};

TrainConfig base_config(const Globals& g, Manifest& manifest) {
    if (g.config.empty()) return {};
    require_file(g.config, "config file");
    manifest.input(g.config);
    return load_config(g.config);
}

fs::path out_dir(const Globals& g) {
    const fs::path dir = g.out.empty() ? fs::path(".") : fs::path(g.out);
    fs::create_directories(dir);
    return dir;
}

/// Match a dataset to a checkpoint: same width, no extra classes, and the
/// checkpoint's standardizer applied.
Dataset conform(Dataset data, const Checkpoint& ckpt) {
    const Ensemble& ens = ckpt.ensemble;
    if (data.dim() != ens.input_dim())
        throw SchemaError("checkpoint expects " + std::to_string(ens.input_dim()) + " features, data has " +
                          std::to_string(data.dim()));
    if (data.classes > ens.classes())
        throw SchemaError("checkpoint has " + std::to_string(ens.classes()) + " classes, data has " +
                          std::to_string(data.classes));
    data.classes = ens.classes();
    if (ckpt.standardizer) data = ckpt.standardizer->apply(data);
    return data;
}

void say(const Globals& g, const std::string& line) {
    if (!g.quiet) std::cout << line << '\n';
}

// ---- commands ----------------------------------------------------------

int cmd_generate(const Globals& g, const std::string& kind, int n, double noise, std::uint64_t seed,
                 int classes, double turns) {
    if (g.out.empty()) throw UsageError("generate: --out FILE is required");
    Manifest manifest("generate", g);
    manifest.set("kind", kind);
    manifest.set("n", n);
    manifest.set("noise", noise);
    manifest.set("seed", seed);
    Dataset d;
    if (kind == "two-moons") {
        d = gen_two_moons(n, noise, seed);
    } else if (kind == "spirals") {
        manifest.set("classes", classes);
        manifest.set("turns", turns);
        d = gen_spirals(n, turns, noise, classes, seed);
    } else {
        throw UsageError("generate: --kind must be two-moons or spirals");
    }
    const fs::path path = g.out;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    save_delimited(d, path);
    manifest.artifact(path);
    manifest.write(fs::path(path.string() + ".manifest.json"));
    say(g, "wrote " + path.string() + " (" + std::to_string(d.size()) + " rows)");
    return kOk;
}

struct TrainFlags {
    std::string data;
    std::string test;
    std::string optimizer;
    std::optional<std::uint64_t> seed;
    std::optional<int> epochs;
    int label_column = -1;
    std::string delimiter = ",";
    bool standardize = false;
};

int cmd_train(const Globals& g, const TrainFlags& f) {
    Manifest manifest("train", g);
    TrainConfig cfg = base_config(g, manifest);
    if (!f.optimizer.empty()) {
        try {
            cfg.optimizer = optimizer_from_string(f.optimizer);
        } catch (const ParameterError& e) {
            throw ConfigError("optimizer", e.what());
        }
    }
    if (f.seed) cfg.seed = *f.seed;
    if (f.epochs) cfg.epochs = *f.epochs;
    cfg.validate();

    require_file(f.data, "dataset");
    manifest.input(f.data);
    const char delim = parse_delimiter(f.delimiter);
    Dataset train_set = load_delimited(f.data, f.label_column, delim);
    std::optional<Dataset> test_set;
    if (!f.test.empty()) {
        require_file(f.test, "test file");
        manifest.input(f.test);
        test_set = load_delimited(f.test, f.label_column, delim);
        const int classes = std::max(train_set.classes, test_set->classes);
        train_set.classes = test_set->classes = classes;
    }
    std::optional<Standardizer> standardizer;
    if (f.standardize) {
        standardizer = Standardizer::fit(train_set);
        train_set = standardizer->apply(train_set);
        if (test_set) *test_set = standardizer->apply(*test_set);
    }

    TrainResult result = dash::train(make_ensemble(cfg, static_cast<int>(train_set.dim()), train_set.classes),
                                     train_set, cfg, test_set ? &*test_set : nullptr);
    const fs::path dir = out_dir(g);
    const fs::path ckpt_path = dir / "checkpoint.json";
    const fs::path report_path = dir / "train_report.csv";
    result.report.checkpoint_path = ckpt_path.string();
    save_checkpoint(Checkpoint{result.ensemble, cfg, standardizer}, ckpt_path);
    write_text(train_report_csv(result.report), report_path);
    manifest.set("train_config", config_to_json(cfg));
    manifest.set("standardize", f.standardize);
    manifest.artifact(ckpt_path);
    manifest.artifact(report_path);
    manifest.write(dir / "manifest.json");
    if (!g.quiet) {
        for (const auto& e : result.report.epochs) {
            std::ostringstream line;
            line << "epoch " << e.epoch << " loss " << format_number(e.train_loss) << " acc "
                 << format_number(e.train_accuracy);
            if (e.test_accuracy) line << " test_acc " << format_number(*e.test_accuracy);
            std::cout << line.str() << '\n';
        }
        std::cout << "wrote " << ckpt_path.string() << '\n';
    }
    return kOk;
}

struct EvalFlags {
    std::string checkpoint;
    std::string data;
    std::string val;
    int bins = kDefaultBins;
    std::string cal_level = "member";
    bool no_calibration = false;
    int label_column = -1;
    std::string delimiter = ",";
};

int cmd_evaluate(const Globals& g, const EvalFlags& f) {
    Manifest manifest("evaluate", g);
    require_file(f.checkpoint, "checkpoint");
    require_file(f.data, "dataset");
    if (!f.no_calibration) require_file(f.val, "validation file (--val, or pass --no-calibration)");
    EvalOptions opts;
    opts.n_bins = f.bins;
    if (f.bins < 1) throw UsageError("--bins must be at least 1");
    try {
        opts.cal_level = calibration_level_from_string(f.cal_level);
    } catch (const ParameterError& e) {
        throw UsageError(std::string("--cal-level: ") + e.what());
    }
    manifest.input(f.checkpoint);
    manifest.input(f.data);
    const Checkpoint ckpt = load_checkpoint(f.checkpoint);
    const char delim = parse_delimiter(f.delimiter);
    const Dataset test = conform(load_delimited(f.data, f.label_column, delim), ckpt);
    MetricsReport report;
    if (f.no_calibration) {
        report = evaluate_uncalibrated(ckpt.ensemble, test, opts);
    } else {
        manifest.input(f.val);
        const Dataset val = conform(load_delimited(f.val, f.label_column, delim), ckpt);
        report = evaluate(ckpt.ensemble, test, val, opts);
    }
    const auto bins = calibration_bins(ensemble_predict(ckpt.ensemble, test.inputs), test.labels, opts.n_bins);

    const fs::path dir = out_dir(g);
    write_json(metrics_to_json(report), dir / "metrics.json");
    write_text(metrics_csv(report), dir / "metrics.csv");
    write_text(calibration_bins_csv(bins), dir / "calibration_bins.csv");
    manifest.set("bins", opts.n_bins);
    manifest.set("cal_level", to_string(opts.cal_level));
    manifest.set("cal_aac_definition",
                 "mean over rejection levels k/n, k=0..n-1, of the error rate among the n-k most "
                 "confident samples");
    manifest.artifact(dir / "metrics.json");
    manifest.artifact(dir / "metrics.csv");
    manifest.artifact(dir / "calibration_bins.csv");
    manifest.write(dir / "manifest.json");
    say(g, metrics_csv(report));
    return kOk;
}

int cmd_gamma_sweep(const Globals& g, const DataFlags& df, const std::string& gammas_spec) {
    Manifest manifest("gamma-sweep", g);
    const TrainConfig cfg = base_config(g, manifest);
    const auto seeds = parse_seeds(g.seeds.empty() ? "0..4" : g.seeds);
    const auto gammas = gammas_spec.empty() ? kDefaultGammaGrid : parse_reals(gammas_spec, "--gammas");
    const SplitResult parts = df.resolve(manifest, true);
    const GammaSweepResult r = gamma_sweep(cfg, parts.train, parts.val, parts.test, gammas, seeds);
    const fs::path dir = out_dir(g);
    write_text(gamma_sweep_csv(r), dir / "gamma_sweep.csv");
    write_text(gamma_sweep_seeds_csv(r), dir / "gamma_sweep_seeds.csv");
    manifest.set("train_config", config_to_json(cfg));
    manifest.set("seeds", seeds);
    manifest.set("gammas", gammas);
    manifest.set("best_gamma", r.best_gamma);
    manifest.artifact(dir / "gamma_sweep.csv");
    manifest.artifact(dir / "gamma_sweep_seeds.csv");
    manifest.write(dir / "manifest.json");
    say(g, gamma_sweep_csv(r) + "best gamma " + format_number(r.best_gamma));
    return kOk;
}

int cmd_ablation(const Globals& g, const DataFlags& df) {
    Manifest manifest("ablation", g);
    const TrainConfig cfg = base_config(g, manifest);
    const auto seeds = parse_seeds(g.seeds.empty() ? "0..4" : g.seeds);
    const SplitResult parts = df.resolve(manifest, false);
    const AblationResult r = ablation(cfg, parts.train, parts.test, seeds);
    const fs::path dir = out_dir(g);
    write_text(ablation_csv(r), dir / "ablation.csv");
    manifest.set("train_config", config_to_json(cfg));
    manifest.set("seeds", seeds);
    manifest.artifact(dir / "ablation.csv");
    manifest.write(dir / "manifest.json");
    say(g, ablation_csv(r));
    return kOk;
}

struct BoundFlags {
    std::string inputs;
    std::string checkpoint;
    std::string data;
    int samples = 32;
    std::uint64_t seed = 0;
    int label_column = -1;
    std::string delimiter = ",";
};

int cmd_bound(const Globals& g, const BoundFlags& f) {
    Manifest manifest("bound", g);
    BoundInputs in;
    if (!f.inputs.empty()) {
        require_file(f.inputs, "bound inputs");
        manifest.input(f.inputs);
        in = bound_inputs_from_json(read_json(f.inputs));
    }
    if (!f.checkpoint.empty()) {
        require_file(f.checkpoint, "checkpoint");
        require_file(f.data, "dataset");
        if (f.samples < 0) throw UsageError("--samples must be nonnegative");
        manifest.input(f.checkpoint);
        manifest.input(f.data);
        const Checkpoint ckpt = load_checkpoint(f.checkpoint);
        const Dataset data =
            conform(load_delimited(f.data, f.label_column, parse_delimiter(f.delimiter)), ckpt);
        const SharpLossMeasurement m = measure_sharp_losses(ckpt.ensemble, data, in.rho, f.samples, f.seed);
        in = bound_inputs_from_measurement(in, m, static_cast<long>(data.size()));
        manifest.set("samples", f.samples);
        manifest.set("seed", f.seed);
    } else if (f.inputs.empty()) {
        throw UsageError("bound: pass --inputs and/or --checkpoint with --data");
    }
    const BoundBreakdown b = evaluate_bound(in);
    const fs::path dir = out_dir(g);
    Json doc;
    doc["inputs"] = bound_inputs_to_json(in);
    doc["breakdown"] = bound_breakdown_to_json(b);
    write_json(doc, dir / "bound.json");
    write_text(bound_breakdown_csv(b), dir / "bound.csv");
    manifest.artifact(dir / "bound.json");
    manifest.artifact(dir / "bound.csv");
    manifest.write(dir / "manifest.json");
    say(g, bound_breakdown_csv(b));
    return kOk;
}

struct AttackFlags {
    std::vector<std::string> checkpoints;
    std::string data;
    std::string epsilons = "0";
    double step_size = 1.0 / 255.0;
    int steps = 10;
    bool random_start = false;
    bool clamp_domain = false;
    std::uint64_t seed = 0;
    int label_column = -1;
    std::string delimiter = ",";
};

int cmd_attack(const Globals& g, const AttackFlags& f) {
    Manifest manifest("attack", g);
    if (f.checkpoints.empty()) throw UsageError("attack: at least one --checkpoint is required");
    require_file(f.data, "dataset");
    auto eps = parse_reals(f.epsilons, "--epsilons");
    std::sort(eps.begin(), eps.end());
    manifest.input(f.data);
    const Dataset raw = load_delimited(f.data, f.label_column, parse_delimiter(f.delimiter));
    const fs::path dir = out_dir(g);
    for (const auto& path : f.checkpoints) {
        require_file(path, "checkpoint");
        manifest.input(path);
        const Checkpoint ckpt = load_checkpoint(path);
        const Dataset data = conform(raw, ckpt);
        AttackConfig cfg;
        cfg.step_size = f.step_size;
        cfg.steps = f.steps;
        cfg.random_start = f.random_start;
        cfg.seed = f.seed;
        if (f.clamp_domain) {
            cfg.lower = data.feature_min;
            cfg.upper = data.feature_max;
        }
        const auto curve = robust_accuracy_curve(ckpt.ensemble, data, eps, cfg);
        const fs::path out = f.checkpoints.size() == 1
                                 ? dir / "curve.csv"
                                 : dir / ("curve_" + fs::path(path).parent_path().filename().string() + "_" +
                                          fs::path(path).stem().string() + ".csv");
        write_text(curve_csv(curve), out);
        manifest.artifact(out);
        say(g, out.string() + "\n" + curve_csv(curve));
    }
    manifest.set("epsilons", eps);
    manifest.set("step_size", f.step_size);
    manifest.set("steps", f.steps);
    manifest.set("random_start", f.random_start);
    manifest.set("clamp_domain", f.clamp_domain);
    manifest.set("seed", f.seed);
    manifest.write(dir / "manifest.json");
    return kOk;
}

int run(int argc, char** argv) {
    CLI::App app{"Sharpness-aware ensemble training, evaluation and bound tooling"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "Training configuration JSON");
    app.add_option("--out", g.out, "Output directory (generate: output file)");
    app.add_option("--seeds", g.seeds, "Seed range 'a..b' or list 'a,b,c' (experiments; default 0..4)");
    app.add_flag("--quiet", g.quiet, "Suppress progress output");
    app.add_flag("--record-timings", g.record_timings, "Add wall-clock time to manifest.json");
    app.fallthrough();

    std::string kind = "two-moons";
    int n = 500;
    double noise = 0.1;
    std::uint64_t gen_seed = 0;
    int classes = 2;
    double turns = 1.0;
    auto* gen = app.add_subcommand("generate", "Write a synthetic dataset");
    gen->add_option("--kind", kind, "two-moons or spirals");
    gen->add_option("--n", n, "Number of points");
    gen->add_option("--noise", noise, "Gaussian noise standard deviation");
    gen->add_option("--seed", gen_seed, "Generator seed");
    gen->add_option("--classes", classes, "Spiral arms");
    gen->add_option("--turns", turns, "Spiral turns");

    TrainFlags tf;
    auto* train = app.add_subcommand("train", "Train an ensemble");
    train->add_option("--data", tf.data, "Training file")->required();
    train->add_option("--test", tf.test, "Held-out file reported per epoch");
    train->add_option("--optimizer", tf.optimizer, "sgd, sam, asam, dash_two_direction, dash_combined");
    train->add_option("--seed", tf.seed, "Override config seed");
    train->add_option("--epochs", tf.epochs, "Override config epochs");
    train->add_option("--label-column", tf.label_column, "Label column; negative counts from the end");
    train->add_option("--delimiter", tf.delimiter, "',' or 'tab'");
    train->add_flag("--standardize", tf.standardize, "Standardize features with training statistics");

    EvalFlags ef;
    auto* eval = app.add_subcommand("evaluate", "Metric suite for a checkpoint");
    eval->add_option("--checkpoint", ef.checkpoint, "Checkpoint JSON")->required();
    eval->add_option("--data", ef.data, "Evaluation file")->required();
    eval->add_option("--val", ef.val, "Validation file for temperature scaling");
    eval->add_option("--bins", ef.bins, "ECE bins");
    eval->add_option("--cal-level", ef.cal_level, "member or mixture");
    eval->add_flag("--no-calibration", ef.no_calibration, "Skip temperature scaling");
    eval->add_option("--label-column", ef.label_column, "Label column");
    eval->add_option("--delimiter", ef.delimiter, "',' or 'tab'");

    DataFlags sweep_data;
    std::string gammas;
    auto* sweep = app.add_subcommand("gamma-sweep", "Train and evaluate over a gamma grid");
    sweep_data.add(sweep);
    sweep->add_option("--gammas", gammas, "Comma-separated grid (default 0.1,0.2,0.5,0.8,1.0)");

    DataFlags abl_data;
    auto* abl = app.add_subcommand("ablation", "SGD vs flat-only DASH vs DASH");
    abl_data.add(abl);

    BoundFlags bf;
    auto* bound = app.add_subcommand("bound", "Evaluate the ensemble sharpness bound");
    bound->add_option("--inputs", bf.inputs, "BoundInputs JSON");
    bound->add_option("--checkpoint", bf.checkpoint, "Measure norms and sharp losses from a checkpoint");
    bound->add_option("--data", bf.data, "Data for the sharp-loss measurement");
    bound->add_option("--samples", bf.samples, "Random perturbations per ball");
    bound->add_option("--seed", bf.seed, "Perturbation seed");
    bound->add_option("--label-column", bf.label_column, "Label column");
    bound->add_option("--delimiter", bf.delimiter, "',' or 'tab'");

    AttackFlags af;
    auto* attack = app.add_subcommand("attack", "PGD robust-accuracy curve");
    attack->add_option("--checkpoint", af.checkpoints, "Checkpoint JSON (repeat for several)")->required();
    attack->add_option("--data", af.data, "Evaluation file")->required();
    attack->add_option("--epsilons", af.epsilons, "Comma-separated budgets");
    attack->add_option("--step-size", af.step_size, "Step size");
    attack->add_option("--steps", af.steps, "Attack steps");
    attack->add_flag("--random-start", af.random_start, "Uniform start in the ball");
    attack->add_flag("--clamp-domain", af.clamp_domain, "Clamp to the data's feature bounds");
    attack->add_option("--seed", af.seed, "Random-start seed");
    attack->add_option("--label-column", af.label_column, "Label column");
    attack->add_option("--delimiter", af.delimiter, "',' or 'tab'");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    if (*gen) return cmd_generate(g, kind, n, noise, gen_seed, classes, turns);
    if (*train) return cmd_train(g, tf);
    if (*eval) return cmd_evaluate(g, ef);
    if (*sweep) return cmd_gamma_sweep(g, sweep_data, gammas);
    if (*abl) return cmd_ablation(g, abl_data);
    if (*bound) return cmd_bound(g, bf);
    if (*attack) return cmd_attack(g, af);
    return kUsage;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const ParameterError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kNumeric;
    } catch (const dash::Error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << '\n';
        return kUnexpected;
    }
}
