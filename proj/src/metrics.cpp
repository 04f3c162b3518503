#include "dash/metrics.hpp"

#include "dash/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dash {

namespace {

void check_probs(const Tensor& probs, std::span<const int> labels, const char* what) {
    if (static_cast<Eigen::Index>(labels.size()) != probs.rows() || probs.rows() < 1)
        throw DimensionError(std::string(what) + ": " + std::to_string(labels.size()) +
                             " labels for " + std::to_string(probs.rows()) + " rows");
    for (std::size_t n = 0; n < labels.size(); ++n)
        if (labels[n] < 0 || labels[n] >= probs.cols())
            throw IndexError(std::string(what) + ": label " + std::to_string(labels[n]) +
                             " at row " + std::to_string(n) + " out of range");
}

int bin_of(double confidence, int n_bins) {
    const int b = static_cast<int>(std::ceil(confidence * n_bins)) - 1;
    return std::clamp(b, 0, n_bins - 1);
}

} // namespace

double accuracy(const Tensor& probs, std::span<const int> labels) {
    check_probs(probs, labels, "accuracy");
    const Eigen::VectorXi pred = argmax_rows(probs);
    double correct = 0.0;
    for (Eigen::Index n = 0; n < probs.rows(); ++n) correct += pred(n) == labels[n];
    return correct / static_cast<double>(probs.rows());
}

double nll(const Tensor& probs, std::span<const int> labels) {
    check_probs(probs, labels, "nll");
    double total = 0.0;
    for (Eigen::Index n = 0; n < probs.rows(); ++n)
        total -= std::log(std::max(probs(n, labels[n]), kProbFloor));
    return total / static_cast<double>(probs.rows());
}

double brier(const Tensor& probs, std::span<const int> labels) {
    check_probs(probs, labels, "brier");
    double total = 0.0;
    for (Eigen::Index n = 0; n < probs.rows(); ++n) {
        double row = probs.row(n).squaredNorm();
        const double py = probs(n, labels[n]);
        row += 1.0 - 2.0 * py;
        total += row;
    }
    return total / static_cast<double>(probs.rows());
}

std::vector<CalibrationBin> calibration_bins(const Tensor& probs, std::span<const int> labels,
                                             int n_bins) {
    check_probs(probs, labels, "ece");
    if (n_bins < 1) throw ParameterError("ece: n_bins must be at least 1");
    std::vector<CalibrationBin> bins(static_cast<std::size_t>(n_bins));
    for (int b = 0; b < n_bins; ++b) {
        bins[b].lower = static_cast<double>(b) / n_bins;
        bins[b].upper = static_cast<double>(b + 1) / n_bins;
    }
    for (Eigen::Index n = 0; n < probs.rows(); ++n) {
        Eigen::Index pred = 0;
        const double conf = probs.row(n).maxCoeff(&pred);
        auto& bin = bins[static_cast<std::size_t>(bin_of(conf, n_bins))];
        ++bin.count;
        bin.accuracy += pred == labels[n];
        bin.confidence += conf;
    }
    for (auto& bin : bins)
        if (bin.count > 0) {
            bin.accuracy /= bin.count;
            bin.confidence /= bin.count;
        }
    return bins;
}

double ece(const Tensor& probs, std::span<const int> labels, int n_bins) {
    const auto bins = calibration_bins(probs, labels, n_bins);
    const double n = static_cast<double>(probs.rows());
    double total = 0.0;
    for (const auto& bin : bins)
        if (bin.count > 0) total += (bin.count / n) * std::abs(bin.accuracy - bin.confidence);
    return total;
}

double cal_aac(const Tensor& probs, std::span<const int> labels) {
    check_probs(probs, labels, "cal_aac");
    const auto n = static_cast<std::size_t>(probs.rows());
    std::vector<double> conf(n);
    std::vector<int> wrong(n);
    for (std::size_t r = 0; r < n; ++r) {
        Eigen::Index pred = 0;
        conf[r] = probs.row(static_cast<Eigen::Index>(r)).maxCoeff(&pred);
        wrong[r] = pred != labels[r];
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return conf[a] > conf[b]; });
    // rate[k] = error rate among the k + 1 most confident samples.
    double total = 0.0;
    long errors = 0;
    std::vector<double> rate(n);
    for (std::size_t k = 0; k < n; ++k) {
        errors += wrong[order[k]];
        rate[k] = static_cast<double>(errors) / static_cast<double>(k + 1);
    }
    // Rejecting k samples retains n - k of them.
    for (std::size_t k = 0; k < n; ++k) total += rate[n - k - 1];
    return total / static_cast<double>(n);
}

double disagreement(std::span<const Eigen::VectorXi> member_predictions) {
    const std::size_t m = member_predictions.size();
    if (m < 2) throw StateError("disagreement: needs at least 2 members");
    const Eigen::Index n = member_predictions.front().size();
    if (n < 1) throw DimensionError("disagreement: no samples");
    for (const auto& p : member_predictions)
        if (p.size() != n) throw DimensionError("disagreement: prediction lengths differ");
    double total = 0.0;
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b)
            total += static_cast<double>((member_predictions[a].array() != member_predictions[b].array()).count()) /
                     static_cast<double>(n);
    return total / static_cast<double>(m * (m - 1) / 2);
}

double log_det_diversity(std::span<const Tensor> member_probs, std::span<const int> labels,
                         double jitter) {
    const std::size_t m = member_probs.size();
    if (m < 1) throw StateError("log_det_diversity: no members");
    const Tensor& first = member_probs.front();
    if (first.cols() < 2) throw ParameterError("log_det_diversity: needs at least 2 classes");
    for (const auto& p : member_probs) {
        if (p.rows() != first.rows() || p.cols() != first.cols())
            throw DimensionError("log_det_diversity: member tables differ in shape");
        check_probs(p, labels, "log_det_diversity");
    }
    const Eigen::Index M = first.cols();
    const auto mm = static_cast<Eigen::Index>(m);
    Tensor nontarget(mm, M - 1);
    double total = 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd;
    for (Eigen::Index n = 0; n < first.rows(); ++n) {
        const int y = labels[n];
        for (Eigen::Index j = 0; j < mm; ++j) {
            for (Eigen::Index c = 0, k = 0; c < M; ++c)
                if (c != y) nontarget(j, k++) = member_probs[j](n, c);
            const double norm = nontarget.row(j).norm();
            if (norm > 0) nontarget.row(j) /= norm;
        }
        // Eigenvalues of the Gram matrix are the squared singular values of the
        // row matrix; the SVD keeps small ones accurate.
        svd.compute(nontarget);
        const Vector& sv = svd.singularValues();
        for (Eigen::Index k = 0; k < mm; ++k) {
            const double s = k < sv.size() ? sv(k) : 0.0;
            total += std::log(s * s + jitter);
        }
    }
    return total / static_cast<double>(first.rows());
}

std::string_view to_string(CalibrationLevel level) {
    return level == CalibrationLevel::member ? "member" : "mixture";
}

CalibrationLevel calibration_level_from_string(std::string_view s) {
    if (s == "member") return CalibrationLevel::member;
    if (s == "mixture") return CalibrationLevel::mixture;
    throw ParameterError("unknown calibration level '" + std::string(s) + "'");
}

Tensor calibrated_probs(std::span<const Tensor> member_logits, double temperature,
                        CalibrationLevel level) {
    if (!(temperature > 0)) throw ParameterError("temperature must be positive");
    if (level == CalibrationLevel::member) return average_softmax(member_logits, temperature);
    Tensor p = average_softmax(member_logits, 1.0);
    // p^(1/T) renormalized, evaluated as softmax(log p / T).
    const Tensor logp = p.array().max(kProbFloor * kProbFloor).log().matrix();
    return softmax(logp, temperature);
}

TemperatureFit temperature_scale(std::span<const Tensor> member_logits, std::span<const int> labels,
                                 CalibrationLevel level) {
    TemperatureFit fit;
    auto objective = [&](double log_t) {
        return nll(calibrated_probs(member_logits, std::exp(log_t), level), labels);
    };
    fit.nll_at_one = objective(0.0);
    fit.nll = fit.nll_at_one;
    const bool single_class =
        std::all_of(labels.begin(), labels.end(), [&](int y) { return y == labels.front(); });
    if (single_class) {
        fit.degenerate = true;
        return fit;
    }

    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = std::log(0.05);
    double b = std::log(20.0);
    double c = b - phi * (b - a);
    double d = a + phi * (b - a);
    double fc = objective(c);
    double fd = objective(d);
    while (b - a > 1e-4) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = objective(d);
        }
    }
    const double log_t = 0.5 * (a + b);
    const double best = objective(log_t);
    if (best < fit.nll_at_one) {
        fit.temperature = std::exp(log_t);
        fit.nll = best;
    }
    return fit;
}

const std::vector<std::string>& metrics_fields() {
    static const std::vector<std::string> fields{
        "accuracy",     "nll",     "brier",     "ece",
        "cal_nll",      "cal_brier", "cal_aac", "disagreement",
        "log_det",      "avg_member_accuracy", "optimal_temperature", "n_eval"};
    return fields;
}

std::vector<double> metrics_values(const MetricsReport& r) {
    return {r.accuracy,     r.nll,          r.brier,   r.ece,
            r.cal_nll,      r.cal_brier,    r.cal_aac, r.disagreement,
            r.log_det,      r.avg_member_accuracy, r.optimal_temperature,
            static_cast<double>(r.n_eval)};
}

namespace {

MetricsReport base_metrics(const std::vector<Tensor>& logits, const Dataset& test,
                           const EvalOptions& options) {
    MetricsReport r;
    const Tensor probs = average_softmax(logits);
    r.n_eval = static_cast<long>(test.size());
    r.accuracy = accuracy(probs, test.labels);
    r.nll = nll(probs, test.labels);
    r.brier = brier(probs, test.labels);
    r.ece = ece(probs, test.labels, options.n_bins);

    std::vector<Eigen::VectorXi> preds;
    std::vector<Tensor> member_probs;
    for (const auto& h : logits) {
        member_probs.push_back(softmax(h));
        preds.push_back(argmax_rows(h));
        r.avg_member_accuracy += accuracy(member_probs.back(), test.labels);
    }
    r.avg_member_accuracy /= static_cast<double>(logits.size());
    r.disagreement = logits.size() >= 2 ? disagreement(preds) : 0.0;
    r.log_det = log_det_diversity(member_probs, test.labels);
    r.cal_nll = r.nll;
    r.cal_brier = r.brier;
    r.cal_aac = cal_aac(probs, test.labels);
    return r;
}

} // namespace

MetricsReport evaluate_uncalibrated(const Ensemble& ens, const Dataset& test,
                                    const EvalOptions& options) {
    test.validate();
    return base_metrics(ens.member_logits(test.inputs), test, options);
}

MetricsReport evaluate(const Ensemble& ens, const Dataset& test, const Dataset& val,
                       const EvalOptions& options) {
    test.validate();
    val.validate();
    const auto logits = ens.member_logits(test.inputs);
    MetricsReport r = base_metrics(logits, test, options);
    const TemperatureFit fit =
        temperature_scale(ens.member_logits(val.inputs), val.labels, options.cal_level);
    r.optimal_temperature = fit.temperature;
    const Tensor cal = calibrated_probs(logits, fit.temperature, options.cal_level);
    r.cal_nll = nll(cal, test.labels);
    r.cal_brier = brier(cal, test.labels);
    r.cal_aac = cal_aac(cal, test.labels);
    return r;
}

} // namespace dash
