#pragma once

#include "dash/model.hpp"

#include <span>
#include <string>
#include <vector>

namespace dash {

struct Dataset;

inline constexpr double kProbFloor = 1e-12;
inline constexpr double kGramJitter = 1e-12;
inline constexpr int kDefaultBins = 15;

double accuracy(const Tensor& probs, std::span<const int> labels);

/// Mean of -log max(p_y, 1e-12).
double nll(const Tensor& probs, std::span<const int> labels);

/// Mean over samples of sum_c (p_c - [c == y])^2.
double brier(const Tensor& probs, std::span<const int> labels);

/// Equal-width bins on the max probability; a confidence c falls in bin
/// ceil(c * bins) - 1, clamped to [0, bins - 1], so bins are (lo, hi] with 0
/// placed in the first bin.
double ece(const Tensor& probs, std::span<const int> labels, int n_bins = kDefaultBins);

struct CalibrationBin {
    double lower = 0.0;
    double upper = 0.0;
    int count = 0;
    double accuracy = 0.0;
    double confidence = 0.0;
};

/// Per-bin table behind ece(), for reliability plots.
std::vector<CalibrationBin> calibration_bins(const Tensor& probs, std::span<const int> labels,
                                             int n_bins = kDefaultBins);

/// Error-rate area under the confidence rejection curve. Samples are ranked by
/// descending max probability (stable on ties); for k = 0..n-1 the error rate
/// of the n - k most confident samples is averaged. Lower is better.
double cal_aac(const Tensor& probs, std::span<const int> labels);

/// Mean over unordered member pairs of the fraction of samples whose argmax
/// predictions differ.
double disagreement(std::span<const Eigen::VectorXi> member_predictions);

/// Mean over samples of log det(G + eps I), G the Gram matrix of the members'
/// L2-normalized non-target probability vectors (true-class entry removed).
/// `member_probs[j]` is member j's [n x M] probability table.
double log_det_diversity(std::span<const Tensor> member_probs, std::span<const int> labels,
                         double jitter = kGramJitter);

/// Where the calibration temperature is applied.
enum class CalibrationLevel {
    member,  // softmax(h_j / T) per member, then averaged
    mixture, // p_ens^(1/T), renormalized
};

std::string_view to_string(CalibrationLevel level);
CalibrationLevel calibration_level_from_string(std::string_view s);

/// Ensemble probabilities at temperature T.
Tensor calibrated_probs(std::span<const Tensor> member_logits, double temperature,
                        CalibrationLevel level = CalibrationLevel::member);

struct TemperatureFit {
    double temperature = 1.0;
    double nll = 0.0;          // validation NLL at the returned temperature
    double nll_at_one = 0.0;   // validation NLL at T = 1
    bool degenerate = false;   // validation labels had a single class; T = 1
};

/// Golden-section search on log T over [log 0.05, log 20] to 1e-4 in log T.
/// T = 1 is returned whenever it is at least as good as the search result.
TemperatureFit temperature_scale(std::span<const Tensor> member_logits, std::span<const int> labels,
                                 CalibrationLevel level = CalibrationLevel::member);

struct MetricsReport {
    double accuracy = 0.0;
    double nll = 0.0;
    double brier = 0.0;
    double ece = 0.0;
    double cal_nll = 0.0;
    double cal_brier = 0.0;
    double cal_aac = 0.0;
    double disagreement = 0.0;
    double log_det = 0.0;
    double avg_member_accuracy = 0.0;
    double optimal_temperature = 1.0;
    long n_eval = 0;
};

/// Column order of the CSV row and JSON object.
const std::vector<std::string>& metrics_fields();
std::vector<double> metrics_values(const MetricsReport& report);

struct EvalOptions {
    int n_bins = kDefaultBins;
    CalibrationLevel cal_level = CalibrationLevel::member;
};

/// Full metric suite on `test`; the temperature is fitted on `val`.
MetricsReport evaluate(const Ensemble& ens, const Dataset& test, const Dataset& val,
                       const EvalOptions& options = {});

/// Metrics that need no calibration split (calibrated fields left at the
/// uncalibrated values, T = 1).
MetricsReport evaluate_uncalibrated(const Ensemble& ens, const Dataset& test,
                                    const EvalOptions& options = {});

} // namespace dash
