#pragma once

#include "dash/model.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dash {

struct Dataset {
    Tensor inputs;              // [n x d]
    std::vector<int> labels;    // each in [0, classes)
    int classes = 0;
    Vector feature_min;         // per-column bounds
    Vector feature_max;
    std::vector<std::string> label_names; // label_names[k] is the source label mapped to k
    std::vector<std::string> feature_names;

    Eigen::Index size() const { return inputs.rows(); }
    Eigen::Index dim() const { return inputs.cols(); }

    /// Recompute feature_min/feature_max from the data.
    void refresh_bounds();
    /// Throws on empty data, label/row count mismatch or out-of-range labels.
    void validate() const;

    Dataset subset(const std::vector<Eigen::Index>& rows) const;
    Batch batch(const std::vector<Eigen::Index>& rows) const;
    Batch as_batch() const { return Batch{inputs, labels}; }
};

/// Two interleaved half circles. Class 0: (cos t, sin t); class 1:
/// (1 - cos t, 0.5 - sin t); t evenly spaced on [0, pi] with n/2 points per
/// class, then isotropic Gaussian noise of standard deviation noise_sd.
Dataset gen_two_moons(int n, double noise_sd, std::uint64_t seed);

/// `classes` interleaved Archimedean spiral arms, n/classes points each. Point
/// j of arm c has radius r = (j + 1) / per_class and angle
/// 2 pi (turns r + c / classes), plus Gaussian noise.
Dataset gen_spirals(int n, double turns, double noise_sd, int classes, std::uint64_t seed);

inline constexpr long kMaxIdentityLabel = 1 << 16;

/// Delimited text reader. Any non-numeric feature cell in the first row marks
/// it as a header. Nonnegative integer labels below kMaxIdentityLabel are used
/// as class ids directly (M = max + 1); larger integers are ranked in numeric
/// order; any other label set is mapped to [0, M) in first-appearance order.
/// A negative label_column counts from the end.
Dataset load_delimited(const std::filesystem::path& path, int label_column = -1, char delimiter = ',');

/// Writes a header row (feature names and "label") followed by one row per
/// sample, numbers in shortest round-trip form. Labels are written as their
/// source names when present, otherwise as dense integers.
void save_delimited(const Dataset& data, const std::filesystem::path& path, char delimiter = ',');

struct SplitResult {
    Dataset train;
    Dataset val;
    Dataset test;
};

/// Seeded shuffle then split by fractions (train, val, test). Each part gets
/// floor(n f); leftover rows go to train, val, test in turn. Stratified mode
/// applies the same rule per class.
SplitResult split(const Dataset& data, std::array<double, 3> fractions, std::uint64_t seed,
                  bool stratified);

/// Row indices of each part, before materialization (used by tests).
std::array<std::vector<Eigen::Index>, 3> split_indices(const Dataset& data,
                                                       std::array<double, 3> fractions,
                                                       std::uint64_t seed, bool stratified);

/// Zero-mean, unit-variance transform fitted on one dataset.
struct Standardizer {
    Vector mean;
    Vector scale;

    static Standardizer fit(const Dataset& data);
    Dataset apply(const Dataset& data) const;
};

} // namespace dash
