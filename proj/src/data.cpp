#include "dash/data.hpp"

#include "dash/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

namespace dash {

void Dataset::refresh_bounds() {
    if (inputs.rows() == 0) {
        feature_min.resize(inputs.cols());
        feature_max.resize(inputs.cols());
        return;
    }
    feature_min = inputs.colwise().minCoeff().transpose();
    feature_max = inputs.colwise().maxCoeff().transpose();
}

void Dataset::validate() const {
    if (inputs.rows() < 1) throw DataError("dataset: no rows");
    if (static_cast<Eigen::Index>(labels.size()) != inputs.rows())
        throw DataError("dataset: " + std::to_string(labels.size()) + " labels for " +
                        std::to_string(inputs.rows()) + " rows");
    for (std::size_t r = 0; r < labels.size(); ++r)
        if (labels[r] < 0 || labels[r] >= classes)
            throw DataError("dataset: label " + std::to_string(labels[r]) + " at row " +
                            std::to_string(r) + " outside [0, " + std::to_string(classes) + ")");
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
    Dataset out;
    out.inputs.resize(static_cast<Eigen::Index>(rows.size()), inputs.cols());
    out.labels.reserve(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        out.inputs.row(static_cast<Eigen::Index>(k)) = inputs.row(rows[k]);
        out.labels.push_back(labels[static_cast<std::size_t>(rows[k])]);
    }
    out.classes = classes;
    out.label_names = label_names;
    out.feature_names = feature_names;
    out.refresh_bounds();
    return out;
}

Batch Dataset::batch(const std::vector<Eigen::Index>& rows) const {
    Batch b;
    b.inputs.resize(static_cast<Eigen::Index>(rows.size()), inputs.cols());
    b.labels.reserve(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        b.inputs.row(static_cast<Eigen::Index>(k)) = inputs.row(rows[k]);
        b.labels.push_back(labels[static_cast<std::size_t>(rows[k])]);
    }
    return b;
}

Dataset gen_two_moons(int n, double noise_sd, std::uint64_t seed) {
    if (n < 2 || n % 2 != 0) throw ParameterError("two-moons: n must be even and at least 2");
    if (!(noise_sd >= 0)) throw ParameterError("two-moons: noise_sd must be nonnegative");
    const int half = n / 2;
    Dataset d;
    d.classes = 2;
    d.inputs.resize(n, 2);
    d.labels.resize(static_cast<std::size_t>(n));
    Rng rng(seed);
    for (int k = 0; k < half; ++k) {
        const double t = half == 1 ? 0.0 : std::numbers::pi * k / (half - 1);
        d.inputs.row(k) << std::cos(t), std::sin(t);
        d.labels[static_cast<std::size_t>(k)] = 0;
        d.inputs.row(half + k) << 1.0 - std::cos(t), 0.5 - std::sin(t);
        d.labels[static_cast<std::size_t>(half + k)] = 1;
    }
    if (noise_sd > 0)
        for (Eigen::Index r = 0; r < d.inputs.rows(); ++r)
            for (Eigen::Index c = 0; c < 2; ++c) d.inputs(r, c) += noise_sd * rng.normal();
    d.feature_names = {"x0", "x1"};
    d.refresh_bounds();
    return d;
}

Dataset gen_spirals(int n, double turns, double noise_sd, int classes, std::uint64_t seed) {
    if (classes < 2) throw ParameterError("spirals: classes must be at least 2");
    if (n < classes || n % classes != 0)
        throw ParameterError("spirals: n must be a positive multiple of classes");
    if (!(turns > 0)) throw ParameterError("spirals: turns must be positive");
    if (!(noise_sd >= 0)) throw ParameterError("spirals: noise_sd must be nonnegative");
    const int per_class = n / classes;
    Dataset d;
    d.classes = classes;
    d.inputs.resize(n, 2);
    d.labels.resize(static_cast<std::size_t>(n));
    Rng rng(seed);
    for (int c = 0; c < classes; ++c) {
        for (int j = 0; j < per_class; ++j) {
            const double r = static_cast<double>(j + 1) / per_class;
            const double angle = 2.0 * std::numbers::pi * (turns * r + static_cast<double>(c) / classes);
            const int row = c * per_class + j;
            d.inputs.row(row) << r * std::cos(angle), r * std::sin(angle);
            d.labels[static_cast<std::size_t>(row)] = c;
        }
    }
    if (noise_sd > 0)
        for (Eigen::Index r = 0; r < d.inputs.rows(); ++r)
            for (Eigen::Index c = 0; c < 2; ++c) d.inputs(r, c) += noise_sd * rng.normal();
    d.feature_names = {"x0", "x1"};
    d.refresh_bounds();
    return d;
}

namespace {

std::vector<std::string> split_line(const std::string& line, char delimiter) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, delimiter)) cells.push_back(cell);
    if (!line.empty() && line.back() == delimiter) cells.emplace_back();
    return cells;
}

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* begin = s.data();
    if (*begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_label_int(const std::string& s, long& out) {
    if (s.empty()) return false;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && out >= 0;
}

} // namespace

Dataset load_delimited(const std::filesystem::path& path, int label_column, char delimiter) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file '" + path.string() + "'");

    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto cells = split_line(line, delimiter);
        for (auto& c : cells) c = trim(c);
        rows.push_back(std::move(cells));
        line_numbers.push_back(lineno);
    }
    if (rows.empty()) throw DataError("data file '" + path.string() + "' is empty");

    const std::size_t width = rows.front().size();
    if (width < 2) throw DataError("data file needs at least one feature and one label column");
    const int lc = label_column < 0 ? static_cast<int>(width) + label_column : label_column;
    if (lc < 0 || lc >= static_cast<int>(width))
        throw DataError("label column " + std::to_string(label_column) + " out of range for " +
                        std::to_string(width) + " columns");
    for (std::size_t r = 0; r < rows.size(); ++r)
        if (rows[r].size() != width)
            throw DataError("ragged row at line " + std::to_string(line_numbers[r]) + ": " +
                            std::to_string(rows[r].size()) + " cells, expected " +
                            std::to_string(width));

    Dataset d;
    std::size_t first = 0;
    {
        double tmp;
        bool header = false;
        for (std::size_t c = 0; c < width; ++c)
            if (static_cast<int>(c) != lc && !parse_double(rows[0][c], tmp)) header = true;
        if (header) {
            for (std::size_t c = 0; c < width; ++c)
                if (static_cast<int>(c) != lc) d.feature_names.push_back(rows[0][c]);
            first = 1;
        }
    }
    const auto n = static_cast<Eigen::Index>(rows.size() - first);
    if (n == 0) throw DataError("data file '" + path.string() + "' has a header but no rows");
    const auto dim = static_cast<Eigen::Index>(width - 1);
    if (d.feature_names.empty())
        for (Eigen::Index c = 0; c < dim; ++c) d.feature_names.push_back("x" + std::to_string(c));

    d.inputs.resize(n, dim);
    std::vector<std::string> raw_labels;
    raw_labels.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& cells = rows[first + static_cast<std::size_t>(r)];
        Eigen::Index fc = 0;
        for (std::size_t c = 0; c < width; ++c) {
            if (static_cast<int>(c) == lc) {
                if (cells[c].empty())
                    throw DataError("empty label at line " +
                                    std::to_string(line_numbers[first + static_cast<std::size_t>(r)]));
                raw_labels.push_back(cells[c]);
                continue;
            }
            double v;
            if (!parse_double(cells[c], v))
                throw DataError("non-numeric feature '" + cells[c] + "' at line " +
                                std::to_string(line_numbers[first + static_cast<std::size_t>(r)]) +
                                ", column " + std::to_string(c + 1));
            d.inputs(r, fc++) = v;
        }
    }

    // Label mapping.
    bool numeric = true;
    std::vector<long> ints(raw_labels.size());
    for (std::size_t k = 0; k < raw_labels.size() && numeric; ++k)
        numeric = parse_label_int(raw_labels[k], ints[k]);
    std::map<std::string, int> index;
    const long max_label = numeric && !ints.empty() ? *std::max_element(ints.begin(), ints.end()) : 0;
    if (numeric && max_label < kMaxIdentityLabel) {
        // Integer labels are class ids as written, so files holding a subset
        // of the classes stay consistent with each other.
        for (long v = 0; v <= max_label; ++v) d.label_names.push_back(std::to_string(v));
        for (long v : ints) d.labels.push_back(static_cast<int>(v));
    } else if (numeric) {
        std::map<long, int> dense;
        for (long v : ints) dense.emplace(v, 0);
        for (auto& [value, id] : dense) {
            id = static_cast<int>(d.label_names.size());
            d.label_names.push_back(std::to_string(value));
        }
        for (long v : ints) d.labels.push_back(dense.at(v));
    } else {
        for (const auto& s : raw_labels) {
            auto [it, inserted] = index.emplace(s, static_cast<int>(d.label_names.size()));
            if (inserted) d.label_names.push_back(s);
            d.labels.push_back(it->second);
        }
    }
    d.classes = static_cast<int>(d.label_names.size());
    d.refresh_bounds();
    return d;
}

void save_delimited(const Dataset& data, const std::filesystem::path& path, char delimiter) {
    data.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write data file '" + path.string() + "'");
    for (Eigen::Index c = 0; c < data.dim(); ++c)
        out << (static_cast<std::size_t>(c) < data.feature_names.size() ? data.feature_names[c]
                                                                        : "x" + std::to_string(c))
            << delimiter;
    out << "label\n";
    for (Eigen::Index r = 0; r < data.size(); ++r) {
        for (Eigen::Index c = 0; c < data.dim(); ++c) out << format_number(data.inputs(r, c)) << delimiter;
        const int y = data.labels[static_cast<std::size_t>(r)];
        if (static_cast<std::size_t>(y) < data.label_names.size())
            out << data.label_names[y];
        else
            out << y;
        out << '\n';
    }
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

namespace {

// Part sizes for n rows: floor(n f_k), then leftovers to train, val, test in turn
// (only parts with a positive fraction receive leftovers).
std::array<std::size_t, 3> part_sizes(std::size_t n, const std::array<double, 3>& f) {
    std::array<std::size_t, 3> sizes{};
    std::size_t used = 0;
    for (int k = 0; k < 3; ++k) {
        sizes[k] = static_cast<std::size_t>(std::floor(static_cast<double>(n) * f[k] + 1e-9));
        used += sizes[k];
    }
    for (int k = 0; used < n; k = (k + 1) % 3) {
        if (f[k] > 0) {
            ++sizes[k];
            ++used;
        }
    }
    return sizes;
}

void shuffle(std::vector<Eigen::Index>& v, Rng& rng) {
    for (std::size_t k = v.size(); k > 1; --k) std::swap(v[k - 1], v[rng.below(k)]);
}

} // namespace

std::array<std::vector<Eigen::Index>, 3> split_indices(const Dataset& data,
                                                       std::array<double, 3> fractions,
                                                       std::uint64_t seed, bool stratified) {
    data.validate();
    double sum = 0.0;
    for (double f : fractions) {
        if (!(f >= 0.0)) throw ParameterError("split: fractions must be nonnegative");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ParameterError("split: fractions must sum to 1");

    std::array<std::vector<Eigen::Index>, 3> parts;
    Rng rng(seed);
    if (!stratified) {
        std::vector<Eigen::Index> all(static_cast<std::size_t>(data.size()));
        std::iota(all.begin(), all.end(), Eigen::Index{0});
        shuffle(all, rng);
        const auto sizes = part_sizes(all.size(), fractions);
        std::size_t pos = 0;
        for (int k = 0; k < 3; ++k) {
            parts[k].assign(all.begin() + pos, all.begin() + pos + sizes[k]);
            pos += sizes[k];
        }
        return parts;
    }

    const auto nonzero = static_cast<std::size_t>(
        std::count_if(fractions.begin(), fractions.end(), [](double f) { return f > 0; }));
    std::vector<std::vector<Eigen::Index>> by_class(static_cast<std::size_t>(data.classes));
    for (Eigen::Index r = 0; r < data.size(); ++r)
        by_class[static_cast<std::size_t>(data.labels[r])].push_back(r);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& rows = by_class[c];
        if (rows.empty()) continue;
        if (rows.size() < nonzero)
            throw ParameterError("split: class " + std::to_string(c) + " has " +
                                 std::to_string(rows.size()) + " samples, fewer than " +
                                 std::to_string(nonzero) + " splits");
        shuffle(rows, rng);
        const auto sizes = part_sizes(rows.size(), fractions);
        std::size_t pos = 0;
        for (int k = 0; k < 3; ++k) {
            parts[k].insert(parts[k].end(), rows.begin() + pos, rows.begin() + pos + sizes[k]);
            pos += sizes[k];
        }
    }
    return parts;
}

SplitResult split(const Dataset& data, std::array<double, 3> fractions, std::uint64_t seed,
                  bool stratified) {
    const auto parts = split_indices(data, fractions, seed, stratified);
    return SplitResult{data.subset(parts[0]), data.subset(parts[1]), data.subset(parts[2])};
}

Standardizer Standardizer::fit(const Dataset& data) {
    data.validate();
    Standardizer s;
    s.mean = data.inputs.colwise().mean().transpose();
    const Tensor centered = data.inputs.rowwise() - s.mean.transpose();
    s.scale = (centered.array().square().colwise().sum() / static_cast<double>(data.size()))
                  .sqrt()
                  .transpose();
    for (Eigen::Index c = 0; c < s.scale.size(); ++c)
        if (s.scale(c) == 0.0) s.scale(c) = 1.0;
    return s;
}

Dataset Standardizer::apply(const Dataset& data) const {
    if (data.dim() != mean.size()) throw DimensionError("standardize: feature count differs");
    Dataset out = data;
    out.inputs = ((data.inputs.rowwise() - mean.transpose()).array().rowwise() /
                  scale.transpose().array())
                     .matrix();
    out.refresh_bounds();
    return out;
}

} // namespace dash
