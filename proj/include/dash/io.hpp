#pragma once

#include "dash/adversarial.hpp"
#include "dash/bound.hpp"
#include "dash/data.hpp"
#include "dash/metrics.hpp"
#include "dash/optimizer.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dash {

using Json = nlohmann::ordered_json;

inline constexpr int kCheckpointVersion = 1;
inline constexpr const char* kCheckpointFormat = "dash-ensemble";

/// Shortest decimal form that parses back to the same double.
std::string format_number(double v);

/// RFC 4180 field quoting: fields containing a comma, quote or line break are
/// wrapped in quotes with inner quotes doubled.
std::string csv_field(const std::string& s);

// ---- TrainConfig -------------------------------------------------------

Json config_to_json(const TrainConfig& config);
/// Fields absent from the document keep their defaults. Unknown fields and
/// ill-typed or out-of-range values raise ConfigError naming the field.
TrainConfig config_from_json(const Json& doc, TrainConfig base = {});
TrainConfig load_config(const std::filesystem::path& path);

// ---- Checkpoint --------------------------------------------------------

struct Checkpoint {
    Ensemble ensemble;
    TrainConfig config;
    std::optional<Standardizer> standardizer;
};

Json checkpoint_to_json(const Checkpoint& ckpt);
/// Throws SchemaError when the document does not describe a valid ensemble.
Checkpoint checkpoint_from_json(const Json& doc);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// ---- Reports -----------------------------------------------------------

std::string train_report_csv(const TrainReport& report);

Json metrics_to_json(const MetricsReport& report);
/// Header line and one data row, columns in metrics_fields() order.
std::string metrics_csv(const MetricsReport& report);
std::string calibration_bins_csv(const std::vector<CalibrationBin>& bins);

Json bound_inputs_to_json(const BoundInputs& in);
BoundInputs bound_inputs_from_json(const Json& doc, BoundInputs base = {});
Json bound_breakdown_to_json(const BoundBreakdown& b);
/// Two columns, term,value; one row per reported term.
std::string bound_breakdown_csv(const BoundBreakdown& b);

std::string curve_csv(const std::vector<RobustPoint>& curve);

// ---- Files -------------------------------------------------------------

Json read_json(const std::filesystem::path& path);
/// Writes dump(2) plus a trailing newline.
void write_json(const Json& doc, const std::filesystem::path& path);
void write_text(const std::string& text, const std::filesystem::path& path);

} // namespace dash
