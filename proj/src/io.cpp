#include "dash/io.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace dash {

std::string format_number(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

// ---- TrainConfig -------------------------------------------------------

Json config_to_json(const TrainConfig& c) {
    Json j;
    j["rho1"] = c.rho1;
    j["rho2"] = c.rho2;
    j["gamma"] = c.gamma;
    j["gamma_c_mode"] = to_string(c.gamma_c_mode);
    j["gamma_c"] = c.gamma_c;
    j["tau"] = c.tau;
    j["alpha"] = c.alpha;
    j["eta"] = c.eta;
    j["momentum"] = c.momentum;
    j["weight_decay"] = c.weight_decay;
    j["epochs"] = c.epochs;
    j["batch_size"] = c.batch_size;
    j["seed"] = c.seed;
    j["optimizer"] = to_string(c.optimizer);
    j["update_order"] = to_string(c.update_order);
    j["descent_loss"] = to_string(c.descent_loss);
    j["members"] = c.members;
    j["hidden"] = c.hidden;
    j["activation"] = to_string(c.activation);
    j["diagnostics"] = c.diagnostics;
    return j;
}

namespace {

double get_real(const Json& doc, const char* field) {
    const Json& v = doc.at(field);
    if (!v.is_number()) throw ConfigError(field, "expected a number");
    return v.get<double>();
}

int get_int(const Json& doc, const char* field) {
    const Json& v = doc.at(field);
    if (!v.is_number_integer()) throw ConfigError(field, "expected an integer");
    const auto x = v.get<long long>();
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
        throw ConfigError(field, "integer out of range");
    return static_cast<int>(x);
}

template <class F>
auto get_enum(const Json& doc, const char* field, F parse) {
    const Json& v = doc.at(field);
    if (!v.is_string()) throw ConfigError(field, "expected a string");
    try {
        return parse(v.get<std::string>());
    } catch (const ParameterError& e) {
        throw ConfigError(field, e.what());
    }
}

std::vector<int> get_int_list(const Json& v, const char* field) {
    if (!v.is_array()) throw ConfigError(field, "expected an array of integers");
    std::vector<int> out;
    for (const auto& x : v) {
        if (!x.is_number_integer()) throw ConfigError(field, "expected an array of integers");
        out.push_back(x.get<int>());
    }
    return out;
}

} // namespace

TrainConfig config_from_json(const Json& doc, TrainConfig c) {
    if (!doc.is_object()) throw ConfigError("<root>", "expected a JSON object");
    static const std::set<std::string> known{
        "rho1",   "rho2",         "gamma",        "gamma_c_mode", "gamma_c", "tau",     "alpha",
        "eta",    "momentum",     "weight_decay", "epochs",       "batch_size", "seed", "optimizer",
        "update_order", "descent_loss", "members", "hidden",     "activation", "diagnostics"};
    for (const auto& [key, value] : doc.items())
        if (!known.contains(key)) throw ConfigError(key, "unknown field");

    const bool rho2_given = doc.contains("rho2");
    if (doc.contains("rho1")) c.rho1 = get_real(doc, "rho1");
    // rho2 follows rho1 unless set explicitly.
    c.rho2 = rho2_given ? get_real(doc, "rho2") : (doc.contains("rho1") ? c.rho1 : c.rho2);
    if (doc.contains("gamma")) c.gamma = get_real(doc, "gamma");
    if (doc.contains("gamma_c_mode")) c.gamma_c_mode = get_enum(doc, "gamma_c_mode", gamma_c_mode_from_string);
    if (doc.contains("gamma_c")) c.gamma_c = get_real(doc, "gamma_c");
    if (doc.contains("tau")) c.tau = get_real(doc, "tau");
    if (doc.contains("alpha")) c.alpha = get_real(doc, "alpha");
    if (doc.contains("eta")) c.eta = get_real(doc, "eta");
    if (doc.contains("momentum")) c.momentum = get_real(doc, "momentum");
    if (doc.contains("weight_decay")) c.weight_decay = get_real(doc, "weight_decay");
    if (doc.contains("epochs")) c.epochs = get_int(doc, "epochs");
    if (doc.contains("batch_size")) c.batch_size = get_int(doc, "batch_size");
    if (doc.contains("seed")) {
        const Json& v = doc.at("seed");
        if (!v.is_number_unsigned()) throw ConfigError("seed", "expected a nonnegative integer");
        c.seed = v.get<std::uint64_t>();
    }
    if (doc.contains("optimizer")) c.optimizer = get_enum(doc, "optimizer", optimizer_from_string);
    if (doc.contains("update_order")) c.update_order = get_enum(doc, "update_order", update_order_from_string);
    if (doc.contains("descent_loss")) c.descent_loss = get_enum(doc, "descent_loss", descent_loss_from_string);
    if (doc.contains("activation")) c.activation = get_enum(doc, "activation", activation_from_string);
    if (doc.contains("diagnostics")) {
        if (!doc.at("diagnostics").is_boolean()) throw ConfigError("diagnostics", "expected true or false");
        c.diagnostics = doc.at("diagnostics").get<bool>();
    }
    if (doc.contains("members")) c.members = get_int(doc, "members");
    if (doc.contains("hidden")) {
        const Json& h = doc.at("hidden");
        if (!h.is_array()) throw ConfigError("hidden", "expected a list of widths or one list per member");
        // A flat list is one architecture shared by every member.
        if (h.empty() || h.front().is_number()) {
            c.hidden.assign(static_cast<std::size_t>(std::max(c.members, 0)), get_int_list(h, "hidden"));
        } else {
            c.hidden.clear();
            for (const auto& layers : h) c.hidden.push_back(get_int_list(layers, "hidden"));
        }
    } else if (c.members >= 1 && c.hidden.size() != static_cast<std::size_t>(c.members)) {
        const std::vector<int> shared = c.hidden.empty() ? std::vector<int>{32, 32} : c.hidden.front();
        c.hidden.assign(static_cast<std::size_t>(c.members), shared);
    }
    c.validate();
    return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
    return config_from_json(read_json(path));
}

// ---- Checkpoint --------------------------------------------------------

namespace {

Json matrix_to_json(const Tensor& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Json vector_to_json(const Vector& v) {
    Json out = Json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
    return out;
}

Vector vector_from_json(const Json& j, Eigen::Index size, const std::string& where) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size)
        throw SchemaError(where + ": expected an array of " + std::to_string(size) + " numbers");
    Vector v(size);
    for (Eigen::Index k = 0; k < size; ++k) {
        const Json& x = j[static_cast<std::size_t>(k)];
        if (!x.is_number()) throw SchemaError(where + ": non-numeric entry");
        v(k) = x.get<double>();
    }
    return v;
}

Tensor matrix_from_json(const Json& j, Eigen::Index rows, Eigen::Index cols, const std::string& where) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
        throw SchemaError(where + ": expected " + std::to_string(rows) + " rows");
    Tensor m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        m.row(r) = vector_from_json(j[static_cast<std::size_t>(r)], cols, where).transpose();
    return m;
}

const Json& field(const Json& doc, const char* name, const std::string& where) {
    if (!doc.is_object() || !doc.contains(name))
        throw SchemaError(where + ": missing field '" + name + "'");
    return doc.at(name);
}

} // namespace

Json checkpoint_to_json(const Checkpoint& ckpt) {
    Json j;
    j["format"] = kCheckpointFormat;
    j["version"] = kCheckpointVersion;
    j["config"] = config_to_json(ckpt.config);
    if (ckpt.standardizer) {
        j["standardizer"]["mean"] = vector_to_json(ckpt.standardizer->mean);
        j["standardizer"]["scale"] = vector_to_json(ckpt.standardizer->scale);
    }
    Json members = Json::array();
    for (const auto& model : ckpt.ensemble.members()) {
        Json m;
        m["layer_sizes"] = model.layer_sizes();
        m["activation"] = to_string(model.activation());
        Json weights = Json::array();
        Json biases = Json::array();
        for (std::size_t l = 0; l < model.layer_count(); ++l) {
            weights.push_back(matrix_to_json(model.weight(l)));
            biases.push_back(vector_to_json(model.bias(l)));
        }
        m["weights"] = std::move(weights);
        m["biases"] = std::move(biases);
        members.push_back(std::move(m));
    }
    j["members"] = std::move(members);
    return j;
}

Checkpoint checkpoint_from_json(const Json& doc) {
    const std::string where = "checkpoint";
    const Json& format = field(doc, "format", where);
    if (!format.is_string() || format.get<std::string>() != kCheckpointFormat)
        throw SchemaError("checkpoint: format is not '" + std::string(kCheckpointFormat) + "'");
    const Json& version = field(doc, "version", where);
    if (!version.is_number_integer() || version.get<int>() != kCheckpointVersion)
        throw SchemaError("checkpoint: unsupported version");

    Checkpoint ckpt;
    try {
        ckpt.config = config_from_json(field(doc, "config", where));
    } catch (const ConfigError& e) {
        throw SchemaError(std::string("checkpoint: ") + e.what());
    }

    const Json& members = field(doc, "members", where);
    if (!members.is_array() || members.size() < 2)
        throw SchemaError("checkpoint: members must be an array of at least 2 models");
    std::vector<MlpModel> models;
    for (std::size_t i = 0; i < members.size(); ++i) {
        const std::string at = "checkpoint member " + std::to_string(i);
        const Json& m = members[i];
        const Json& sizes_j = field(m, "layer_sizes", at);
        std::vector<int> sizes;
        if (!sizes_j.is_array() || sizes_j.size() < 2) throw SchemaError(at + ": layer_sizes needs input and output");
        for (const auto& s : sizes_j) {
            if (!s.is_number_integer() || s.get<int>() < 1) throw SchemaError(at + ": layer sizes must be positive integers");
            sizes.push_back(s.get<int>());
        }
        const Json& act = field(m, "activation", at);
        if (!act.is_string()) throw SchemaError(at + ": activation must be a string");
        Activation activation;
        try {
            activation = activation_from_string(act.get<std::string>());
        } catch (const ParameterError& e) {
            throw SchemaError(at + ": " + e.what());
        }
        const Json& weights = field(m, "weights", at);
        const Json& biases = field(m, "biases", at);
        if (!weights.is_array() || !biases.is_array() || weights.size() != sizes.size() - 1 ||
            biases.size() != sizes.size() - 1)
            throw SchemaError(at + ": expected " + std::to_string(sizes.size() - 1) + " weight and bias entries");
        MlpModel model(sizes, activation);
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
            const std::string layer = at + " layer " + std::to_string(l);
            model.set_layer(l, matrix_from_json(weights[l], sizes[l], sizes[l + 1], layer),
                            vector_from_json(biases[l], sizes[l + 1], layer));
        }
        models.push_back(std::move(model));
    }
    try {
        ckpt.ensemble = Ensemble(std::move(models));
    } catch (const Error& e) {
        throw SchemaError(std::string("checkpoint: ") + e.what());
    }
    if (doc.contains("standardizer")) {
        const Json& s = doc.at("standardizer");
        const Eigen::Index d = ckpt.ensemble.input_dim();
        Standardizer st;
        st.mean = vector_from_json(field(s, "mean", "standardizer"), d, "standardizer mean");
        st.scale = vector_from_json(field(s, "scale", "standardizer"), d, "standardizer scale");
        ckpt.standardizer = std::move(st);
    }
    return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    write_json(checkpoint_to_json(ckpt), path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return checkpoint_from_json(read_json(path));
}

// ---- Reports -----------------------------------------------------------

namespace {

std::string optional_number(const std::optional<double>& v) {
    return v ? format_number(*v) : std::string();
}

} // namespace

std::string train_report_csv(const TrainReport& report) {
    const bool has_test = !report.epochs.empty() && report.epochs.front().test_accuracy.has_value();
    std::ostringstream out;
    out << "epoch,train_loss,diversity_loss,train_accuracy,train_member_accuracy";
    if (has_test) out << ",test_accuracy,test_member_accuracy";
    out << ",gamma_c,congruence\n";
    for (const auto& e : report.epochs) {
        out << e.epoch << ',' << format_number(e.train_loss) << ',' << format_number(e.diversity_loss) << ','
            << format_number(e.train_accuracy) << ',' << format_number(e.train_member_accuracy);
        if (has_test) out << ',' << optional_number(e.test_accuracy) << ',' << optional_number(e.test_member_accuracy);
        out << ',' << format_number(e.gamma_c) << ',' << format_number(e.congruence) << '\n';
    }
    return out.str();
}

Json metrics_to_json(const MetricsReport& report) {
    Json j;
    const auto& names = metrics_fields();
    const auto values = metrics_values(report);
    for (std::size_t k = 0; k < names.size(); ++k) {
        if (names[k] == "n_eval")
            j[names[k]] = report.n_eval;
        else
            j[names[k]] = values[k];
    }
    return j;
}

std::string metrics_csv(const MetricsReport& report) {
    const auto& names = metrics_fields();
    const auto values = metrics_values(report);
    std::string header;
    std::string row;
    for (std::size_t k = 0; k < names.size(); ++k) {
        header += (k ? "," : "") + names[k];
        row += (k ? "," : "") +
               (names[k] == "n_eval" ? std::to_string(report.n_eval) : format_number(values[k]));
    }
    return header + "\n" + row + "\n";
}

std::string calibration_bins_csv(const std::vector<CalibrationBin>& bins) {
    std::ostringstream out;
    out << "lower,upper,count,accuracy,confidence\n";
    for (const auto& b : bins)
        out << format_number(b.lower) << ',' << format_number(b.upper) << ',' << b.count << ','
            << format_number(b.accuracy) << ',' << format_number(b.confidence) << '\n';
    return out.str();
}

Json bound_inputs_to_json(const BoundInputs& in) {
    Json j;
    j["m"] = in.m;
    j["k"] = in.k;
    j["N"] = in.N;
    j["rho"] = in.rho;
    j["delta"] = in.delta;
    j["gamma"] = in.gamma;
    j["L"] = in.L;
    j["member_norms"] = in.member_norms;
    j["sharp_member_losses"] = in.sharp_member_losses;
    j["sharp_ensemble_loss"] = in.sharp_ensemble_loss;
    j["C"] = in.C;
    j["O1"] = in.O1;
    return j;
}

BoundInputs bound_inputs_from_json(const Json& doc, BoundInputs in) {
    if (!doc.is_object()) throw ConfigError("<root>", "expected a JSON object");
    static const std::set<std::string> known{"m", "k", "N", "rho", "delta", "gamma", "L", "member_norms",
                                             "sharp_member_losses", "sharp_ensemble_loss", "C", "O1"};
    for (const auto& [key, value] : doc.items())
        if (!known.contains(key)) throw ConfigError(key, "unknown field");
    auto real_list = [&](const char* name) {
        const Json& v = doc.at(name);
        if (!v.is_array()) throw ConfigError(name, "expected an array of numbers");
        std::vector<double> out;
        for (const auto& x : v) {
            if (!x.is_number()) throw ConfigError(name, "expected an array of numbers");
            out.push_back(x.get<double>());
        }
        return out;
    };
    if (doc.contains("m")) in.m = get_int(doc, "m");
    if (doc.contains("k")) in.k = get_int(doc, "k");
    if (doc.contains("N")) in.N = get_int(doc, "N");
    if (doc.contains("rho")) in.rho = get_real(doc, "rho");
    if (doc.contains("delta")) in.delta = get_real(doc, "delta");
    if (doc.contains("gamma")) in.gamma = get_real(doc, "gamma");
    if (doc.contains("L")) in.L = get_real(doc, "L");
    if (doc.contains("member_norms")) in.member_norms = real_list("member_norms");
    if (doc.contains("sharp_member_losses")) in.sharp_member_losses = real_list("sharp_member_losses");
    if (doc.contains("sharp_ensemble_loss")) in.sharp_ensemble_loss = get_real(doc, "sharp_ensemble_loss");
    if (doc.contains("C")) in.C = get_real(doc, "C");
    if (doc.contains("O1")) in.O1 = get_real(doc, "O1");
    return in;
}

Json bound_breakdown_to_json(const BoundBreakdown& b) {
    Json j;
    j["sharp_term_ensemble"] = b.sharp_term_ensemble;
    j["sharp_term_members"] = b.sharp_term_members;
    j["prefactor"] = b.prefactor;
    j["complexity_log_term"] = b.complexity_log_term;
    j["member_kl_terms"] = b.member_kl_terms;
    j["ensemble_kl_term"] = b.ensemble_kl_term;
    j["complexity"] = b.complexity;
    j["total"] = b.total;
    return j;
}

std::string bound_breakdown_csv(const BoundBreakdown& b) {
    std::ostringstream out;
    out << "term,value\n";
    out << "sharp_term_ensemble," << format_number(b.sharp_term_ensemble) << '\n';
    out << "sharp_term_members," << format_number(b.sharp_term_members) << '\n';
    out << "prefactor," << format_number(b.prefactor) << '\n';
    out << "complexity_log_term," << format_number(b.complexity_log_term) << '\n';
    for (std::size_t i = 0; i < b.member_kl_terms.size(); ++i)
        out << "member_kl_term_" << i << ',' << format_number(b.member_kl_terms[i]) << '\n';
    out << "ensemble_kl_term," << format_number(b.ensemble_kl_term) << '\n';
    out << "complexity," << format_number(b.complexity) << '\n';
    out << "total," << format_number(b.total) << '\n';
    return out.str();
}

std::string curve_csv(const std::vector<RobustPoint>& curve) {
    std::ostringstream out;
    out << "epsilon,accuracy\n";
    for (const auto& p : curve) out << format_number(p.epsilon) << ',' << format_number(p.accuracy) << '\n';
    return out.str();
}

// ---- Files -------------------------------------------------------------

Json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw SchemaError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void write_json(const Json& doc, const std::filesystem::path& path) {
    write_text(doc.dump(2) + "\n", path);
}

void write_text(const std::string& text, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

} // namespace dash
