#pragma once

// JSON and CSV rendering of scenarios, optima and simulation statistics.

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rachopt/model.hpp"
#include "rachopt/optimizer.hpp"
#include "rachopt/simulator.hpp"

namespace rachopt {

using json = nlohmann::ordered_json;

inline Regime parse_regime(const std::string& s) {
    if (s == "ibl") return Regime::IBL;
    if (s == "fbl") return Regime::FBL;
    throw ConfigError("regime must be ibl or fbl, got '" + s + "'");
}

inline FadingKind parse_fading(const std::string& s) {
    if (s == "constant") return FadingKind::ConstantSnr;
    if (s == "rayleigh") return FadingKind::Rayleigh;
    throw ConfigError("fading must be constant or rayleigh, got '" + s + "'");
}

inline NuConvention parse_convention(const std::string& s) {
    if (s == "per-slot") return NuConvention::PerSlot;
    if (s == "per-frame") return NuConvention::PerFrame;
    throw ConfigError("nu convention must be per-slot or per-frame, got '" + s + "'");
}

inline OccupancyLaw parse_occupancy_law(const std::string& s) {
    if (s == "zero-truncated") return OccupancyLaw::ZeroTruncated;
    if (s == "device-view") return OccupancyLaw::DeviceView;
    throw ConfigError("occupancy law must be zero-truncated or device-view, got '" + s + "'");
}

inline json to_json(const Scenario& s) {
    json j;
    j["bandwidth_hz"] = s.bandwidth_hz;
    j["deadline_s"] = s.deadline_s;
    j["payload_bits"] = s.payload_bits;
    j["delta"] = s.outage_target;
    j["snr_db"] = snr_to_db(s.snr_linear);
    j["snr_linear"] = s.snr_linear;
    j["regime"] = to_string(s.regime);
    j["fading"] = to_string(s.fading.kind);
    if (s.fading.kind == FadingKind::Rayleigh) j["mu"] = s.fading.mean_inverse;
    j["symbol_budget"] = s.symbol_budget();
    return j;
}

/// Apply the keys of a flat JSON object onto a scenario. Unknown keys are
/// ignored so one file can also carry CLI-only settings.
inline void apply_json(Scenario& s, const json& j) {
    if (!j.is_object()) throw ConfigError("scenario document must be a JSON object");
    try {
        if (j.contains("bandwidth_hz")) s.bandwidth_hz = j.at("bandwidth_hz").get<double>();
        if (j.contains("deadline_s")) s.deadline_s = j.at("deadline_s").get<double>();
        if (j.contains("payload_bits")) s.payload_bits = j.at("payload_bits").get<int>();
        if (j.contains("delta")) s.outage_target = j.at("delta").get<double>();
        if (j.contains("snr_linear")) s.snr_linear = j.at("snr_linear").get<double>();
        if (j.contains("snr_db")) s.snr_linear = snr_from_db(j.at("snr_db").get<double>());
        if (j.contains("regime")) s.regime = parse_regime(j.at("regime").get<std::string>());
        if (j.contains("fading")) s.fading.kind = parse_fading(j.at("fading").get<std::string>());
        if (j.contains("mu")) s.fading.mean_inverse = j.at("mu").get<double>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad scenario value: ") + e.what());
    }
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

inline json to_json(const Optimum& o) {
    json j;
    j["method"] = to_string(o.method);
    j["nu_convention"] = to_string(o.convention);
    j["B_opt"] = o.bins;
    j["M_opt"] = o.attempts;
    j["block_length"] = o.block_length;
    j["lambda_opt"] = o.lambda_opt;
    j["lambda_M"] = o.lambda_aggregate;
    j["gamma"] = o.threshold;
    j["per_tfs_rate"] = o.per_tfs_rate;
    j["p_fail"] = o.p_fail;
    j["warnings"] = o.warnings;
    return j;
}

inline json to_json(const SimStats& s) {
    json j;
    j["arrivals_measured"] = s.arrivals_measured;
    j["failures"] = s.failures;
    j["p_fail_hat"] = s.p_fail_hat;
    j["binomial_stderr"] = s.binomial_stderr;
    j["per_attempt_success_histogram"] = s.per_attempt_success_histogram;
    j["mean_occupancy_per_tfs"] = s.mean_occupancy_per_tfs;
    j["mean_occupancy_seen"] = s.mean_occupancy_seen();
    j["slots_measured"] = s.slots_measured;
    j["warmup_slots"] = s.warmup_slots_used;
    return j;
}

// RFC 4180: quote a field when it holds a comma, quote, CR or LF.
inline std::string csv_escape(const std::string& f) {
    if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
    std::string out = "\"";
    for (char c : f) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline void write_csv_row(std::ostream& os, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) os << ',';
        os << csv_escape(fields[i]);
    }
    os << "\r\n";
}

inline std::vector<std::vector<std::string>> read_csv(std::istream& in) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    char c;
    while (in.get(c)) {
        any = true;
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field += '"';
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\r') {
            if (in.peek() == '\n') in.get(c);
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else if (c == '\n') {
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else {
            field += c;
        }
    }
    if (quoted) throw ConfigError("unterminated quoted CSV field");
    if (any) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline const std::vector<std::string>& sweep_csv_header() {
    static const std::vector<std::string> h{"swept_value", "regime", "fading",  "B_opt",
                                            "M_opt",       "lambda_opt", "lambda_M", "gamma",
                                            "method",      "arrivals_per_second"};
    return h;
}

struct SweepRow {
    double swept_value = 0.0;
    std::string regime;
    std::string fading;
    int bins = 0;
    int attempts = 0;
    double lambda_opt = 0.0;
    double lambda_aggregate = 0.0;
    double gamma = 0.0;
    std::string method;
    double arrivals_per_second = 0.0;

    [[nodiscard]] std::vector<std::string> fields() const {
        return {fmt_double(swept_value), regime, fading, std::to_string(bins), std::to_string(attempts),
                fmt_double(lambda_opt), fmt_double(lambda_aggregate), fmt_double(gamma), method,
                fmt_double(arrivals_per_second)};
    }

    static SweepRow parse(const std::vector<std::string>& f) {
        if (f.size() != sweep_csv_header().size()) throw ConfigError("sweep row has wrong field count");
        try {
            SweepRow r;
            r.swept_value = std::stod(f[0]);
            r.regime = f[1];
            r.fading = f[2];
            r.bins = std::stoi(f[3]);
            r.attempts = std::stoi(f[4]);
            r.lambda_opt = std::stod(f[5]);
            r.lambda_aggregate = std::stod(f[6]);
            r.gamma = std::stod(f[7]);
            r.method = f[8];
            r.arrivals_per_second = std::stod(f[9]);
            return r;
        } catch (const std::logic_error& e) {
            throw ConfigError(std::string("bad sweep row: ") + e.what());
        }
    }
};

inline std::vector<SweepRow> read_sweep_csv(std::istream& in) {
    const auto rows = read_csv(in);
    if (rows.empty() || rows.front() != sweep_csv_header())
        throw ConfigError("sweep CSV header mismatch");
    std::vector<SweepRow> out;
    for (std::size_t i = 1; i < rows.size(); ++i) out.push_back(SweepRow::parse(rows[i]));
    return out;
}

}  // namespace rachopt
