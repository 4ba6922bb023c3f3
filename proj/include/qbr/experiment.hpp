#pragma once

// One record per configuration: optimized retrieval values, the assistance
// gap and reference quantities, plus CSV/JSON writers for records and check
// reports.

#include "qbr/config.hpp"
#include "qbr/verify.hpp"

#include <json.hpp>

#include <optional>
#include <ostream>

namespace qbr {

inline constexpr const char* kVersion = "1.0.0";

struct Record {
    std::string config_hash;
    std::uint64_t seed = 0;
    double beta = 0.0;
    std::optional<double> alpha;  // |alpha| for the qubit family
    std::string battery_desc;
    double w_weak_raw = 0.0, w_weak_rescaled = 0.0, w_weak_clamped = 0.0;
    double w_strong_raw = 0.0, w_strong_rescaled = 0.0;
    double gap = 0.0;
    std::optional<double> eof_sR;  // two-qubit sigma_sR only
    double e_sigma = 0.0, f_sigma = 0.0;
    bool converged_weak = false, converged_strong = false;
};

/// Not part of the record schema; reported on the diagnostics stream.
struct Diagnostics {
    std::optional<double> weak_closed_form;
    std::string closed_form_method;
    std::size_t restarts_weak = 0, restarts_strong = 0;
};

inline const std::vector<std::string>& record_columns() {
    static const std::vector<std::string> cols{
        "config_hash",     "seed",   "beta",   "alpha",   "battery_desc", "w_weak_raw",     "w_weak_rescaled",
        "w_weak_clamped",  "w_strong_raw", "w_strong_rescaled", "gap", "eof_sR", "e_sigma", "f_sigma",
        "converged_weak", "converged_strong"};
    return cols;
}

inline Record compute_record(const RunConfig& c, std::size_t workers, Diagnostics* diag = nullptr) {
    const IsometricExtension ext = build_extension(c);
    const DensityOperator rho = build_battery(c);
    OptimizerSettings opt = c.optimizer;
    opt.workers = workers;

    const AssistanceGap g = assistance_gap(ext, rho, opt);
    const DensityOperator sigma = apply_extension(ext, rho);
    const DensityOperator sigma_s = partial_trace(sigma, {0});
    const InverseTemperature beta = ext.beta();

    Record r;
    r.config_hash = hex64(fnv1a(c.canonical().dump()));
    r.seed = c.optimizer.seed;
    r.beta = c.beta;
    if (c.extension.kind == "qubit-family") r.alpha = std::abs(c.extension.alpha);
    r.battery_desc = c.canonical()["battery"].dump();
    r.w_weak_raw = g.weak.value_raw;
    r.w_weak_rescaled = g.weak.value_rescaled;
    r.w_weak_clamped = g.weak.value_clamped;
    r.w_strong_raw = g.strong.value_raw;
    r.w_strong_rescaled = g.strong.value_rescaled;
    r.gap = g.gap;
    const DensityOperator sigma_sR = partial_trace(sigma, {0, 2});
    if (sigma_sR.dims() == Dims{2, 2}) r.eof_sR = eof_wootters(sigma_sR).value;
    r.e_sigma = energy(sigma_s, ext.hs());
    r.f_sigma = free_energy(sigma_s, ext.hs(), beta, Scale::raw);
    r.converged_weak = g.weak.converged;
    r.converged_strong = g.strong.converged;

    if (diag) {
        diag->restarts_weak = g.weak.restarts_used;
        diag->restarts_strong = g.strong.restarts_used;
        const std::size_t ds = ext.hs().dim(), db = ext.hb().dim();
        const bool pure = detail::is_pure(rho);
        const bool fits = pure ? ds * db <= 16 : ds * db * ds <= 16;
        if (fits) {
            EofSearchSettings es;
            es.seed = c.optimizer.seed;
            const ClosedFormResult cf = weak_closed_form(ext, rho, es);
            diag->weak_closed_form = cf.value;
            diag->closed_form_method = to_string(cf.eof.method);
        } else {
            diag->closed_form_method = "skipped (dimension cap)";
        }
    }
    return r;
}

/// Sweepable parameters: beta, alpha (qubit family, real alpha), angle
/// (pure qubit battery cos t |0> + sin t |1>), p (battery mixed with I/d).
inline const std::vector<std::string>& sweep_parameters() {
    static const std::vector<std::string> names{"beta", "alpha", "angle", "p"};
    return names;
}

/// The config with one parameter replaced; throws ConfigError when the
/// parameter does not apply.
inline RunConfig with_parameter(RunConfig c, const std::string& param, double v) {
    if (param == "beta") {
        if (!(v > 0.0)) throw ConfigError("sweep beta: values must be positive");
        c.beta = v;
    } else if (param == "alpha") {
        if (c.extension.kind != "qubit-family") throw ConfigError("sweep alpha: requires extension.kind = \"qubit-family\"");
        if (std::abs(v) > 1.0) throw ConfigError("sweep alpha: |alpha| must not exceed 1");
        c.extension.alpha = v;
    } else if (param == "angle") {
        if (c.battery.kind != "pure" || c.hamiltonian_s.size() != 2)
            throw ConfigError("sweep angle: requires a pure qubit battery");
        c.battery.amplitudes = {std::cos(v), std::sin(v)};
    } else if (param == "p") {
        if (v < 0.0 || v > 1.0) throw ConfigError("sweep p: values must lie in [0, 1]");
        const DensityOperator rho = build_battery(c);
        const auto d = static_cast<Eigen::Index>(rho.dim());
        const Matrix m = v * rho.matrix() + (1.0 - v) / static_cast<double>(d) * Matrix::Identity(d, d);
        Eigen::SelfAdjointEigenSolver<Matrix> es(m);
        c.battery = BatterySpec{};
        c.battery.kind = "mixed";
        for (Eigen::Index k = d; k-- > 0;) {
            c.battery.eigenvalues.push_back(std::max(0.0, es.eigenvalues()[k]));
            std::vector<cplx> vec;
            for (Eigen::Index i = 0; i < d; ++i) vec.push_back(es.eigenvectors()(i, k));
            c.battery.eigenvectors.push_back(std::move(vec));
        }
        double sum = 0.0;
        for (double x : c.battery.eigenvalues) sum += x;
        for (double& x : c.battery.eigenvalues) x /= sum;
    } else {
        throw ConfigError("unknown sweep parameter '" + param + "' (expected beta, alpha, angle or p)");
    }
    return c;
}

namespace detail {

inline std::string csv_number(double v) { return format_double(v); }

inline nlohmann::ordered_json json_number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return nullptr;
    return v;
}

}  // namespace detail

inline void write_records_csv(std::ostream& os, const std::vector<Record>& records) {
    const auto& cols = record_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << '\n';
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    for (const Record& r : records) {
        os << r.config_hash << ',' << r.seed << ',' << format_double(r.beta) << ',' << opt(r.alpha) << ','
           << csv_field(r.battery_desc) << ',' << format_double(r.w_weak_raw) << ',' << format_double(r.w_weak_rescaled)
           << ',' << format_double(r.w_weak_clamped) << ',' << format_double(r.w_strong_raw) << ','
           << format_double(r.w_strong_rescaled) << ',' << format_double(r.gap) << ',' << opt(r.eof_sR) << ','
           << format_double(r.e_sigma) << ',' << format_double(r.f_sigma) << ',' << (r.converged_weak ? "true" : "false")
           << ',' << (r.converged_strong ? "true" : "false") << '\n';
    }
}

/// Doubles go through the shortest round-trip text so JSON matches CSV.
inline void write_records_json(std::ostream& os, const std::vector<Record>& records) {
    using detail::json_number;
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const Record& r : records) {
        nlohmann::ordered_json o;
        o["config_hash"] = r.config_hash;
        o["seed"] = r.seed;
        o["beta"] = json_number(r.beta);
        o["alpha"] = r.alpha ? json_number(*r.alpha) : nullptr;
        o["battery_desc"] = r.battery_desc;
        o["w_weak_raw"] = json_number(r.w_weak_raw);
        o["w_weak_rescaled"] = json_number(r.w_weak_rescaled);
        o["w_weak_clamped"] = json_number(r.w_weak_clamped);
        o["w_strong_raw"] = json_number(r.w_strong_raw);
        o["w_strong_rescaled"] = json_number(r.w_strong_rescaled);
        o["gap"] = json_number(r.gap);
        o["eof_sR"] = r.eof_sR ? json_number(*r.eof_sR) : nullptr;
        o["e_sigma"] = json_number(r.e_sigma);
        o["f_sigma"] = json_number(r.f_sigma);
        o["converged_weak"] = r.converged_weak;
        o["converged_strong"] = r.converged_strong;
        arr.push_back(std::move(o));
    }
    os << arr.dump(2) << '\n';
}

/// Digest of every per-instance field, so equal CSV summaries imply equal
/// details.
inline std::string details_digest(const CheckReport& r) {
    std::string s;
    for (const auto& d : r.details) {
        s += std::to_string(d.index) + '|' + d.inputs + '|' + format_double(d.margin) + '|' + d.binding;
        for (const auto& [k, v] : d.values) s += '|' + k + '=' + format_double(v);
        s += '\n';
    }
    return hex64(fnv1a(s));
}

inline void write_reports_csv(std::ostream& os, const std::vector<CheckReport>& reports) {
    os << "check,instances,failures,worst_margin,tolerance,seed,status,details_digest\n";
    for (const auto& r : reports)
        os << r.check_name << ',' << r.instances << ',' << r.failures << ',' << format_double(r.worst_margin) << ','
           << format_double(r.tolerance) << ',' << r.seed << ',' << (r.passed() ? "pass" : "fail") << ','
           << details_digest(r) << '\n';
}

inline void write_reports_json(std::ostream& os, const std::vector<CheckReport>& reports) {
    using detail::json_number;
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        nlohmann::ordered_json o;
        o["check_name"] = r.check_name;
        o["instances"] = r.instances;
        o["failures"] = r.failures;
        o["worst_margin"] = json_number(r.worst_margin);
        o["tolerance"] = json_number(r.tolerance);
        o["seed"] = r.seed;
        o["status"] = r.passed() ? "pass" : "fail";
        nlohmann::ordered_json details = nlohmann::ordered_json::array();
        for (const auto& d : r.details) {
            nlohmann::ordered_json x;
            x["index"] = d.index;
            x["inputs_hash"] = d.inputs_hash;
            x["inputs"] = nlohmann::ordered_json::parse(d.inputs);
            x["margin"] = json_number(d.margin);
            x["binding"] = d.binding;
            nlohmann::ordered_json vals;
            for (const auto& [k, v] : d.values) vals[k] = json_number(v);
            x["values"] = std::move(vals);
            details.push_back(std::move(x));
        }
        o["details"] = std::move(details);
        arr.push_back(std::move(o));
    }
    os << arr.dump(2) << '\n';
}

}  // namespace qbr
