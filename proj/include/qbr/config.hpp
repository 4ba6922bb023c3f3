#pragma once

// Run configuration: flat "key = <json value>" files or a JSON object, with
// strict validation. Errors carry the line of the offending key when the
// input was flat.

#include "qbr/channel.hpp"
#include "qbr/format.hpp"
#include "qbr/retrieval.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <sstream>

namespace qbr {

class ConfigError : public Error {
  public:
    using Error::Error;
};

struct ExtensionSpec {
    std::string kind;  // "qubit-family" | "random-block"
    cplx alpha{0.0, 0.0};
    cplx gamma_phase{1.0, 0.0};
    std::uint64_t seed = 0;
};

struct BatterySpec {
    std::string kind;  // "pure" | "mixed" | "random"
    std::vector<cplx> amplitudes;
    std::vector<double> eigenvalues;
    std::vector<std::vector<cplx>> eigenvectors;
    double purity = 1.0;
    std::uint64_t seed = 0;
};

struct RunConfig {
    std::vector<double> hamiltonian_s{0.0, 1.0};
    std::vector<double> hamiltonian_b{0.0, 1.0};
    double beta = 1.0;  // +inf for absolute zero
    ExtensionSpec extension;
    BatterySpec battery;
    OptimizerSettings optimizer;
    std::string format = "csv";
    std::string path;  // empty: stdout

    /// Canonical JSON (sorted keys) of everything that affects the numbers.
    nlohmann::json canonical() const;
};

namespace detail {

using json = nlohmann::json;

/// Where each flat key came from, for error messages.
class KeyLines {
  public:
    void set(const std::string& key, std::size_t line) { lines_[key] = line; }

    std::string where(const std::string& key) const {
        const auto it = lines_.find(key);
        if (it != lines_.end()) return "line " + std::to_string(it->second) + ": " + key;
        return key;
    }

  private:
    std::map<std::string, std::size_t> lines_;
};

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Drops a trailing "# comment" that is not inside a string.
inline std::string strip_comment(const std::string& s) {
    bool in_string = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_string = !in_string;
        if (s[i] == '#' && !in_string) return s.substr(0, i);
    }
    return s;
}

inline void insert_dotted(json& root, const std::string& key, json value) {
    json* node = &root;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("empty key segment in '" + key + "'");
        if (dot == std::string::npos) {
            (*node)[part] = std::move(value);
            return;
        }
        json& next = (*node)[part];
        if (next.is_null()) next = json::object();
        if (!next.is_object()) throw ConfigError("'" + key + "' conflicts with a scalar key");
        node = &next;
        start = dot + 1;
    }
}

inline void collect_keys(const json& j, const std::string& prefix, std::vector<std::string>& out) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (it->is_object())
            collect_keys(*it, key, out);
        else
            out.push_back(key);
    }
}

class Reader {
  public:
    Reader(const json& root, const KeyLines& lines) : root_(root), lines_(lines) {}

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        throw ConfigError(lines_.where(key) + ": " + msg);
    }

    const json* find(const std::string& key) const {
        const json* node = &root_;
        std::size_t start = 0;
        while (true) {
            const auto dot = key.find('.', start);
            const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (!node->is_object() || !node->contains(part)) return nullptr;
            node = &(*node)[part];
            if (dot == std::string::npos) return node;
            start = dot + 1;
        }
    }

    const json& need(const std::string& key) const {
        const json* j = find(key);
        if (!j) fail(key, "missing required key");
        return *j;
    }

    double real(const std::string& key, const json& j) const {
        if (!j.is_number()) fail(key, "expected a number, got " + j.dump());
        const double v = j.get<double>();
        if (!std::isfinite(v)) fail(key, "number must be finite");
        return v;
    }

    double real(const std::string& key) const { return real(key, need(key)); }

    std::uint64_t integer(const std::string& key, const json& j) const {
        if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<std::int64_t>() < 0))
            fail(key, "expected a nonnegative integer, got " + j.dump());
        return j.get<std::uint64_t>();
    }

    std::uint64_t integer(const std::string& key) const { return integer(key, need(key)); }

    std::string string(const std::string& key) const {
        const json& j = need(key);
        if (!j.is_string()) fail(key, "expected a string, got " + j.dump());
        return j.get<std::string>();
    }

    /// [re, im] pair or a plain real number.
    cplx complex(const std::string& key, const json& j) const {
        if (j.is_number()) return {real(key, j), 0.0};
        if (!j.is_array() || j.size() != 2) fail(key, "expected a complex value [re, im], got " + j.dump());
        return {real(key, j[0]), real(key, j[1])};
    }

    std::vector<double> reals(const std::string& key) const {
        const json& j = need(key);
        if (!j.is_array()) fail(key, "expected a list of numbers, got " + j.dump());
        std::vector<double> out;
        for (const json& x : j) out.push_back(real(key, x));
        return out;
    }

    std::vector<cplx> complexes(const std::string& key, const json& j) const {
        if (!j.is_array()) fail(key, "expected a list of complex values, got " + j.dump());
        std::vector<cplx> out;
        for (const json& x : j) out.push_back(complex(key, x));
        return out;
    }

  private:
    const json& root_;
    const KeyLines& lines_;
};

inline json complex_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

}  // namespace detail

inline nlohmann::json RunConfig::canonical() const {
    using detail::complex_to_json;
    using json = nlohmann::json;
    json j;
    j["hamiltonian_s"] = hamiltonian_s;
    j["hamiltonian_b"] = hamiltonian_b;
    j["beta"] = std::isinf(beta) ? json("inf") : json(beta);
    j["extension"]["kind"] = extension.kind;
    if (extension.kind == "qubit-family") {
        j["extension"]["alpha"] = complex_to_json(extension.alpha);
        j["extension"]["gamma_phase"] = complex_to_json(extension.gamma_phase);
    } else {
        j["extension"]["seed"] = extension.seed;
    }
    j["battery"] = json::object();
    j["battery"]["kind"] = battery.kind;
    if (battery.kind == "pure") {
        j["battery"]["amplitudes"] = json::array();
        for (cplx a : battery.amplitudes) j["battery"]["amplitudes"].push_back(complex_to_json(a));
    } else if (battery.kind == "mixed") {
        j["battery"]["eigenvalues"] = battery.eigenvalues;
        j["battery"]["eigenvectors"] = json::array();
        for (const auto& v : battery.eigenvectors) {
            json row = json::array();
            for (cplx a : v) row.push_back(complex_to_json(a));
            j["battery"]["eigenvectors"].push_back(row);
        }
    } else {
        j["battery"]["purity"] = battery.purity;
        j["battery"]["seed"] = battery.seed;
    }
    j["optimizer"] = {{"restarts", optimizer.restarts}, {"max_iters", optimizer.max_iters}, {"tol", optimizer.tol},
                      {"outcomes_b", optimizer.outcomes_b}, {"outcomes_R", optimizer.outcomes_R}, {"seed", optimizer.seed}};
    return j;
}

/// Parses the flat format: one "key = value" per line, value is JSON, dots
/// in keys nest, '#' starts a comment.
inline nlohmann::json parse_flat_config(const std::string& text, detail::KeyLines& lines) {
    nlohmann::json root = nlohmann::json::object();
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    std::map<std::string, std::size_t> seen;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = detail::trim(detail::strip_comment(raw));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": missing key");
        if (value.empty()) throw ConfigError("line " + std::to_string(line_no) + ": " + key + ": missing value");
        if (const auto it = seen.find(key); it != seen.end())
            throw ConfigError("line " + std::to_string(line_no) + ": " + key + ": duplicate key (first set on line " +
                              std::to_string(it->second) + ")");
        seen[key] = line_no;
        nlohmann::json v;
        try {
            v = nlohmann::json::parse(value);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError("line " + std::to_string(line_no) + ": " + key + ": value is not valid JSON: " + value);
        }
        try {
            detail::insert_dotted(root, key, std::move(v));
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
        }
        lines.set(key, line_no);
    }
    return root;
}

/// Validates a nested config document.
inline RunConfig config_from_json(const nlohmann::json& root, const detail::KeyLines& lines = {}) {
    if (!root.is_object()) throw ConfigError("config must be an object");
    const detail::Reader rd(root, lines);

    static const std::set<std::string> known{
        "hamiltonian_s", "hamiltonian_b", "beta", "extension.kind", "extension.alpha", "extension.gamma_phase",
        "extension.seed", "battery.kind", "battery.amplitudes", "battery.eigenvalues", "battery.eigenvectors",
        "battery.purity", "battery.seed", "optimizer.restarts", "optimizer.max_iters", "optimizer.tol",
        "optimizer.outcomes_b", "optimizer.outcomes_R", "optimizer.seed", "output.format", "output.path"};
    std::vector<std::string> keys;
    detail::collect_keys(root, "", keys);
    for (const auto& k : keys)
        if (!known.count(k)) rd.fail(k, "unknown key");

    RunConfig c;
    auto hamiltonian = [&](const std::string& key, std::vector<double>& out) {
        if (!rd.find(key)) return;
        out = rd.reals(key);
        if (out.size() < 2) rd.fail(key, "need at least two energy levels");
    };
    hamiltonian("hamiltonian_s", c.hamiltonian_s);
    hamiltonian("hamiltonian_b", c.hamiltonian_b);

    const nlohmann::json& beta = rd.need("beta");
    if (beta.is_string()) {
        if (beta.get<std::string>() != "inf") rd.fail("beta", "expected a positive number or \"inf\"");
        c.beta = std::numeric_limits<double>::infinity();
    } else {
        c.beta = rd.real("beta");
        if (!(c.beta > 0.0)) rd.fail("beta", "must be positive");
    }

    c.extension.kind = rd.string("extension.kind");
    if (c.extension.kind == "qubit-family") {
        if (c.hamiltonian_s != std::vector<double>{0.0, 1.0} || c.hamiltonian_b != std::vector<double>{0.0, 1.0})
            rd.fail("extension.kind", "qubit-family requires hamiltonian_s = hamiltonian_b = [0, 1]");
        c.extension.alpha = rd.complex("extension.alpha", rd.need("extension.alpha"));
        if (std::abs(c.extension.alpha) > 1.0 + kStateTol) rd.fail("extension.alpha", "|alpha| must not exceed 1");
        if (const auto* g = rd.find("extension.gamma_phase")) {
            c.extension.gamma_phase = rd.complex("extension.gamma_phase", *g);
            if (std::abs(std::abs(c.extension.gamma_phase) - 1.0) > 1e-9)
                rd.fail("extension.gamma_phase", "must have modulus 1");
        }
        if (rd.find("extension.seed")) rd.fail("extension.seed", "not used by qubit-family");
    } else if (c.extension.kind == "random-block") {
        c.extension.seed = rd.integer("extension.seed");
        if (rd.find("extension.alpha")) rd.fail("extension.alpha", "not used by random-block");
        if (rd.find("extension.gamma_phase")) rd.fail("extension.gamma_phase", "not used by random-block");
    } else {
        rd.fail("extension.kind", "expected \"qubit-family\" or \"random-block\", got \"" + c.extension.kind + "\"");
    }

    const std::size_t ds = c.hamiltonian_s.size();
    auto forbid = [&](std::initializer_list<const char*> ks) {
        for (const char* k : ks)
            if (rd.find(k)) rd.fail(k, "not used by battery kind \"" + c.battery.kind + "\"");
    };
    c.battery.kind = rd.string("battery.kind");
    if (c.battery.kind == "pure") {
        forbid({"battery.eigenvalues", "battery.eigenvectors", "battery.purity", "battery.seed"});
        c.battery.amplitudes = rd.complexes("battery.amplitudes", rd.need("battery.amplitudes"));
        if (c.battery.amplitudes.size() != ds)
            rd.fail("battery.amplitudes", "expected " + std::to_string(ds) + " amplitudes, got " +
                                              std::to_string(c.battery.amplitudes.size()));
        double norm2 = 0.0;
        for (cplx a : c.battery.amplitudes) norm2 += std::norm(a);
        if (std::abs(std::sqrt(norm2) - 1.0) > 1e-6)
            rd.fail("battery.amplitudes", "not normalized (norm " + format_double(std::sqrt(norm2)) + ")");
    } else if (c.battery.kind == "mixed") {
        forbid({"battery.amplitudes", "battery.purity", "battery.seed"});
        c.battery.eigenvalues = rd.reals("battery.eigenvalues");
        if (c.battery.eigenvalues.size() != ds)
            rd.fail("battery.eigenvalues", "expected " + std::to_string(ds) + " eigenvalues");
        double sum = 0.0;
        for (double p : c.battery.eigenvalues) {
            if (p < 0.0) rd.fail("battery.eigenvalues", "eigenvalues must be nonnegative");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) rd.fail("battery.eigenvalues", "eigenvalues must sum to 1 (sum " + format_double(sum) + ")");
        const nlohmann::json& vecs = rd.need("battery.eigenvectors");
        if (!vecs.is_array() || vecs.size() != ds)
            rd.fail("battery.eigenvectors", "expected a list of " + std::to_string(ds) + " vectors");
        for (const auto& v : vecs) {
            c.battery.eigenvectors.push_back(rd.complexes("battery.eigenvectors", v));
            if (c.battery.eigenvectors.back().size() != ds)
                rd.fail("battery.eigenvectors", "each eigenvector needs " + std::to_string(ds) + " entries");
        }
        for (std::size_t a = 0; a < ds; ++a)
            for (std::size_t b = 0; b < ds; ++b) {
                cplx ip = 0.0;
                for (std::size_t k = 0; k < ds; ++k) ip += std::conj(c.battery.eigenvectors[a][k]) * c.battery.eigenvectors[b][k];
                if (std::abs(ip - (a == b ? 1.0 : 0.0)) > 1e-9)
                    rd.fail("battery.eigenvectors", "eigenvectors are not orthonormal");
            }
    } else if (c.battery.kind == "random") {
        forbid({"battery.amplitudes", "battery.eigenvalues", "battery.eigenvectors"});
        c.battery.purity = rd.real("battery.purity");
        const double lo = 1.0 / static_cast<double>(ds);
        if (c.battery.purity < lo - 1e-12 || c.battery.purity > 1.0 + 1e-12)
            rd.fail("battery.purity", "purity must lie in [1/d, 1] = [" + format_double(lo) + ", 1]");
        c.battery.seed = rd.integer("battery.seed");
    } else {
        rd.fail("battery.kind", "expected \"pure\", \"mixed\" or \"random\", got \"" + c.battery.kind + "\"");
    }

    if (rd.find("optimizer.restarts")) c.optimizer.restarts = rd.integer("optimizer.restarts");
    if (rd.find("optimizer.max_iters")) c.optimizer.max_iters = rd.integer("optimizer.max_iters");
    if (rd.find("optimizer.tol")) c.optimizer.tol = rd.real("optimizer.tol");
    if (rd.find("optimizer.outcomes_b")) c.optimizer.outcomes_b = rd.integer("optimizer.outcomes_b");
    if (rd.find("optimizer.outcomes_R")) c.optimizer.outcomes_R = rd.integer("optimizer.outcomes_R");
    if (rd.find("optimizer.seed")) c.optimizer.seed = rd.integer("optimizer.seed");
    try {
        c.optimizer.validate();
    } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
    }
    const std::size_t db = c.hamiltonian_b.size();
    if (c.optimizer.outcomes_b && c.optimizer.outcomes_b < db)
        rd.fail("optimizer.outcomes_b", "must be 0 or at least the bath dimension " + std::to_string(db));
    if (c.optimizer.outcomes_R && c.optimizer.outcomes_R < db)
        rd.fail("optimizer.outcomes_R", "must be 0 or at least the reference dimension " + std::to_string(db));

    if (rd.find("output.format")) {
        c.format = rd.string("output.format");
        if (c.format != "csv" && c.format != "json") rd.fail("output.format", "expected \"csv\" or \"json\"");
    }
    if (rd.find("output.path")) c.path = rd.string("output.path");
    return c;
}

/// JSON when the first non-blank character is '{', flat otherwise.
inline RunConfig parse_config(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        nlohmann::json root;
        try {
            root = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(std::string("invalid JSON config: ") + e.what());
        }
        return config_from_json(root);
    }
    detail::KeyLines lines;
    const nlohmann::json root = parse_flat_config(text, lines);
    return config_from_json(root, lines);
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// rho = q |psi><psi| + (1 - q) I/d with Haar psi and q chosen so that
/// Tr rho^2 equals the requested purity.
inline DensityOperator battery_with_purity(std::size_t d, double purity, std::uint64_t seed) {
    Rng rng(seed);
    const StateVector psi = haar_state(d, rng);
    const double dd = static_cast<double>(d);
    const double q = std::sqrt(std::clamp((purity * dd - 1.0) / (dd - 1.0), 0.0, 1.0));
    const Matrix m = q * psi.amplitudes() * psi.amplitudes().adjoint() +
                     (1.0 - q) / dd * Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    return DensityOperator(DensityOperator::Trusted{}, m, Dims{d});
}

inline DensityOperator build_battery(const RunConfig& c) {
    const std::size_t ds = c.hamiltonian_s.size();
    if (c.battery.kind == "pure") {
        Vector v(static_cast<Eigen::Index>(ds));
        for (std::size_t k = 0; k < ds; ++k) v[static_cast<Eigen::Index>(k)] = c.battery.amplitudes[k];
        return DensityOperator::pure(StateVector::normalized(v, Dims{ds}));
    }
    if (c.battery.kind == "mixed") {
        Matrix m = Matrix::Zero(static_cast<Eigen::Index>(ds), static_cast<Eigen::Index>(ds));
        for (std::size_t k = 0; k < ds; ++k) {
            Vector v(static_cast<Eigen::Index>(ds));
            for (std::size_t i = 0; i < ds; ++i) v[static_cast<Eigen::Index>(i)] = c.battery.eigenvectors[k][i];
            m += c.battery.eigenvalues[k] * v * v.adjoint();
        }
        return DensityOperator(m, Dims{ds});
    }
    return battery_with_purity(ds, c.battery.purity, c.battery.seed);
}

inline IsometricExtension build_extension(const RunConfig& c) {
    const InverseTemperature beta(c.beta);
    if (c.extension.kind == "qubit-family") return qubit_isometry(c.extension.alpha, c.extension.gamma_phase, beta);
    const Hamiltonian hs(c.hamiltonian_s), hb(c.hamiltonian_b);
    return IsometricExtension(random_energy_preserving_unitary(degenerate_blocks(hs, hb), c.extension.seed), beta);
}

}  // namespace qbr
