#pragma once

// Seeded property checks over random qubit instances. Each check returns a
// report with per-instance margins; a negative margin beyond the tolerance
// is a failure.

#include "qbr/format.hpp"
#include "qbr/retrieval.hpp"

#include <functional>
#include <string>

namespace qbr {

struct InstanceRecord {
    std::size_t index = 0;
    std::string inputs;       // replayable instance description (JSON object)
    std::string inputs_hash;  // FNV-1a of inputs, hex
    std::vector<std::pair<std::string, double>> values;
    double margin = 0.0;
    std::string binding;  // condition that set the margin
};

/// Each condition's slack is scaled by tolerance / (its own tolerance), so an
/// instance fails iff margin < -tolerance whichever condition binds.
struct CheckReport {
    std::string check_name;
    std::size_t instances = 0;
    std::size_t failures = 0;
    double worst_margin = std::numeric_limits<double>::infinity();
    double tolerance = 0.0;
    std::uint64_t seed = 0;
    std::vector<InstanceRecord> details;

    bool passed() const { return failures == 0; }
};

enum class BatteryMix { alternate, pure_only, mixed_only };

struct VerifySettings {
    BatteryMix mix = BatteryMix::alternate;
    OptimizerSettings optimizer = [] {
        OptimizerSettings o;
        o.restarts = 16;
        return o;
    }();
};

/// Qubit-family instance with H_s = H_b = diag(0, 1).
struct QubitInstance {
    cplx alpha;
    cplx gamma_phase;
    InverseTemperature beta;
    DensityOperator battery;

    IsometricExtension extension() const { return qubit_isometry(alpha, gamma_phase, beta); }
    IsometricExtension extension_at(InverseTemperature b) const { return qubit_isometry(alpha, gamma_phase, b); }
    bool pure() const { return detail::is_pure(battery); }
};

inline const Hamiltonian& qubit_hamiltonian() {
    static const Hamiltonian h{0.0, 1.0};
    return h;
}

/// alpha = sqrt(u) e^{i phi} (uniform on the unit disk), beta in [0.2, 5],
/// battery Haar-pure or with spectrum {l, 1 - l}, l in [0.5, 1), Haar basis.
inline QubitInstance sample_qubit_instance(std::uint64_t seed, std::size_t index, bool pure) {
    Rng rng(mix_seed(seed, index));
    const cplx alpha = std::polar(std::sqrt(uniform(rng, 0.0, 1.0)), uniform(rng, 0.0, 2 * M_PI));
    const cplx gamma_phase = std::polar(1.0, uniform(rng, 0.0, 2 * M_PI));
    const InverseTemperature beta(uniform(rng, 0.2, 5.0));
    if (pure) return {alpha, gamma_phase, beta, DensityOperator::pure(haar_state(2, rng))};
    const double l = uniform(rng, 0.5, 1.0);
    return {alpha, gamma_phase, beta, random_mixed_state({l, 1.0 - l}, rng)};
}

namespace detail {

inline bool pick_pure(BatteryMix mix, std::size_t index) {
    switch (mix) {
        case BatteryMix::pure_only: return true;
        case BatteryMix::mixed_only: return false;
        case BatteryMix::alternate: return index % 2 == 0;
    }
    return true;
}

inline std::string complex_json(cplx z) {
    return "[" + format_double(z.real()) + "," + format_double(z.imag()) + "]";
}

inline std::string beta_json(InverseTemperature b) {
    return b.is_infinite() ? std::string("\"inf\"") : format_double(b.value());
}

inline std::string matrix_json(const Matrix& m) {
    std::string s = "[";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        s += i ? ",[" : "[";
        for (Eigen::Index j = 0; j < m.cols(); ++j) s += (j ? "," : "") + complex_json(m(i, j));
        s += "]";
    }
    return s + "]";
}

inline std::string describe(const QubitInstance& q, const std::string& extra = "") {
    return "{\"alpha\":" + complex_json(q.alpha) + ",\"gamma_phase\":" + complex_json(q.gamma_phase) +
           ",\"beta\":" + beta_json(q.beta) + ",\"battery\":" + matrix_json(q.battery.matrix()) + extra + "}";
}

class MarginSheet {
  public:
    explicit MarginSheet(double report_tol) : report_tol_(report_tol) {}

    /// lhs <= rhs + tol
    void at_most(const char* what, double lhs, double rhs, double tol) { take(what, (rhs - lhs) * report_tol_ / tol); }
    /// |a - b| <= tol
    void equal(const char* what, double a, double b, double tol) { take(what, -std::abs(a - b) * report_tol_ / tol); }

    double margin() const { return margin_; }
    const std::string& binding() const { return binding_; }

  private:
    void take(const char* what, double m) {
        if (std::isnan(m)) m = -std::numeric_limits<double>::infinity();
        if (m < margin_) {
            margin_ = m;
            binding_ = what;
        }
    }

    double report_tol_;
    double margin_ = std::numeric_limits<double>::infinity();
    std::string binding_;
};

class ReportBuilder {
  public:
    ReportBuilder(std::string name, double tol, std::uint64_t seed) {
        report_.check_name = std::move(name);
        report_.tolerance = tol;
        report_.seed = seed;
    }

    MarginSheet sheet() const { return MarginSheet(report_.tolerance); }

    void add(std::string inputs, std::vector<std::pair<std::string, double>> values, const MarginSheet& m) {
        InstanceRecord r;
        r.index = report_.details.size();
        r.inputs_hash = hex64(fnv1a(inputs));
        r.inputs = std::move(inputs);
        r.values = std::move(values);
        r.margin = m.margin();
        r.binding = m.binding();
        ++report_.instances;
        if (r.margin < -report_.tolerance) ++report_.failures;
        report_.worst_margin = std::min(report_.worst_margin, r.margin);
        report_.details.push_back(std::move(r));
    }

    CheckReport take() { return std::move(report_); }

  private:
    CheckReport report_;
};

inline void require_instances(std::size_t n) {
    if (n < 1) throw ArgumentError("verify: at least one instance is required");
}

inline OptimizerSettings seeded(const OptimizerSettings& base, std::uint64_t seed, std::size_t index) {
    OptimizerSettings o = base;
    o.seed = mix_seed(seed ^ 0x5eedULL, index);
    return o;
}

inline double eof_sR(const DensityOperator& sigma_sbR) {
    return eof_wootters(partial_trace(sigma_sbR, {0, 2})).value;
}

}  // namespace detail

/// F(sigma_s) <= W_weak <= W_strong <= E(sigma_s) on random instances, plus a
/// local-unitary instance (first three tight) and an alpha = 1 pure instance
/// (last three tight).
inline CheckReport check_prop1(std::size_t n, std::uint64_t seed, const VerifySettings& s = {}) {
    detail::require_instances(n);
    const double tol_an = 1e-6, tol_opt = 1e-6 + 1e-4;
    detail::ReportBuilder out("prop1", tol_opt, seed);
    const Hamiltonian& h = qubit_hamiltonian();

    auto chain = [&](const IsometricExtension& ext, const DensityOperator& rho, std::size_t index) {
        const AssistanceGap g = assistance_gap(ext, rho, detail::seeded(s.optimizer, seed, index));
        const DensityOperator sigma_s = channel_output(ext, rho);
        const double f = free_energy(sigma_s, h, ext.beta(), Scale::raw);
        const double e = energy(sigma_s, h);
        return std::array<double, 4>{f, g.weak.value_raw, g.strong.value_raw, e};
    };
    auto values = [](const std::array<double, 4>& v) {
        return std::vector<std::pair<std::string, double>>{
            {"f_sigma", v[0]}, {"w_weak", v[1]}, {"w_strong", v[2]}, {"e_sigma", v[3]}};
    };
    auto ordering = [&](detail::MarginSheet& m, const std::array<double, 4>& v) {
        m.at_most("F <= W_weak", v[0], v[1], tol_opt);
        m.at_most("W_weak <= W_strong", v[1], v[2], tol_opt);
        m.at_most("W_strong <= E", v[2], v[3], tol_an);
    };

    for (std::size_t i = 0; i < n; ++i) {
        const QubitInstance q = sample_qubit_instance(seed, i, detail::pick_pure(s.mix, i));
        const auto v = chain(q.extension(), q.battery, i);
        auto m = out.sheet();
        ordering(m, v);
        out.add(detail::describe(q), values(v), m);
    }

    {
        Rng rng(mix_seed(seed, n));
        const InverseTemperature beta(uniform(rng, 0.2, 5.0));
        const double l = uniform(rng, 0.5, 1.0);
        const DensityOperator rho = random_mixed_state({l, 1.0 - l}, rng);
        const std::uint64_t ext_seed = rng();
        const auto v = chain(local_phase_extension(h, h, beta, ext_seed), rho, n);
        auto m = out.sheet();
        ordering(m, v);
        m.equal("local unitary: F = W_weak", v[0], v[1], tol_an);
        m.equal("local unitary: W_weak = W_strong", v[1], v[2], tol_an);
        out.add("{\"extension\":\"local-phase\",\"extension_seed\":" + std::to_string(ext_seed) +
                    ",\"beta\":" + detail::beta_json(beta) + ",\"battery\":" + detail::matrix_json(rho.matrix()) + "}",
                values(v), m);
    }
    {
        QubitInstance q = sample_qubit_instance(seed, n + 1, true);
        q.alpha = 1.0;
        const auto v = chain(q.extension(), q.battery, n + 1);
        auto m = out.sheet();
        ordering(m, v);
        m.equal("alpha=1: W_weak = W_strong", v[1], v[2], tol_an);
        m.equal("alpha=1: W_strong = E", v[2], v[3], tol_an);
        out.add(detail::describe(q), values(v), m);
    }
    return out.take();
}

/// W_weak <= E(sigma_s) - E_f(sigma_sR)/beta, with equality for pure
/// batteries; alpha = 0 pure instance gives F(tau).
inline CheckReport check_thm1(std::size_t n, std::uint64_t seed, const VerifySettings& s = {}) {
    detail::require_instances(n);
    const double tol_an = 1e-6, tol_sat = 2e-3;
    detail::ReportBuilder out("thm1", tol_sat, seed);
    const Hamiltonian& h = qubit_hamiltonian();

    auto run = [&](const QubitInstance& q, std::size_t index, bool thermal_case) {
        const IsometricExtension ext = q.extension();
        const DensityOperator sigma = apply_extension(ext, q.battery);
        const double e = energy(partial_trace(sigma, {0}), h);
        const double eof = detail::eof_sR(sigma);
        const double bound = e - q.beta.temperature() * eof;
        const double w = optimize_weak(ext, q.battery, detail::seeded(s.optimizer, seed, index)).value_raw;
        auto m = out.sheet();
        m.at_most("W_weak <= E - E_f/beta", w, bound, tol_an);
        if (q.pure()) m.equal("pure: W_weak = E - E_f/beta", w, bound, tol_sat);
        std::vector<std::pair<std::string, double>> vals{{"w_weak", w}, {"e_sigma", e}, {"eof_sR", eof}, {"bound", bound}};
        if (thermal_case) {
            const double f_tau = free_energy(thermal_state(h, q.beta), h, q.beta, Scale::raw);
            m.equal("alpha=0: W_weak = F(tau)", w, f_tau, tol_an);
            vals.emplace_back("f_tau", f_tau);
        }
        out.add(detail::describe(q), std::move(vals), m);
    };

    for (std::size_t i = 0; i < n; ++i) run(sample_qubit_instance(seed, i, detail::pick_pure(s.mix, i)), i, false);
    QubitInstance q = sample_qubit_instance(seed, n, true);
    q.alpha = 0.0;
    run(q, n, true);
    return out.take();
}

/// Pure batteries: the computational and a random product basis both reach
/// E(sigma_s). Mixed batteries: W_strong <= E(sigma_s) - E_f(sigma_sR')/beta.
inline CheckReport check_thm2(std::size_t n, std::uint64_t seed, const VerifySettings& s = {}) {
    detail::require_instances(n);
    const double tol_an = 1e-6;
    detail::ReportBuilder out("thm2", tol_an, seed);
    const Hamiltonian& h = qubit_hamiltonian();

    for (std::size_t i = 0; i < n; ++i) {
        const QubitInstance q = sample_qubit_instance(seed, i, detail::pick_pure(s.mix, i));
        const IsometricExtension ext = q.extension();
        const DensityOperator sigma = apply_extension(ext, q.battery);
        const double e = energy(partial_trace(sigma, {0}), h);
        auto m = out.sheet();
        std::vector<std::pair<std::string, double>> vals{{"e_sigma", e}};
        if (q.pure()) {
            const double w_comp = retrieved_charge(condition_strong(sigma, computational_povm(2), computational_povm(2)), h, q.beta);
            Rng rng(mix_seed(seed ^ 0xba5eULL, i));
            const Matrix ub = haar_unitary(2, rng), ur = haar_unitary(2, rng);
            const double w_rand = retrieved_charge(condition_strong(sigma, projective_povm(ub), projective_povm(ur)), h, q.beta);
            m.equal("computational basis: W = E", w_comp, e, tol_an);
            m.equal("random basis: W = E", w_rand, e, tol_an);
            vals.emplace_back("w_computational", w_comp);
            vals.emplace_back("w_random_basis", w_rand);
        } else {
            const double eof = eof_wootters(partial_trace(purified_joint(ext, q.battery), {0, 3})).value;
            const double bound = e - q.beta.temperature() * eof;
            const double w = optimize_strong(ext, q.battery, detail::seeded(s.optimizer, seed, i)).value_raw;
            m.at_most("mixed: W_strong <= E - E_f(sR')/beta", w, bound, tol_an);
            vals.emplace_back("w_strong", w);
            vals.emplace_back("eof_sRprime", eof);
            vals.emplace_back("bound", bound);
        }
        out.add(detail::describe(q), std::move(vals), m);
    }
    return out.take();
}

/// (i) alpha = 0: W_weak clamps to 0 and W_strong = E(tau). (ii) beta = 50
/// and beta = inf: gap vanishes; pure batteries reach E(sigma_s) both ways.
inline CheckReport check_thm3(std::size_t n, std::uint64_t seed, const VerifySettings& s = {}) {
    detail::require_instances(n);
    const double tol_an = 1e-6;
    detail::ReportBuilder out("thm3", tol_an, seed);
    const Hamiltonian& h = qubit_hamiltonian();

    for (std::size_t i = 0; i < n; ++i) {
        const QubitInstance q = sample_qubit_instance(seed, i, detail::pick_pure(s.mix, i));
        auto m = out.sheet();
        std::vector<std::pair<std::string, double>> vals;

        const AssistanceGap thermal = assistance_gap(qubit_isometry(0.0, q.gamma_phase, q.beta), q.battery,
                                                     detail::seeded(s.optimizer, seed, 3 * i));
        const double e_tau = energy(thermal_state(h, q.beta), h);
        m.equal("alpha=0: W_weak clamped = 0", thermal.weak.value_clamped, 0.0, tol_an);
        m.equal("alpha=0: W_strong = E(tau)", thermal.strong.value_raw, e_tau, tol_an);
        vals.emplace_back("thermal_w_weak_clamped", thermal.weak.value_clamped);
        vals.emplace_back("thermal_w_strong", thermal.strong.value_raw);
        vals.emplace_back("e_tau", e_tau);

        const std::pair<const char*, InverseTemperature> cold[] = {{"beta50", InverseTemperature(50.0)},
                                                                    {"beta_inf", InverseTemperature::infinite()}};
        for (std::size_t c = 0; c < 2; ++c) {
            const IsometricExtension ext = q.extension_at(cold[c].second);
            const AssistanceGap g = assistance_gap(ext, q.battery, detail::seeded(s.optimizer, seed, 3 * i + 1 + c));
            const double e = energy(channel_output(ext, q.battery), h);
            m.at_most(c ? "beta=inf: gap <= 0" : "beta=50: gap <= 0", g.gap, 0.0, tol_an);
            if (q.pure()) {
                m.equal(c ? "beta=inf: W_weak = E" : "beta=50: W_weak = E", g.weak.value_raw, e, tol_an);
                m.equal(c ? "beta=inf: W_strong = E" : "beta=50: W_strong = E", g.strong.value_raw, e, tol_an);
            }
            const std::string tag = cold[c].first;
            vals.emplace_back(tag + "_gap", g.gap);
            vals.emplace_back(tag + "_w_weak", g.weak.value_raw);
            vals.emplace_back(tag + "_w_strong", g.strong.value_raw);
            vals.emplace_back(tag + "_e_sigma", e);
        }
        out.add(detail::describe(q), std::move(vals), m);
    }
    return out.take();
}

/// gap >= E_f(sigma_sR)/beta, equality for pure batteries; a local unitary
/// gives gap = 0 and E_f = 0.
inline CheckReport check_cor1(std::size_t n, std::uint64_t seed, const VerifySettings& s = {}) {
    detail::require_instances(n);
    const double tol_an = 1e-6, tol_opt = 2e-3;
    detail::ReportBuilder out("cor1", tol_opt, seed);
    const Hamiltonian& h = qubit_hamiltonian();

    for (std::size_t i = 0; i < n; ++i) {
        const QubitInstance q = sample_qubit_instance(seed, i, detail::pick_pure(s.mix, i));
        const IsometricExtension ext = q.extension();
        const double eof = detail::eof_sR(apply_extension(ext, q.battery));
        const double bound = q.beta.temperature() * eof;
        const AssistanceGap g = assistance_gap(ext, q.battery, detail::seeded(s.optimizer, seed, i));
        auto m = out.sheet();
        m.at_most("gap >= E_f/beta", bound, g.gap, tol_opt);
        if (q.pure()) m.equal("pure: gap = E_f/beta", g.gap, bound, tol_opt);
        out.add(detail::describe(q),
                {{"gap", g.gap}, {"w_weak", g.weak.value_raw}, {"w_strong", g.strong.value_raw}, {"eof_sR", eof}, {"bound", bound}},
                m);
    }

    Rng rng(mix_seed(seed, n));
    const InverseTemperature beta(uniform(rng, 0.2, 5.0));
    const DensityOperator rho = DensityOperator::pure(haar_state(2, rng));
    const std::uint64_t ext_seed = rng();
    const IsometricExtension ext = local_phase_extension(h, h, beta, ext_seed);
    const double eof = detail::eof_sR(apply_extension(ext, rho));
    const AssistanceGap g = assistance_gap(ext, rho, detail::seeded(s.optimizer, seed, n));
    auto m = out.sheet();
    m.equal("local unitary: gap = 0", g.gap, 0.0, tol_an);
    m.equal("local unitary: E_f = 0", eof, 0.0, tol_an);
    out.add("{\"extension\":\"local-phase\",\"extension_seed\":" + std::to_string(ext_seed) + ",\"beta\":" +
                detail::beta_json(beta) + ",\"battery\":" + detail::matrix_json(rho.matrix()) + "}",
            {{"gap", g.gap}, {"eof_sR", eof}}, m);
    return out.take();
}

/// alpha = 0 (SWAP) output equals |phi+_beta><phi+_beta|_sR (x) rho_b; the
/// alpha = 0.3 control must miss the product form by more than 0.01.
inline CheckReport check_case1_factorization(std::uint64_t seed) {
    const double tol = 1e-9;
    detail::ReportBuilder out("case1", tol, seed);
    const Hamiltonian& h = qubit_hamiltonian();

    auto distance = [&](cplx alpha, InverseTemperature beta, const DensityOperator& rho) {
        const DensityOperator sigma_sRb = permute(apply_extension(qubit_isometry(alpha, 1.0, beta), rho), {0, 2, 1});
        const DensityOperator target = tensor(DensityOperator::pure(purified_thermal(h, beta)), rho);
        return trace_distance(sigma_sRb, target);
    };
    auto add = [&](cplx alpha, InverseTemperature beta, const DensityOperator& rho, bool control) {
        const double d = distance(alpha, beta, rho);
        auto m = out.sheet();
        if (control)
            m.at_most("control: distance > 0.01", 0.01, d, tol);
        else
            m.equal("product form", d, 0.0, tol);
        const QubitInstance q{alpha, 1.0, beta, rho};
        out.add(detail::describe(q, control ? ",\"control\":true" : ""), {{"trace_distance", d}}, m);
    };

    const double r = 1.0 / std::sqrt(2.0);
    const DensityOperator plus = DensityOperator::pure(StateVector(Vector::Constant(2, r)));
    add(0.0, InverseTemperature(1.0), plus, false);
    Rng rng(mix_seed(seed, 0));
    add(0.0, InverseTemperature(uniform(rng, 0.2, 5.0)), DensityOperator::pure(StateVector::basis(0, 2)), false);
    for (int k = 0; k < 6; ++k) add(0.0, InverseTemperature(uniform(rng, 0.2, 5.0)), DensityOperator::pure(haar_state(2, rng)), false);
    for (int k = 0; k < 2; ++k) {
        const double l = uniform(rng, 0.5, 1.0);
        add(0.0, InverseTemperature(uniform(rng, 0.2, 5.0)), random_mixed_state({l, 1.0 - l}, rng), false);
    }
    add(0.3, InverseTemperature(1.0), plus, true);
    return out.take();
}

inline const std::vector<std::string>& check_names() {
    static const std::vector<std::string> names{"prop1", "thm1", "thm2", "thm3", "cor1", "case1"};
    return names;
}

/// Runs one named check or "all" in the fixed order of check_names().
inline std::vector<CheckReport> run_suite(const std::string& suite, std::size_t n, std::uint64_t seed,
                                          const VerifySettings& s = {}) {
    auto one = [&](const std::string& name) -> CheckReport {
        if (name == "prop1") return check_prop1(n, seed, s);
        if (name == "thm1") return check_thm1(n, seed, s);
        if (name == "thm2") return check_thm2(n, seed, s);
        if (name == "thm3") return check_thm3(n, seed, s);
        if (name == "cor1") return check_cor1(n, seed, s);
        if (name == "case1") return check_case1_factorization(seed);
        throw ArgumentError("unknown check '" + name + "'");
    };
    std::vector<CheckReport> out;
    if (suite == "all") {
        for (const auto& name : check_names()) out.push_back(one(name));
    } else {
        out.push_back(one(suite));
    }
    return out;
}

}  // namespace qbr
