// qbr: compute, sweep and verify charge retrieval from the command line.
//
//   qbr compute --config run.cfg [--out r.csv] [--format csv|json]
//   qbr sweep   --config run.cfg --sweep alpha 0,0.5,1
//   qbr verify  --suite all --instances 100 --seed 7
//
// Exit codes: 0 success, 1 verification failure, 2 usage or config error,
// 3 capability error.

#include "qbr/experiment.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitCapability = 3;

std::size_t default_workers() {
    if (const char* env = std::getenv("QBR_WORKERS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
        }
        std::cerr << "warning: ignoring QBR_WORKERS='" << env << "'\n";
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc ? hc : 1;
}

struct Common {
    std::string config;
    std::string out;
    std::string format;
    std::optional<std::uint64_t> seed;
    std::size_t workers = 0;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config) {
    auto* opt = cmd->add_option("--config", c.config, "run configuration (flat key = value or JSON)");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", c.out, "output file (default: config output.path, else stdout)");
    cmd->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--seed", c.seed, "seed (overrides the config)");
    cmd->add_option("--workers", c.workers, "worker threads (default: QBR_WORKERS or all cores)")
        ->check(CLI::PositiveNumber);
}

/// Renders first, then opens the destination, so failures leave no file.
void emit(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw qbr::ConfigError("cannot open output file '" + path + "'");
    f << text;
}

std::vector<double> parse_values(const std::string& list) {
    std::vector<double> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = qbr::detail::trim(item);
        if (item.empty()) throw qbr::ConfigError("sweep: empty value in list '" + list + "'");
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || !std::isfinite(v)) throw qbr::ConfigError("sweep: '" + item + "' is not a finite number");
        out.push_back(v);
    }
    if (out.empty()) throw qbr::ConfigError("sweep: the value list is empty");
    return out;
}

qbr::RunConfig load(const Common& c) {
    qbr::RunConfig cfg = qbr::load_config(c.config);
    if (c.seed) cfg.optimizer.seed = *c.seed;
    if (!c.format.empty()) cfg.format = c.format;
    if (!c.out.empty()) cfg.path = c.out;
    return cfg;
}

void print_diagnostics(const qbr::Record& r, const qbr::Diagnostics& d) {
    std::cerr << "# qbr " << qbr::kVersion << " config " << r.config_hash << " seed " << r.seed << ": restarts weak "
              << d.restarts_weak << " strong " << d.restarts_strong << ", weak closed form ";
    if (d.weak_closed_form)
        std::cerr << qbr::format_double(*d.weak_closed_form) << " (" << d.closed_form_method << ")\n";
    else
        std::cerr << d.closed_form_method << "\n";
}

std::string render_records(const std::vector<qbr::Record>& records, const std::string& format) {
    std::ostringstream os;
    if (format == "json")
        qbr::write_records_json(os, records);
    else
        qbr::write_records_csv(os, records);
    return os.str();
}

int cmd_compute(const Common& c) {
    const qbr::RunConfig cfg = load(c);
    qbr::Diagnostics diag;
    const qbr::Record r = qbr::compute_record(cfg, c.workers, &diag);
    print_diagnostics(r, diag);
    emit(render_records({r}, cfg.format), cfg.path);
    return kExitOk;
}

int cmd_sweep(const Common& c, const std::vector<std::string>& sweep) {
    const qbr::RunConfig cfg = load(c);
    if (sweep.size() != 2) throw qbr::ConfigError("--sweep needs a parameter name and a value list");
    const std::string& param = sweep[0];
    const auto& names = qbr::sweep_parameters();
    if (std::find(names.begin(), names.end(), param) == names.end())
        throw qbr::ConfigError("unknown sweep parameter '" + param + "' (expected beta, alpha, angle or p)");
    const std::vector<double> values = parse_values(sweep[1]);
    std::vector<qbr::RunConfig> configs;
    for (double v : values) configs.push_back(qbr::with_parameter(cfg, param, v));
    std::vector<qbr::Record> records;
    for (const auto& one : configs) {
        qbr::Diagnostics diag;
        records.push_back(qbr::compute_record(one, c.workers, &diag));
        print_diagnostics(records.back(), diag);
    }
    emit(render_records(records, cfg.format), cfg.path);
    return kExitOk;
}

int cmd_verify(const Common& c, const std::string& suite, std::size_t instances) {
    if (suite != "all") {
        const auto& names = qbr::check_names();
        if (std::find(names.begin(), names.end(), suite) == names.end())
            throw qbr::ConfigError("unknown check '" + suite + "' (expected all, prop1, thm1, thm2, thm3, cor1 or case1)");
    }
    if (instances == 0) throw qbr::ConfigError("--instances must be positive");
    qbr::VerifySettings vs;
    vs.optimizer.workers = c.workers;
    const std::uint64_t seed = c.seed.value_or(7);
    const std::vector<qbr::CheckReport> reports = qbr::run_suite(suite, instances, seed, vs);

    bool all_pass = true;
    std::cout << std::left << std::setw(8) << "check" << std::right << std::setw(10) << "instances" << std::setw(10)
              << "failures" << std::setw(24) << "worst_margin" << std::setw(14) << "tolerance" << "  status\n";
    for (const auto& r : reports) {
        all_pass = all_pass && r.passed();
        std::cout << std::left << std::setw(8) << r.check_name << std::right << std::setw(10) << r.instances
                  << std::setw(10) << r.failures << std::setw(24) << qbr::format_double(r.worst_margin) << std::setw(14)
                  << qbr::format_double(r.tolerance) << "  " << (r.passed() ? "pass" : "FAIL") << '\n';
        for (const auto& d : r.details)
            if (d.margin < -r.tolerance)
                std::cerr << r.check_name << " instance " << d.index << " failed (" << d.binding
                          << ", margin " << qbr::format_double(d.margin) << "): " << d.inputs << '\n';
    }
    if (!c.out.empty()) {
        std::ostringstream os;
        if (c.format == "json")
            qbr::write_reports_json(os, reports);
        else
            qbr::write_reports_csv(os, reports);
        emit(os.str(), c.out);
    }
    return all_pass ? kExitOk : kExitVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Environment-assisted charge retrieval from quantum batteries"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(qbr::kVersion));

    Common compute_opts, sweep_opts, verify_opts;
    compute_opts.workers = sweep_opts.workers = verify_opts.workers = default_workers();

    auto* compute = app.add_subcommand("compute", "optimize weak and strong retrieval for one configuration");
    add_common(compute, compute_opts, true);

    auto* sweep = app.add_subcommand("sweep", "one record per value of a swept parameter");
    add_common(sweep, sweep_opts, true);
    std::vector<std::string> sweep_spec;
    sweep->add_option("--sweep", sweep_spec, "parameter (beta|alpha|angle|p) and comma-separated values")
        ->expected(2)
        ->required();

    auto* verify = app.add_subcommand("verify", "run the seeded property checks");
    add_common(verify, verify_opts, false);
    std::string suite = "all";
    std::size_t instances = 100;
    verify->add_option("--suite", suite, "check name or all");
    verify->add_option("--instances", instances, "random instances per check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*compute) return cmd_compute(compute_opts);
        if (*sweep) return cmd_sweep(sweep_opts, sweep_spec);
        return cmd_verify(verify_opts, suite, instances);
    } catch (const qbr::CapabilityError& e) {
        std::cerr << "capability error: " << e.what() << '\n';
        return kExitCapability;
    } catch (const qbr::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}
