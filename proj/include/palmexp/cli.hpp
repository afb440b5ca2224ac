#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "errors.hpp"
#include "experiment.hpp"
#include "validation.hpp"

namespace palmexp {

enum ExitCode : int {
    kExitOk = 0,
    kExitChecksFailed = 1,
    kExitConfiguration = 2,
    kExitRuntime = 3,
};

namespace detail {

inline int run_experiment_command(const std::string& command, const std::string& config_path, const ConfigOverrides& overrides,
                                  std::ostream& out, std::ostream& err) {
    ExperimentConfig config;
    try {
        config = parse_config(load_json_file(config_path), command, overrides);
    } catch (const ConfigurationError& e) {
        err << e.what() << "\n";
        return kExitConfiguration;
    }
    try {
        const Table table = run_experiment(config);
        write_outputs(config, table, out);
        if (config.output.path != "-") {
            err << command << ": wrote " << table.rows.size() << " rows to " << config.output.path;
            if (table.dropped) err << " (" << table.dropped << " rows with nonpositive rate dropped)";
            err << "\n";
        }
    } catch (const ConfigurationError& e) {
        err << e.what() << "\n";
        return kExitConfiguration;
    } catch (const std::exception& e) {
        err << command << " failed: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

inline int run_validate_command(Tier tier, std::optional<std::uint64_t> seed, unsigned threads, const std::string& report_path,
                                std::ostream& out, std::ostream& err) {
    out << "validate tier=" << tier_name(tier) << "\n";
    const auto reports = run_checks(tier, seed, threads, [&](const CheckReport& r) { out << format_report_line(r) << "\n" << std::flush; });
    const auto failed = std::count_if(reports.begin(), reports.end(), [](const CheckReport& r) { return !r.pass; });
    double total = 0.0;
    for (const auto& r : reports)
        if (r.id != "AC13") total += r.seconds;
    out << reports.size() - static_cast<std::size_t>(failed) << "/" << reports.size() << " checks passed in " << total << " s\n";
    if (!report_path.empty()) {
        std::ofstream os(report_path, std::ios::binary | std::ios::trunc);
        if (!os) {
            err << "cannot open " << report_path << " for writing\n";
            return kExitConfiguration;
        }
        write_report_csv(os, reports);
    }
    return failed == 0 ? kExitOk : kExitChecksFailed;
}

} // namespace detail

// Entry point of the command line tool; `args` excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Error probabilities and exponents of random codebooks on additive noise channels", "palmexp"};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", kVersion);

    std::string config_path, out_path, tier = "fast";
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;

    std::vector<CLI::App*> experiment_subs;
    const std::vector<std::pair<std::string, std::string>> described{
        {"exponent", "error exponents over an alpha sweep"},
        {"pe-exact", "error probabilities by quadrature"},
        {"pe-mc", "error probabilities by Monte Carlo"},
        {"capacity", "capacity bounds over a power sweep"},
        {"shannon-map", "exponent lower bound against Shannon rate"},
    };
    for (const auto& [name, help] : described) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "JSON experiment configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_path, "output path, overrides output.path ('-' for stdout)");
        sub->add_option("--seed", seed, "Monte Carlo seed, overrides mc.seed");
        sub->add_option("--threads", threads, "worker threads, 0 picks the hardware concurrency");
        experiment_subs.push_back(sub);
    }
    auto* validate = app.add_subcommand("validate", "run the acceptance suite");
    validate->add_option("--tier", tier, "fast or full")->check(CLI::IsMember({"fast", "full"}));
    validate->add_option("--out", out_path, "optional CSV report path");
    validate->add_option("--seed", seed, "seed for every stochastic check, overrides the frozen seeds");
    validate->add_option("--threads", threads, "worker threads, 0 picks the hardware concurrency");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfiguration;
    }

    if (validate->parsed())
        return detail::run_validate_command(tier == "full" ? Tier::Full : Tier::Fast, seed, threads.value_or(1), out_path, out,
                                            err);
    for (auto* sub : experiment_subs) {
        if (!sub->parsed()) continue;
        ConfigOverrides overrides;
        overrides.seed = seed;
        overrides.threads = threads;
        if (!out_path.empty()) overrides.out = out_path;
        return detail::run_experiment_command(sub->get_name(), config_path, overrides, out, err);
    }
    return kExitConfiguration;
}

} // namespace palmexp
