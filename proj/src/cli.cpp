#include "mmv/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "mmv/jump_sim.hpp"
#include "mmv/kernel_solver.hpp"
#include "mmv/portfolio_solver.hpp"
#include "mmv/preference_engine.hpp"
#include "mmv/report_io.hpp"

namespace mmv::cli {

using nlohmann::json;

namespace {

std::string fmt(double v, const char* spec = "%.12g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::vector<JumpAtom> parse_jump_law(const std::string& text) {
    std::vector<JumpAtom> law;
    if (text.empty()) {
        return law;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
            throw Error(ErrorKind::InvalidInput, "--jumps entry '" + item + "' must look like size:weight");
        }
        try {
            std::size_t used_size = 0, used_weight = 0;
            const std::string size_text = item.substr(0, colon);
            const std::string weight_text = item.substr(colon + 1);
            JumpAtom atom{std::stod(size_text, &used_size), std::stod(weight_text, &used_weight)};
            if (used_size != size_text.size() || used_weight != weight_text.size()) {
                throw std::invalid_argument(item);
            }
            law.push_back(atom);
        } catch (const std::logic_error&) {
            throw Error(ErrorKind::InvalidInput, "--jumps entry '" + item + "' is not a pair of numbers");
        }
    }
    return law;
}

MarketModel load_market(const RunConfig& config) {
    MarketModel market = market_from_json(read_json_file(config.input_path));
    if (config.x0) {
        market = market.with_x0(*config.x0);
    }
    return market;
}

json with_schema(json body) {
    body["schema"] = kSchemaVersion;
    return body;
}

void print_atom_table(std::ostream& out, const MarketModel& market, const std::vector<std::string>& names,
                      const std::vector<const Vector*>& columns, bool csv) {
    const Vector& p = market.space()->probabilities();
    if (csv) {
        out << "atom,probability";
        for (const auto& name : names) {
            out << ',' << name;
        }
        out << '\n';
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            out << i << ',' << fmt(round12(p[i]));
            for (const Vector* col : columns) {
                out << ',' << fmt(round12((*col)[i]));
            }
            out << '\n';
        }
        return;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%6s %12s", "atom", "prob");
    out << buf;
    for (const auto& name : names) {
        std::snprintf(buf, sizeof buf, " %14s", name.c_str());
        out << buf;
    }
    out << '\n';
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%6ld %12.6g", static_cast<long>(i), p[i]);
        out << buf;
        for (const Vector* col : columns) {
            std::snprintf(buf, sizeof buf, " %14.8g", (*col)[i]);
            out << buf;
        }
        out << '\n';
    }
}

void print_market_header(std::ostream& out, const MarketModel& market, double theta) {
    out << "market: " << market.atoms() << " atoms, " << market.strategy_dimension() << " generators (rank "
        << market.rank() << "), x0 = " << fmt(market.x0(), "%.8g") << ", theta = " << fmt(theta, "%.8g") << '\n';
}

void run_solve_mv(const RunConfig& config, std::ostream& out) {
    const MarketModel market = load_market(config);
    const PreferenceParams params(config.theta);
    const MvSolution mv = solve_mv(market, params);
    switch (config.output_format) {
    case OutputFormat::Json:
        out << dump_report(with_schema(json{{"mv", to_json(mv)}}));
        break;
    case OutputFormat::Csv:
        print_atom_table(out, market, {"mv_wealth"}, {&mv.wealth.values()}, true);
        break;
    case OutputFormat::Table:
        print_market_header(out, market, config.theta);
        out << "MV value: " << fmt(mv.value, "%.10g") << "  (lambda* = " << fmt(*mv.lambda_star, "%.10g") << ")\n";
        print_atom_table(out, market, {"mv_wealth"}, {&mv.wealth.values()}, false);
        break;
    }
}

void run_solve_mmv(const RunConfig& config, std::ostream& out) {
    const MarketModel market = load_market(config);
    const PreferenceParams params(config.theta);
    const MmvSolution mmv = solve_mmv(market, params);
    switch (config.output_format) {
    case OutputFormat::Json:
        out << dump_report(with_schema(json{{"mmv", to_json(mmv)}}));
        break;
    case OutputFormat::Csv:
        print_atom_table(out, market, {"mmv_wealth", "kernel_tilde"},
                         {&mmv.wealth.values(), &mmv.kernel_tilde.density().values()}, true);
        break;
    case OutputFormat::Table:
        print_market_header(out, market, config.theta);
        out << "MMV value: " << fmt(mmv.value, "%.10g") << "  (kappa = " << fmt(mmv.kappa, "%.10g")
            << ", duality residual = " << fmt(mmv.duality_residual, "%.3g") << ")\n";
        print_atom_table(out, market, {"mmv_wealth", "kernel_tilde"},
                         {&mmv.wealth.values(), &mmv.kernel_tilde.density().values()}, false);
        break;
    }
}

void run_check_consistency(const RunConfig& config, std::ostream& out) {
    const MarketModel market = load_market(config);
    const PreferenceParams params(config.theta);
    const double tol = config.negativity_tol.value_or(1e-9);
    const ConsistencyReport report = check_consistency(market, params, tol);
    const MvSolution mv = solve_mv(market, params);
    const MmvSolution mmv = solve_mmv(market, params);
    const KernelReport vsmm = solve_vsmm(market);
    switch (config.output_format) {
    case OutputFormat::Json:
        out << dump_report(
            with_schema(json{{"mv", to_json(mv)}, {"mmv", to_json(mmv)}, {"consistency", to_json(report)}}));
        break;
    case OutputFormat::Csv:
        print_atom_table(out, market, {"vsmm", "kernel_tilde", "mv_wealth", "mmv_wealth"},
                         {&vsmm.kernel.density().values(), &mmv.kernel_tilde.density().values(),
                          &mv.wealth.values(), &mmv.wealth.values()},
                         true);
        break;
    case OutputFormat::Table:
        print_market_header(out, market, config.theta);
        out << "consistent: " << (report.consistent ? "true" : "false") << " (" << to_string(report.status)
            << ")\n"
            << "MV value:   " << fmt(report.mv_value, "%.10g") << '\n'
            << "MMV value:  " << fmt(report.mmv_value, "%.10g") << '\n'
            << "gap:        " << fmt(report.gap, "%.6g") << '\n'
            << "VSMM min:   " << fmt(report.vsmm_min, "%.6g") << '\n';
        print_atom_table(out, market, {"vsmm", "kernel_tilde", "mv_wealth", "mmv_wealth"},
                         {&vsmm.kernel.density().values(), &mmv.kernel_tilde.density().values(),
                          &mv.wealth.values(), &mmv.wealth.values()},
                         false);
        break;
    }
}

void run_eval_preference(const RunConfig& config, std::ostream& out) {
    Payoff x = payoff_from_json(read_json_file(config.input_path));
    const PreferenceParams params(config.theta);
    const double mv = mv_utility(x, params);
    const MmvEvaluation mmv = mmv_utility(x, params);
    const DomainCheck domain = monotone_domain_check(x, params);
    const json body{{"mv", round12(mv)},
                    {"mmv", round12(mmv.value)},
                    {"truncation_level", round12(mmv.truncation_level)},
                    {"gini_index", round12(mmv.gini_index)},
                    {"minimizer", to_json(mmv.minimizer.density())},
                    {"in_monotone_domain", domain.in_domain},
                    {"domain_excess", round12(domain.excess)}};
    switch (config.output_format) {
    case OutputFormat::Json:
        out << dump_report(with_schema(json{{"preference", body}}));
        break;
    case OutputFormat::Csv:
        out << "quantity,value\n"
            << "mv," << fmt(round12(mv)) << "\nmmv," << fmt(round12(mmv.value)) << "\ntruncation_level,"
            << fmt(round12(mmv.truncation_level)) << "\ngini_index," << fmt(round12(mmv.gini_index))
            << "\nin_monotone_domain," << (domain.in_domain ? "true" : "false") << "\ndomain_excess,"
            << fmt(round12(domain.excess)) << '\n';
        break;
    case OutputFormat::Table:
        out << "MV utility:        " << fmt(mv, "%.10g") << '\n'
            << "MMV utility:       " << fmt(mmv.value, "%.10g") << '\n'
            << "truncation level:  " << fmt(mmv.truncation_level, "%.10g") << '\n'
            << "Gini index:        " << fmt(mmv.gini_index, "%.10g") << '\n'
            << "monotone domain:   " << (domain.in_domain ? "yes" : "no") << " (excess "
            << fmt(domain.excess, "%.6g") << ")\n";
        break;
    }
}

void run_simulate_jump(const RunConfig& config, std::ostream& out) {
    const JumpOptions& o = config.jump;
    const JumpDiffusionParams params(o.r, o.mu, o.sigma, o.intensity, parse_jump_law(o.jumps), o.horizon);
    const SimConfig sim{o.paths, o.steps, o.seed};
    const double x0 = config.x0.value_or(1.0);
    PathDump dump;
    const SimReport report =
        simulate(params, sim, x0, config.theta, simulation_workers(config.threads), config.paths_csv ? &dump : nullptr);
    if (config.paths_csv) {
        std::ofstream csv(*config.paths_csv);
        if (!csv) {
            throw Error(ErrorKind::InvalidInput, "cannot write '" + *config.paths_csv + "'");
        }
        csv << "path,kernel,wealth\n";
        for (std::size_t i = 0; i < dump.kernel.size(); ++i) {
            csv << i << ',' << fmt(round12(dump.kernel[i])) << ',' << fmt(round12(dump.wealth[i])) << '\n';
        }
    }
    switch (config.output_format) {
    case OutputFormat::Json:
        out << dump_report(with_schema(json{{"simulation", to_json(report)}}));
        break;
    case OutputFormat::Csv:
    case OutputFormat::Table: {
        const bool csv = config.output_format == OutputFormat::Csv;
        auto row = [&](const char* name, const Estimate& e, double reference) {
            if (csv) {
                out << name << ',' << fmt(round12(e.value)) << ',' << fmt(round12(e.std_error)) << ','
                    << fmt(round12(reference)) << '\n';
            } else {
                char buf[160];
                std::snprintf(buf, sizeof buf, "%-22s %16.10g +- %-12.4g (reference %.10g)\n", name, e.value,
                              e.std_error, reference);
                out << buf;
            }
        };
        if (csv) {
            out << "quantity,value,std_error,reference\n";
        } else {
            out << "qbar = " << fmt(report.qbar, "%.10g") << ", kernel loading a = "
                << fmt(report.kernel_loading, "%.10g") << ", paths = " << report.n_paths
                << ", steps = " << report.n_steps << '\n';
        }
        row("kernel_mean", report.kernel_mean, 1.0);
        row("kernel_second_moment", report.kernel_second_moment, report.kernel_second_moment_analytic);
        row("frac_negative_kernel", report.frac_negative_kernel, report.expected_frac_negative);
        row("budget_check", report.budget_check, report.budget_target);
        row("mv_value_estimate", report.mv_value_estimate, report.mv_value_analytic);
        for (const std::string& w : report.warnings) {
            (csv ? out << "# warning: " : out << "warning: ") << w << '\n';
        }
        break;
    }
    }
}

}  // namespace

std::size_t simulation_workers(std::optional<std::size_t> requested) {
    std::size_t workers = requested.value_or(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* cap = std::getenv("MMV_LAB_THREADS")) {
        char* end = nullptr;
        const unsigned long value = std::strtoul(cap, &end, 10);
        if (end != cap && *end == '\0' && value > 0) {
            workers = std::min<std::size_t>(workers, value);
        }
    }
    return std::max<std::size_t>(1, workers);
}

void execute(const RunConfig& config, std::ostream& out) {
    switch (config.command) {
    case Command::SolveMv: run_solve_mv(config, out); break;
    case Command::SolveMmv: run_solve_mmv(config, out); break;
    case Command::CheckConsistency: run_check_consistency(config, out); break;
    case Command::EvalPreference: run_eval_preference(config, out); break;
    case Command::SimulateJump: run_simulate_jump(config, out); break;
    }
}

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Mean-variance and monotone mean-variance portfolio toolkit", "mmv_lab"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    RunConfig config;
    std::string format = "json";
    const std::map<std::string, OutputFormat> formats{
        {"json", OutputFormat::Json}, {"csv", OutputFormat::Csv}, {"table", OutputFormat::Table}};

    auto add_common = [&](CLI::App* sub, bool market) {
        sub->add_option("--input,-i", config.input_path,
                        market ? "Market JSON file {probabilities, generators, x0}"
                               : "Payoff JSON file {probabilities, payoff}")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--theta", config.theta, "Uncertainty-aversion coefficient (> 0)")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        sub->add_option("--format", format, "Output format: json, csv or table")
            ->check(CLI::IsMember({"json", "csv", "table"}))
            ->capture_default_str();
        if (market) {
            sub->add_option("--x0", config.x0, "Override the initial wealth of the market file");
        }
    };

    CLI::App* solve_mv_cmd = app.add_subcommand("solve-mv", "Solve the mean-variance portfolio problem");
    add_common(solve_mv_cmd, true);
    CLI::App* solve_mmv_cmd = app.add_subcommand("solve-mmv", "Solve the monotone mean-variance portfolio problem");
    add_common(solve_mmv_cmd, true);
    CLI::App* consistency_cmd =
        app.add_subcommand("check-consistency", "Compare MV and MMV optima and test the VSMM sign");
    add_common(consistency_cmd, true);
    consistency_cmd->add_option("--neg-tol", config.negativity_tol,
                                "Densities above -neg-tol count as non-negative (default 1e-9)")
        ->check(CLI::NonNegativeNumber);
    CLI::App* eval_cmd = app.add_subcommand("eval-preference", "Evaluate MV and MMV utilities of a payoff");
    add_common(eval_cmd, false);

    CLI::App* sim_cmd = app.add_subcommand("simulate-jump", "Monte Carlo check of the jump-diffusion kernel");
    JumpOptions& jo = config.jump;
    sim_cmd->add_option("--r", jo.r, "Riskless rate")->capture_default_str();
    sim_cmd->add_option("--mu", jo.mu, "Asset drift")->capture_default_str();
    sim_cmd->add_option("--sigma", jo.sigma, "Volatility (>= 0)")->capture_default_str();
    sim_cmd->add_option("--intensity", jo.intensity, "Poisson jump intensity (>= 0)")->capture_default_str();
    sim_cmd->add_option("--jumps", jo.jumps, "Discrete jump law as \"size:weight,size:weight\"");
    sim_cmd->add_option("--T", jo.horizon, "Horizon")->capture_default_str();
    sim_cmd->add_option("--paths", jo.paths, "Number of paths")->check(CLI::PositiveNumber)->capture_default_str();
    sim_cmd->add_option("--steps", jo.steps, "Time steps per path")->check(CLI::PositiveNumber)->capture_default_str();
    sim_cmd->add_option("--seed", jo.seed, "64-bit seed")->capture_default_str();
    sim_cmd->add_option("--theta", config.theta, "Uncertainty-aversion coefficient (> 0)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sim_cmd->add_option("--x0", config.x0, "Initial wealth (default 1)");
    sim_cmd->add_option("--format", format, "Output format: json, csv or table")
        ->check(CLI::IsMember({"json", "csv", "table"}))
        ->capture_default_str();
    sim_cmd->add_option("--paths-csv", config.paths_csv, "Write per-path kernel and wealth to this CSV file");
    sim_cmd->add_option("--threads", config.threads, "Worker threads (capped by MMV_LAB_THREADS)")
        ->check(CLI::PositiveNumber);

    std::vector<const char*> argv;
    argv.push_back("mmv_lab");
    for (const std::string& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << " (see --help)\n";
        return kExitInputError;
    }

    if (solve_mv_cmd->parsed()) {
        config.command = Command::SolveMv;
    } else if (solve_mmv_cmd->parsed()) {
        config.command = Command::SolveMmv;
    } else if (consistency_cmd->parsed()) {
        config.command = Command::CheckConsistency;
    } else if (eval_cmd->parsed()) {
        config.command = Command::EvalPreference;
    } else {
        config.command = Command::SimulateJump;
    }
    config.output_format = formats.at(format);

    try {
        std::ostringstream buffer;
        execute(config, buffer);
        out << buffer.str();
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.is_model_error() ? kExitModelError : kExitInputError;
    }
}

}  // namespace mmv::cli
