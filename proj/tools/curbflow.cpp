#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "curbflow/plot.hpp"
#include "curbflow/report.hpp"
#include "curbflow/version.hpp"

namespace {

using namespace curbflow;

enum LogLevel { log_off = 0, log_error, log_warn, log_info, log_debug };

int log_threshold() {
    static const int level = [] {
        const char* env = std::getenv("CURBFLOW_LOG");
        if (!env) return static_cast<int>(log_warn);
        const std::string v(env);
        if (v == "off") return static_cast<int>(log_off);
        if (v == "error") return static_cast<int>(log_error);
        if (v == "warn") return static_cast<int>(log_warn);
        if (v == "info") return static_cast<int>(log_info);
        if (v == "debug") return static_cast<int>(log_debug);
        return static_cast<int>(log_warn);
    }();
    return level;
}

void log(LogLevel level, const std::string& msg) {
    static const char* names[] = {"off", "error", "warn", "info", "debug"};
    if (level <= log_threshold()) {
        std::cerr << "[curbflow " << names[level] << "] " << msg << "\n";
    }
}

struct GlobalArgs {
    std::string scenario_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::string format = "json";
};

io::Format parse_format(const std::string& f) {
    if (f == "json") return io::Format::json;
    if (f == "csv") return io::Format::csv;
    throw ValidationError("unknown format '" + f + "', expected json or csv");
}

io::Scenario load(const GlobalArgs& args, const std::string& positional) {
    const std::string path = !positional.empty() ? positional : args.scenario_path;
    if (path.empty()) {
        throw ValidationError("no scenario given; pass a path or --scenario");
    }
    io::Scenario scenario = io::load_scenario(path);
    log(log_info, "loaded scenario '" + scenario.name + "' (" +
                      std::to_string(scenario.blocks.size()) + " blocks, " +
                      std::to_string(scenario.graph.edges.size()) + " edges)");
    for (const auto& w : scenario.warnings) log(log_warn, w);
    return scenario;
}

void write_command_result(const GlobalArgs& args, const nlohmann::json& result) {
    if (args.out_dir.empty()) return;
    std::filesystem::create_directories(args.out_dir);
    const auto path = std::filesystem::path(args.out_dir) / "result.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    out << result.dump(2) << "\n";
    log(log_info, "wrote " + path.string());
}

void write_full_report(const GlobalArgs& args, const io::Report& report) {
    if (args.out_dir.empty()) return;
    const auto written = io::write_report(report, args.out_dir, parse_format(args.format));
    for (const auto& p : written) log(log_info, "wrote " + p.string());
}

void solve_flows(io::Report& report, const std::string& mode) {
    const auto& blocks = report.scenario.blocks;
    const bool all_lambda =
        std::all_of(blocks.begin(), blocks.end(), [](const auto& b) { return b.lambda.has_value(); });
    const bool all_u = std::all_of(blocks.begin(), blocks.end(),
                                   [](const auto& b) { return b.observed_u.has_value(); });
    std::string chosen = mode;
    if (chosen == "auto") {
        if (all_u) {
            chosen = "estimate";
        } else if (all_lambda) {
            chosen = "solve";
        } else {
            throw ValidationError("scenario has neither observed_u nor lambda on every block; "
                                  "cannot pick a network mode");
        }
    }
    if (chosen == "estimate") {
        report.flows = net::estimate_from_occupancy(report.scenario.graph, blocks);
        for (int i : report.flows->clamped_nodes) {
            report.warnings.push_back(
                "inferred exogenous rate clamped to 0 at block '" + blocks[i].id +
                "' (inconsistent observations, residual " +
                std::to_string(report.flows->clamp_residual[i]) + ")");
        }
    } else {
        report.flows = net::forward_solve(report.scenario.graph, blocks);
    }
    for (const auto& b : blocks) {
        if (b.through_traffic) {
            report.cruising[b.id] =
                net::cruising_share(*report.flows, report.scenario.graph, blocks, b.id);
            if (report.cruising[b.id].out_of_range) {
                report.warnings.push_back("modeled rejection inflow at '" + b.id +
                                          "' exceeds observed through-traffic; share clamped to 1");
            }
        }
    }
}

void print_flows(const io::Report& report) {
    const auto& flows = *report.flows;
    std::printf("%-12s %12s %12s %14s %14s\n", "block", "y", "occupancy", "rejection_out",
                flows.estimated ? "lambda_inferred" : "lambda");
    for (size_t i = 0; i < report.scenario.blocks.size(); ++i) {
        const auto idx = static_cast<Eigen::Index>(i);
        std::printf("%-12s %12.6f %12.6f %14.6f %14.6f\n", report.scenario.blocks[i].id.c_str(),
                    flows.y[idx], flows.occupancy[idx], flows.rejection_out[idx],
                    flows.estimated ? flows.lambda_inferred[idx] : flows.lambda[idx]);
    }
    std::printf("conservation residual = %.3g, sink leakage = %.6f\n",
                flows.conservation_residual, flows.sink_leakage);
    if (!flows.estimated) {
        std::printf("converged in %d iterations (last update %.3g)\n", flows.iterations,
                    flows.residual);
    }
}

void add_pricing(io::Report& report) {
    report.demand = io::calibrate_demand(report.scenario, &report.warnings);
    const auto problem = io::build_pricing_problem(report.scenario, nullptr);
    report.pricing = pricing::optimize_prices(problem);
}

void print_pricing(const io::Report& report) {
    const auto& sol = *report.pricing;
    std::printf("%-12s %10s %10s %12s %12s %8s\n", "block", "price", "floor", "occupancy",
                "rejection", "binding");
    for (size_t i = 0; i < sol.ids.size(); ++i) {
        const auto idx = static_cast<Eigen::Index>(i);
        std::printf("%-12s %10.4f %10.4f %12.6f %12.6f %8s\n", sol.ids[i].c_str(),
                    sol.prices[idx], sol.floors[idx], sol.occupancies[idx], sol.rejections[idx],
                    sol.binding[i] ? "yes" : "no");
    }
    std::printf("objective = %.6f, projected-gradient vs closed-form gap = %.3g (%d iterations)\n",
                sol.objective, sol.kkt_residual, sol.iterations);
}

void add_simulation(io::Report& report, const GlobalArgs& args) {
    sim::SimConfig config = report.scenario.sim_config.value_or(sim::SimConfig{});
    if (args.seed) config.seed = *args.seed;

    auto blocks = report.scenario.blocks;
    const bool all_lambda =
        std::all_of(blocks.begin(), blocks.end(), [](const auto& b) { return b.lambda.has_value(); });
    if (!all_lambda) {
        const bool all_u = std::all_of(blocks.begin(), blocks.end(),
                                       [](const auto& b) { return b.observed_u.has_value(); });
        if (!all_u) {
            throw ValidationError("simulation needs lambda on every block (or observed_u "
                                  "everywhere so rates can be inferred first)");
        }
        const auto flows = net::estimate_from_occupancy(report.scenario.graph, blocks);
        for (size_t i = 0; i < blocks.size(); ++i) {
            blocks[i].lambda = flows.lambda_inferred[static_cast<Eigen::Index>(i)];
        }
        report.warnings.push_back("simulation exogenous rates inferred from observed occupancies");
        log(log_info, "simulation lambdas inferred from observed occupancies");
    }
    report.simulation = sim::replicate(report.scenario.graph, blocks, config);
    if (report.simulation->overloaded) {
        report.warnings.push_back("simulation tripped the overload watchdog; stats are partial");
    }
}

void print_simulation(const io::Report& report) {
    const auto& result = *report.simulation;
    std::printf("%-12s %12s %14s %14s\n", "block", "occupancy", "ci_half_width", "rejections/h");
    for (size_t i = 0; i < result.blocks.size(); ++i) {
        std::printf("%-12s %12.6f %14.6f %14.6f\n", report.scenario.blocks[i].id.c_str(),
                    result.blocks[i].occupancy, result.blocks[i].occupancy_half_width,
                    result.blocks[i].rejection_rate);
    }
    std::printf("arrivals=%lld parked=%lld circulating=%lld hop_capped=%lld sink_exits=%lld%s\n",
                static_cast<long long>(result.total_arrivals),
                static_cast<long long>(result.total_parked),
                static_cast<long long>(result.circulating_at_end),
                static_cast<long long>(result.hop_capped),
                static_cast<long long>(result.exited_at_sink),
                result.overloaded ? " [OVERLOADED, partial stats]" : "");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"curbflow: curbside parking as a network of loss queues — occupancy inversion, "
                 "cruising estimation, congestion-capped pricing, and a discrete-event oracle"};
    app.set_version_flag("--version", std::string("curbflow ") + kVersion);
    app.require_subcommand(1);

    GlobalArgs args;
    app.add_option("--scenario", args.scenario_path, "Scenario JSON path");
    app.add_option("--out", args.out_dir, "Directory for machine-readable output");
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "Override the simulation seed");
    app.add_option("--format", args.format, "Machine-readable format: json or csv")
        ->check(CLI::IsMember({"json", "csv"}));

    // invert
    auto* cmd_invert = app.add_subcommand("invert", "Arrival rate needed for an occupancy level");
    int inv_k = 1;
    double inv_mu = 1.0, inv_u = 0.0;
    cmd_invert->add_option("--k", inv_k, "Stall count")->required();
    cmd_invert->add_option("--mu", inv_mu, "Service rate per stall (1/hour)")->required();
    cmd_invert->add_option("--u", inv_u, "Occupancy target in [0, 0.999]")->required();

    // uniform
    auto* cmd_uniform =
        app.add_subcommand("uniform", "Fixed point of a d-regular network of identical blocks");
    int uni_k = 1, uni_d = 1;
    double uni_mu = 1.0, uni_lambda = 0.0;
    cmd_uniform->add_option("--k", uni_k, "Stall count")->required();
    cmd_uniform->add_option("--mu", uni_mu, "Service rate per stall (1/hour)")->required();
    cmd_uniform->add_option("--lambda", uni_lambda, "Exogenous arrivals (veh/hour)")->required();
    cmd_uniform->add_option("--degree", uni_d, "Out-degree d")->required();

    // network solve | estimate
    auto* cmd_network = app.add_subcommand("network", "Solve or estimate network flows");
    cmd_network->require_subcommand(1);
    std::string net_solve_path, net_estimate_path;
    auto* cmd_net_solve =
        cmd_network->add_subcommand("solve", "Forward flows from exogenous rates");
    cmd_net_solve->add_option("scenario", net_solve_path, "Scenario JSON path");
    auto* cmd_net_estimate =
        cmd_network->add_subcommand("estimate", "Arrivals and cruising from observed occupancy");
    cmd_net_estimate->add_option("scenario", net_estimate_path, "Scenario JSON path");

    // optimize
    auto* cmd_optimize =
        app.add_subcommand("optimize", "Occupancy-maximizing prices under congestion caps");
    std::string optimize_path;
    cmd_optimize->add_option("scenario", optimize_path, "Scenario JSON path");

    // simulate
    auto* cmd_simulate = app.add_subcommand("simulate", "Discrete-event simulation of a scenario");
    std::string simulate_path;
    cmd_simulate->add_option("scenario", simulate_path, "Scenario JSON path");

    // report
    auto* cmd_report = app.add_subcommand("report", "Run every applicable solve and write a report");
    std::string report_path;
    bool report_simulate = false;
    cmd_report->add_option("scenario", report_path, "Scenario JSON path");
    cmd_report->add_flag("--simulate", report_simulate, "Also run the simulator if configured");

    // plot
    auto* cmd_plot = app.add_subcommand("plot", "Emit plot-ready CSV series (optionally SVG)");
    std::string plot_path, plot_kind = "all";
    std::vector<int> plot_ks;
    double plot_mu = 1.0, plot_umax = 0.98;
    int plot_points = 49;
    bool plot_svg = false;
    cmd_plot->add_option("scenario", plot_path, "Scenario JSON path (not needed for curves)");
    cmd_plot->add_option("--kind", plot_kind, "curves, cruising, prices, or all")
        ->check(CLI::IsMember({"curves", "cruising", "prices", "all"}));
    cmd_plot->add_option("--ks", plot_ks, "Stall counts for the occupancy curves");
    cmd_plot->add_option("--mu", plot_mu, "Service rate for the occupancy curves");
    cmd_plot->add_option("--points", plot_points, "Grid points per curve");
    cmd_plot->add_option("--umax", plot_umax, "Upper occupancy for the curves");
    cmd_plot->add_flag("--svg", plot_svg, "Also render simple SVG charts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (seed_opt->count() > 0) args.seed = seed_value;

    try {
        if (*cmd_invert) {
            const QueueParams params(inv_k, inv_mu);
            const double y = invert_occupancy(params, OccupancyTarget(inv_u));
            std::printf("y = %.6f\n", y);
            write_command_result(args, {{"command", "invert"},
                                        {"inputs", {{"k", inv_k}, {"mu", inv_mu}, {"u", inv_u}}},
                                        {"outputs", {{"y", io::round12(y)}}}});
        } else if (*cmd_uniform) {
            const QueueParams params(uni_k, uni_mu);
            const UniformSolution sol = solve_uniform(params, uni_lambda, uni_d);
            std::printf("y = %g, x = %g\n", sol.y, sol.per_neighbor_rejection);
            write_command_result(
                args,
                {{"command", "uniform"},
                 {"inputs",
                  {{"k", uni_k}, {"mu", uni_mu}, {"lambda", uni_lambda}, {"degree", uni_d}}},
                 {"outputs",
                  {{"y", io::round12(sol.y)},
                   {"x", io::round12(sol.per_neighbor_rejection)},
                   {"residual", sol.residual <= 1e-10}}}});
        } else if (*cmd_network) {
            const bool estimate = cmd_net_estimate->parsed();
            io::Report report;
            report.scenario = load(args, estimate ? net_estimate_path : net_solve_path);
            report.warnings = report.scenario.warnings;
            solve_flows(report, estimate ? "estimate" : "solve");
            print_flows(report);
            write_full_report(args, report);
        } else if (*cmd_optimize) {
            io::Report report;
            report.scenario = load(args, optimize_path);
            report.warnings = report.scenario.warnings;
            const bool has_baseline = std::all_of(
                report.scenario.blocks.begin(), report.scenario.blocks.end(),
                [](const auto& b) { return b.observed_u.has_value() || b.lambda.has_value(); });
            if (has_baseline) {
                try {
                    solve_flows(report, "auto");
                } catch (const ValidationError&) {
                    // baseline flows are optional context for optimize
                }
            }
            add_pricing(report);
            print_pricing(report);
            write_full_report(args, report);
        } else if (*cmd_simulate) {
            io::Report report;
            report.scenario = load(args, simulate_path);
            report.warnings = report.scenario.warnings;
            add_simulation(report, args);
            print_simulation(report);
            write_full_report(args, report);
        } else if (*cmd_report) {
            io::Report report;
            report.scenario = load(args, report_path);
            report.warnings = report.scenario.warnings;
            solve_flows(report, "auto");
            print_flows(report);
            bool priced = false;
            try {
                add_pricing(report);
                priced = true;
            } catch (const ValidationError& e) {
                report.warnings.push_back(std::string("pricing skipped: ") + e.what());
                log(log_warn, std::string("pricing skipped: ") + e.what());
            }
            if (priced) print_pricing(report);
            if (report_simulate || report.scenario.sim_config) {
                add_simulation(report, args);
                print_simulation(report);
            }
            write_full_report(args, report);
            if (args.out_dir.empty()) {
                log(log_warn, "no --out directory given; machine-readable report not written");
            }
        } else if (*cmd_plot) {
            io::PlotOptions options;
            if (!plot_ks.empty()) options.stall_counts = plot_ks;
            options.mu = plot_mu;
            options.points = plot_points;
            options.u_max = plot_umax;
            options.svg = plot_svg;
            const std::string out = args.out_dir.empty() ? "." : args.out_dir;

            io::Report report;
            if (plot_kind != "curves") {
                report.scenario = load(args, plot_path);
                report.warnings = report.scenario.warnings;
                solve_flows(report, "auto");
                if (plot_kind == "prices" || plot_kind == "all") {
                    try {
                        add_pricing(report);
                    } catch (const ValidationError& e) {
                        if (plot_kind == "prices") throw;
                        log(log_warn, std::string("pricing series skipped: ") + e.what());
                    }
                }
            }
            const auto written = io::emit_plot_data(report, plot_kind, out, options);
            for (const auto& p : written) std::printf("wrote %s\n", p.string().c_str());
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
