#include "curbflow/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "curbflow/version.hpp"

namespace curbflow::io {

namespace {

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ValidationError("cannot write '" + path.string() + "'");
    }
    out << text;
}

} // namespace

nlohmann::json flows_to_json(const net::NetworkFlows& flows, const Scenario& scenario) {
    nlohmann::json j;
    j["mode"] = flows.estimated ? "estimate" : "forward";
    j["converged"] = flows.converged;
    j["iterations"] = flows.iterations;
    j["residual"] = round12(flows.residual);
    j["conservation_residual"] = round12(flows.conservation_residual);
    j["sink_leakage"] = round12(flows.sink_leakage);

    nlohmann::json blocks = nlohmann::json::object();
    for (size_t i = 0; i < scenario.blocks.size(); ++i) {
        nlohmann::json b;
        b["y"] = round12(flows.y[static_cast<Eigen::Index>(i)]);
        b["occupancy"] = round12(flows.occupancy[static_cast<Eigen::Index>(i)]);
        b["rejection_out"] = round12(flows.rejection_out[static_cast<Eigen::Index>(i)]);
        if (flows.estimated) {
            b["lambda_inferred"] = round12(flows.lambda_inferred[static_cast<Eigen::Index>(i)]);
            if (flows.clamp_residual.size() > 0 &&
                flows.clamp_residual[static_cast<Eigen::Index>(i)] > 0.0) {
                b["clamped"] = true;
                b["clamp_residual"] = round12(flows.clamp_residual[static_cast<Eigen::Index>(i)]);
            }
        } else {
            b["lambda"] = round12(flows.lambda[static_cast<Eigen::Index>(i)]);
        }
        blocks[scenario.blocks[i].id] = std::move(b);
    }
    j["blocks"] = std::move(blocks);

    nlohmann::json edges = nlohmann::json::array();
    for (size_t e = 0; e < scenario.graph.edges.size(); ++e) {
        edges.push_back({{"from", scenario.graph.edges[e].from},
                         {"to", scenario.graph.edges[e].to},
                         {"flow", round12(flows.edge_flow[static_cast<Eigen::Index>(e)])}});
    }
    j["edge_flows"] = std::move(edges);
    return j;
}

nlohmann::json pricing_to_json(const pricing::PricingSolution& solution) {
    nlohmann::json j;
    j["objective"] = round12(solution.objective);
    j["kkt_residual"] = round12(solution.kkt_residual);
    j["iterations"] = solution.iterations;
    nlohmann::json blocks = nlohmann::json::object();
    for (size_t i = 0; i < solution.ids.size(); ++i) {
        const auto idx = static_cast<Eigen::Index>(i);
        blocks[solution.ids[i]] = {{"price", round12(solution.prices[idx])},
                                   {"floor", round12(solution.floors[idx])},
                                   {"occupancy", round12(solution.occupancies[idx])},
                                   {"rejection", round12(solution.rejections[idx])},
                                   {"cap_binding", static_cast<bool>(solution.binding[i])}};
    }
    j["blocks"] = std::move(blocks);
    return j;
}

nlohmann::json sim_result_to_json(const sim::SimResult& result, const Scenario& scenario) {
    nlohmann::json j;
    j["replications"] = result.replications;
    j["measured_hours"] = round12(result.measured_hours);
    j["overloaded"] = result.overloaded;
    j["total_arrivals"] = result.total_arrivals;
    j["total_parked"] = result.total_parked;
    j["circulating_at_end"] = result.circulating_at_end;
    j["hop_capped"] = result.hop_capped;
    j["exited_at_sink"] = result.exited_at_sink;

    nlohmann::json blocks = nlohmann::json::object();
    for (size_t i = 0; i < result.blocks.size(); ++i) {
        const auto& st = result.blocks[i];
        blocks[scenario.blocks[i].id] = {{"occupancy", round12(st.occupancy)},
                                         {"occupancy_half_width", round12(st.occupancy_half_width)},
                                         {"rejection_rate", round12(st.rejection_rate)},
                                         {"arrival_rate", round12(st.arrival_rate)}};
    }
    j["blocks"] = std::move(blocks);

    nlohmann::json edges = nlohmann::json::array();
    for (size_t e = 0; e < scenario.graph.edges.size() && e < result.edge_flow.size(); ++e) {
        edges.push_back({{"from", scenario.graph.edges[e].from},
                         {"to", scenario.graph.edges[e].to},
                         {"flow", round12(result.edge_flow[e])}});
    }
    j["edge_flows"] = std::move(edges);

    nlohmann::json hops = nlohmann::json::array();
    for (auto count : result.hop_histogram) hops.push_back(count);
    j["hop_histogram"] = std::move(hops);
    return j;
}

nlohmann::json Report::to_json() const {
    nlohmann::json j;
    j["tool"] = "curbflow";
    j["version"] = kVersion;
    j["scenario"] = scenario.canonical();
    j["scenario_hash"] = "fnv1a64:" + scenario.content_hash();
    j["warnings"] = warnings;
    if (flows) j["flows"] = flows_to_json(*flows, scenario);
    if (pricing) j["pricing"] = pricing_to_json(*pricing);
    if (simulation) j["simulation"] = sim_result_to_json(*simulation, scenario);
    if (!cruising.empty()) {
        nlohmann::json c = nlohmann::json::object();
        for (const auto& [id, share] : cruising) {
            c[id] = {{"share", round12(share.share)},
                     {"rejection_inflow", round12(share.rejection_inflow)},
                     {"through_traffic", round12(share.through_traffic)},
                     {"out_of_range", share.out_of_range}};
        }
        j["cruising"] = std::move(c);
    }
    if (!demand.empty()) {
        nlohmann::json d = nlohmann::json::object();
        for (const auto& cd : demand) {
            nlohmann::json e;
            e["source"] = cd.source;
            if (cd.model) {
                e["alpha"] = round12(cd.model->alpha);
                e["p_min"] = round12(cd.model->p_min);
                e["p_max"] = round12(cd.model->p_max);
            }
            d[cd.id] = std::move(e);
        }
        j["demand_calibration"] = std::move(d);
    }
    return j;
}

std::vector<std::filesystem::path> write_report(const Report& report,
                                                const std::filesystem::path& out_dir,
                                                Format format) {
    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> written;

    if (format == Format::json) {
        const auto path = out_dir / "report.json";
        write_text(path, report.to_json().dump(2) + "\n");
        written.push_back(path);
        return written;
    }

    // CSV: one row per block wide table, plus edge flows and a summary.
    std::string blocks = "id,k,mu,lambda,observed_u,price,through_traffic,cap,y,occupancy,"
                         "rejection_out,lambda_inferred,opt_price,opt_occupancy,opt_rejection,"
                         "cap_binding,cruising_share,sim_occupancy,sim_rejection_rate\n";
    for (size_t i = 0; i < report.scenario.blocks.size(); ++i) {
        const auto& b = report.scenario.blocks[i];
        const auto idx = static_cast<Eigen::Index>(i);
        auto opt = [](const std::optional<double>& v) { return v ? num(*v) : std::string{}; };
        blocks += csv_escape(b.id) + ',' + std::to_string(b.params.k) + ',' + num(b.params.mu) +
                  ',' + opt(b.lambda) + ',' + opt(b.observed_u) + ',' + opt(b.price) + ',' +
                  opt(b.through_traffic) + ',' + opt(b.congestion_cap) + ',';
        if (report.flows) {
            blocks += num(round12(report.flows->y[idx])) + ',' +
                      num(round12(report.flows->occupancy[idx])) + ',' +
                      num(round12(report.flows->rejection_out[idx])) + ',';
            blocks += report.flows->estimated
                          ? num(round12(report.flows->lambda_inferred[idx])) + ","
                          : std::string{","};
        } else {
            blocks += ",,,";
        }
        if (report.pricing) {
            // Pricing rows align by id, not index; blocks may be excluded.
            const auto it = std::find(report.pricing->ids.begin(), report.pricing->ids.end(), b.id);
            if (it != report.pricing->ids.end()) {
                const auto pi = static_cast<Eigen::Index>(it - report.pricing->ids.begin());
                blocks += num(round12(report.pricing->prices[pi])) + ',' +
                          num(round12(report.pricing->occupancies[pi])) + ',' +
                          num(round12(report.pricing->rejections[pi])) + ',' +
                          (report.pricing->binding[static_cast<size_t>(pi)] ? "1" : "0") + ',';
            } else {
                blocks += ",,,,";
            }
        } else {
            blocks += ",,,,";
        }
        const auto cruise = report.cruising.find(b.id);
        blocks += cruise != report.cruising.end() ? num(round12(cruise->second.share)) + ","
                                                  : std::string{","};
        if (report.simulation && i < report.simulation->blocks.size()) {
            blocks += num(round12(report.simulation->blocks[i].occupancy)) + ',' +
                      num(round12(report.simulation->blocks[i].rejection_rate));
        } else {
            blocks += ",";
        }
        blocks += '\n';
    }
    const auto blocks_path = out_dir / "report_blocks.csv";
    write_text(blocks_path, blocks);
    written.push_back(blocks_path);

    if (report.flows) {
        std::string edges = "from,to,flow\n";
        for (size_t e = 0; e < report.scenario.graph.edges.size(); ++e) {
            edges += csv_escape(report.scenario.graph.edges[e].from) + ',' +
                     csv_escape(report.scenario.graph.edges[e].to) + ',' +
                     num(round12(report.flows->edge_flow[static_cast<Eigen::Index>(e)])) + '\n';
        }
        const auto edges_path = out_dir / "report_edges.csv";
        write_text(edges_path, edges);
        written.push_back(edges_path);
    }

    std::string summary = "key,value\n";
    summary += "tool,curbflow\n";
    summary += std::string("version,") + kVersion + "\n";
    summary += "scenario_hash,fnv1a64:" + report.scenario.content_hash() + "\n";
    if (report.flows) {
        summary += std::string("flows_mode,") + (report.flows->estimated ? "estimate" : "forward") + "\n";
        summary += "flows_conservation_residual," + num(round12(report.flows->conservation_residual)) + "\n";
    }
    if (report.pricing) {
        summary += "pricing_objective," + num(round12(report.pricing->objective)) + "\n";
        summary += "pricing_kkt_residual," + num(round12(report.pricing->kkt_residual)) + "\n";
    }
    for (const auto& w : report.warnings) summary += "warning," + csv_escape(w) + "\n";
    const auto summary_path = out_dir / "report_summary.csv";
    write_text(summary_path, summary);
    written.push_back(summary_path);
    return written;
}

} // namespace curbflow::io
