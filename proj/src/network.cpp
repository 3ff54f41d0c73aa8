#include "curbflow/network.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace curbflow::net {

namespace {

std::unordered_map<std::string, int> index_of(const StreetGraph& graph) {
    std::unordered_map<std::string, int> idx;
    idx.reserve(graph.nodes.size());
    for (int i = 0; i < static_cast<int>(graph.nodes.size()); ++i) {
        idx.emplace(graph.nodes[i], i);
    }
    return idx;
}

void check_blocks_align(const StreetGraph& graph, const std::vector<BlockFace>& blocks) {
    if (blocks.size() != graph.nodes.size()) {
        throw ValidationError("graph has " + std::to_string(graph.nodes.size()) +
                              " nodes but " + std::to_string(blocks.size()) +
                              " block records were supplied");
    }
    for (size_t i = 0; i < blocks.size(); ++i) {
        if (blocks[i].id != graph.nodes[i]) {
            throw ValidationError("block order mismatch at position " + std::to_string(i) +
                                  ": graph node '" + graph.nodes[i] + "' vs block '" +
                                  blocks[i].id + "'");
        }
        blocks[i].params.validate();
    }
}

void fill_derived(const StreetGraph& graph, const ResolvedRouting& routing,
                  const std::vector<BlockFace>& blocks, NetworkFlows& flows) {
    const int n = static_cast<int>(graph.nodes.size());
    flows.occupancy.resize(n);
    flows.rejection_out.resize(n);
    for (int i = 0; i < n; ++i) {
        flows.rejection_out[i] = flows.y[i] * erlang_blocking(blocks[i].params, flows.y[i]);
        flows.occupancy[i] = occupancy(blocks[i].params, flows.y[i]);
    }
    const int m = static_cast<int>(routing.edge_from.size());
    flows.edge_flow.resize(m);
    for (int e = 0; e < m; ++e) {
        flows.edge_flow[e] = routing.edge_weight[e] * flows.rejection_out[routing.edge_from[e]];
    }
    flows.sink_leakage = 0.0;
    for (int s : routing.sinks) flows.sink_leakage += flows.rejection_out[s];

    const double carried = (flows.y.array() - flows.rejection_out.array()).sum();
    const double lambda_total = flows.estimated ? flows.lambda_inferred.sum() : flows.lambda.sum();
    flows.conservation_residual = std::abs(lambda_total - carried - flows.sink_leakage);
}

} // namespace

bool ValidationReport::has_errors() const {
    return std::any_of(issues.begin(), issues.end(),
                       [](const ValidationIssue& v) { return v.is_error; });
}

int node_index(const StreetGraph& graph, const std::string& id) {
    for (int i = 0; i < static_cast<int>(graph.nodes.size()); ++i) {
        if (graph.nodes[i] == id) return i;
    }
    throw ValidationError("unknown block id '" + id + "'");
}

ValidationReport validate_graph(const StreetGraph& graph) {
    ValidationReport report;
    auto add = [&](ValidationIssue::Kind kind, std::string msg, bool is_error = true) {
        report.issues.push_back({kind, std::move(msg), is_error});
    };

    std::unordered_set<std::string> seen;
    for (const auto& id : graph.nodes) {
        if (!seen.insert(id).second) {
            add(ValidationIssue::Kind::duplicate_node, "duplicate node id '" + id + "'");
        }
    }

    const auto idx = index_of(graph);
    const int n = static_cast<int>(graph.nodes.size());
    std::vector<double> weight_sum(n, 0.0);
    std::vector<int> out_degree(n, 0), with_weight(n, 0);
    std::vector<std::vector<int>> undirected(n);

    for (const auto& e : graph.edges) {
        const auto from = idx.find(e.from);
        const auto to = idx.find(e.to);
        if (from == idx.end() || to == idx.end()) {
            add(ValidationIssue::Kind::dangling_endpoint,
                "edge " + e.from + " -> " + e.to + " references an unknown block id");
            continue;
        }
        if (from->second == to->second) {
            add(ValidationIssue::Kind::self_loop, "self-loop at '" + e.from + "'");
            continue;
        }
        ++out_degree[from->second];
        if (e.weight) {
            ++with_weight[from->second];
            if (*e.weight < 0.0) {
                add(ValidationIssue::Kind::negative_weight,
                    "negative routing weight on edge " + e.from + " -> " + e.to);
            }
            weight_sum[from->second] += *e.weight;
        }
        undirected[from->second].push_back(to->second);
        undirected[to->second].push_back(from->second);
    }

    for (int i = 0; i < n; ++i) {
        if (out_degree[i] == 0) {
            add(ValidationIssue::Kind::sink_node,
                "node '" + graph.nodes[i] + "' has no out-edges; its rejections leave the network",
                /*is_error=*/false);
            continue;
        }
        if (with_weight[i] == 0) continue; // uniform split
        if (with_weight[i] != out_degree[i]) {
            add(ValidationIssue::Kind::mixed_weights,
                "node '" + graph.nodes[i] + "' mixes explicit and omitted routing weights");
        } else if (std::abs(weight_sum[i] - 1.0) > 1e-9) {
            add(ValidationIssue::Kind::non_stochastic_row,
                "routing weights out of node '" + graph.nodes[i] + "' sum to " +
                    std::to_string(weight_sum[i]) + ", expected 1");
        }
    }

    if (n > 1) {
        std::vector<char> reached(n, 0);
        std::vector<int> stack{0};
        reached[0] = 1;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            for (int w : undirected[v]) {
                if (!reached[w]) {
                    reached[w] = 1;
                    stack.push_back(w);
                }
            }
        }
        if (std::count(reached.begin(), reached.end(), 1) != n) {
            add(ValidationIssue::Kind::disconnected,
                "graph is not connected; isolated components are solved independently",
                /*is_error=*/false);
        }
    }
    return report;
}

ResolvedRouting resolve_routing(const StreetGraph& graph) {
    const ValidationReport report = validate_graph(graph);
    if (report.has_errors()) {
        std::string msg = "graph validation failed:";
        for (const auto& issue : report.issues) {
            if (issue.is_error) msg += "\n  - " + issue.message;
        }
        throw ValidationError(msg);
    }

    const auto idx = index_of(graph);
    const int n = static_cast<int>(graph.nodes.size());
    ResolvedRouting r;
    r.routing = Eigen::MatrixXd::Zero(n, n);

    std::vector<int> out_degree(n, 0);
    for (const auto& e : graph.edges) ++out_degree[idx.at(e.from)];

    r.edge_weight.resize(static_cast<Eigen::Index>(graph.edges.size()));
    for (size_t eidx = 0; eidx < graph.edges.size(); ++eidx) {
        const auto& e = graph.edges[eidx];
        const int from = idx.at(e.from);
        const int to = idx.at(e.to);
        const double w = e.weight ? *e.weight : 1.0 / static_cast<double>(out_degree[from]);
        r.edge_from.push_back(from);
        r.edge_to.push_back(to);
        r.edge_weight[static_cast<Eigen::Index>(eidx)] = w;
        r.routing(from, to) += w;
    }
    for (int i = 0; i < n; ++i) {
        if (out_degree[i] == 0) r.sinks.push_back(i);
    }
    return r;
}

NetworkFlows forward_solve(const StreetGraph& graph, const std::vector<BlockFace>& blocks,
                           const SolveOptions& options) {
    check_blocks_align(graph, blocks);
    const ResolvedRouting routing = resolve_routing(graph);
    const int n = static_cast<int>(graph.nodes.size());

    Eigen::VectorXd lambda(n);
    double capacity = 0.0;
    for (int i = 0; i < n; ++i) {
        if (!blocks[i].lambda) {
            throw ValidationError("forward solve needs an exogenous rate for block '" +
                                  blocks[i].id + "'");
        }
        if (*blocks[i].lambda < 0.0 || !std::isfinite(*blocks[i].lambda)) {
            throw ValidationError("negative or non-finite exogenous rate on block '" +
                                  blocks[i].id + "'");
        }
        lambda[i] = *blocks[i].lambda;
        capacity += static_cast<double>(blocks[i].params.k) * blocks[i].params.mu;
    }
    if (lambda.sum() >= capacity) {
        throw InstabilityError(
            "total exogenous arrivals " + std::to_string(lambda.sum()) +
            " reach total capacity " + std::to_string(capacity) +
            "; the network cannot absorb the demand (necessary condition, not sufficient)");
    }

    NetworkFlows flows;
    flows.lambda = lambda;
    flows.y = lambda;
    const double theta = options.damping;

    Eigen::VectorXd rejection(n), next(n);
    int it = 0;
    double residual = std::numeric_limits<double>::infinity();
    for (; it < options.max_iterations; ++it) {
        for (int i = 0; i < n; ++i) {
            rejection[i] = flows.y[i] * erlang_blocking(blocks[i].params, flows.y[i]);
        }
        next = (1.0 - theta) * flows.y +
               theta * (lambda + routing.routing.transpose() * rejection);
        residual = (next - flows.y).cwiseAbs().maxCoeff();
        flows.y = next;
        if (residual <= options.tolerance) {
            ++it;
            break;
        }
    }
    flows.iterations = it;
    flows.residual = residual;
    flows.converged = residual <= options.tolerance;
    fill_derived(graph, routing, blocks, flows);
    if (!flows.converged) {
        throw ConvergenceError("forward solve did not converge after " +
                                   std::to_string(options.max_iterations) +
                                   " iterations (last update " + std::to_string(residual) + ")",
                               flows);
    }
    return flows;
}

NetworkFlows estimate_from_occupancy(const StreetGraph& graph,
                                     const std::vector<BlockFace>& blocks) {
    check_blocks_align(graph, blocks);
    const ResolvedRouting routing = resolve_routing(graph);
    const int n = static_cast<int>(graph.nodes.size());

    NetworkFlows flows;
    flows.estimated = true;
    flows.y.resize(n);
    for (int i = 0; i < n; ++i) {
        if (!blocks[i].observed_u) {
            throw ValidationError("estimation needs an observed occupancy for block '" +
                                  blocks[i].id + "'");
        }
        OccupancyTarget target = [&] {
            try {
                return OccupancyTarget(*blocks[i].observed_u);
            } catch (const ValidationError& err) {
                throw ValidationError("block '" + blocks[i].id + "': " + err.what());
            }
        }();
        flows.y[i] = invert_occupancy(blocks[i].params, target);
    }

    flows.rejection_out.resize(n);
    flows.occupancy.resize(n);
    for (int i = 0; i < n; ++i) {
        const double ukmu = *blocks[i].observed_u * static_cast<double>(blocks[i].params.k) *
                            blocks[i].params.mu;
        flows.rejection_out[i] = std::max(0.0, flows.y[i] - ukmu);
        flows.occupancy[i] = *blocks[i].observed_u;
    }

    Eigen::VectorXd inflow = routing.routing.transpose() * flows.rejection_out;
    flows.lambda_inferred = flows.y - inflow;
    flows.clamp_residual = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
        if (flows.lambda_inferred[i] < 0.0) {
            flows.clamped_nodes.push_back(i);
            flows.clamp_residual[i] = -flows.lambda_inferred[i];
            flows.lambda_inferred[i] = 0.0;
        }
    }
    flows.lambda = flows.lambda_inferred;

    const int m = static_cast<int>(routing.edge_from.size());
    flows.edge_flow.resize(m);
    for (int e = 0; e < m; ++e) {
        flows.edge_flow[e] = routing.edge_weight[e] * flows.rejection_out[routing.edge_from[e]];
    }
    flows.sink_leakage = 0.0;
    for (int s : routing.sinks) flows.sink_leakage += flows.rejection_out[s];
    const double carried = (flows.y.array() - flows.rejection_out.array()).sum();
    flows.conservation_residual =
        std::abs(flows.lambda_inferred.sum() - carried - flows.sink_leakage);
    return flows;
}

CruisingShare cruising_share(const NetworkFlows& flows, const StreetGraph& graph,
                             const std::vector<BlockFace>& blocks, const std::string& block_id) {
    const int i = node_index(graph, block_id);
    if (!blocks[i].through_traffic || *blocks[i].through_traffic <= 0.0) {
        throw ValidationError("cruising share for '" + block_id +
                              "' needs a positive observed through-traffic rate");
    }
    const ResolvedRouting routing = resolve_routing(graph);
    double inflow = 0.0;
    for (int e = 0; e < static_cast<int>(routing.edge_from.size()); ++e) {
        if (routing.edge_to[e] == i) inflow += flows.edge_flow[e];
    }
    CruisingShare share;
    share.rejection_inflow = inflow;
    share.through_traffic = *blocks[i].through_traffic;
    const double raw = inflow / share.through_traffic;
    share.out_of_range = raw > 1.0;
    share.share = std::clamp(raw, 0.0, 1.0);
    return share;
}

} // namespace curbflow::net
