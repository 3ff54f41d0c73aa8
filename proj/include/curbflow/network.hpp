#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "curbflow/inversion.hpp"
#include "curbflow/loss_queue.hpp"

namespace curbflow::net {

/// One block-face and everything a scenario may know about it. Optional
/// fields stay absent when unknown; absence is distinct from zero.
struct BlockFace {
    std::string id;
    QueueParams params;
    std::optional<double> lambda;          // exogenous arrivals, veh/hour
    std::optional<double> observed_u;      // measured occupancy
    std::optional<double> price;           // posted price, $/hour
    std::optional<double> alpha;           // demand slope, occupancy per dollar
    std::optional<double> congestion_cap;  // max tolerable rejection rate, veh/hour
    std::optional<double> through_traffic; // observed total through-traffic, veh/hour
};

struct Edge {
    std::string from;
    std::string to;
    std::optional<double> weight; // absent => uniform split over the tail's out-edges
};

/// Directed block-face adjacency. Rejected drivers leave a node along its
/// out-edges in proportion to the routing weights, which must form a
/// row-stochastic split at every node that has out-edges.
struct StreetGraph {
    std::vector<std::string> nodes;
    std::vector<Edge> edges;
};

struct ValidationIssue {
    enum class Kind {
        dangling_endpoint,
        self_loop,
        non_stochastic_row,
        mixed_weights,
        negative_weight,
        sink_node,
        disconnected,
        duplicate_node,
    };
    Kind kind;
    std::string message;
    bool is_error = true; // warnings (sinks, disconnection) keep solves legal
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;

    bool ok() const { return issues.empty(); }
    bool has_errors() const;
};

/// Routing resolved to indices with weights normalized per tail node.
struct ResolvedRouting {
    std::vector<int> edge_from;
    std::vector<int> edge_to;
    Eigen::VectorXd edge_weight;
    Eigen::MatrixXd routing; // routing(j, i) = share of j's rejections sent to i
    std::vector<int> sinks;  // nodes with no out-edges
};

struct SolveOptions {
    double damping = 0.5;
    double tolerance = 1e-10;
    int max_iterations = 100000;
};

/// Per-node steady-state flows. In forward mode lambda holds the inputs; in
/// estimation mode lambda_inferred holds the recovered exogenous rates and
/// clamped_nodes lists nodes whose inferred rate was negative (model
/// inconsistency) before clamping to zero.
struct NetworkFlows {
    Eigen::VectorXd y;
    Eigen::VectorXd rejection_out;
    Eigen::VectorXd occupancy;
    Eigen::VectorXd lambda;
    Eigen::VectorXd lambda_inferred;
    Eigen::VectorXd edge_flow;
    std::vector<int> clamped_nodes;
    Eigen::VectorXd clamp_residual;
    bool estimated = false;
    bool converged = true;
    int iterations = 0;
    double residual = 0.0;
    double sink_leakage = 0.0;          // rejection flow exiting at sink nodes
    double conservation_residual = 0.0; // | sum lambda - sum carried - leakage |
};

/// Non-convergence of the forward fixed point, carrying the last iterate.
class ConvergenceError : public NumericError {
public:
    ConvergenceError(const std::string& what, NetworkFlows last)
        : NumericError(what), last_iterate(std::move(last)) {}
    NetworkFlows last_iterate;
};

struct CruisingShare {
    double share = 0.0;          // rejection inflow / through traffic, clamped to [0, 1]
    double rejection_inflow = 0.0;
    double through_traffic = 0.0;
    bool out_of_range = false;   // model inflow exceeded the observation
};

/// Report-only structural check: stochastic rows, dangling endpoints,
/// self-loops, sinks, weak connectivity.
ValidationReport validate_graph(const StreetGraph& graph);

/// Resolves ids to indices and fills omitted weights with a uniform split.
/// Throws ValidationError on structural errors (warnings pass through).
ResolvedRouting resolve_routing(const StreetGraph& graph);

/// Damped fixed point of y_i = lambda_i + sum_j routing(j,i) * y_j * B_j(y_j).
/// Every block needs lambda. Screens sum(lambda) < sum(k*mu) first.
NetworkFlows forward_solve(const StreetGraph& graph, const std::vector<BlockFace>& blocks,
                           const SolveOptions& options = {});

/// Direct per-node solution from observed occupancies: y_i by inversion,
/// rejections from the occupancy law, exogenous rates by subtracting the
/// routed rejection inflow. Negative inferred rates are clamped and flagged.
NetworkFlows estimate_from_occupancy(const StreetGraph& graph,
                                     const std::vector<BlockFace>& blocks);

/// Fraction of a block's observed through-traffic explained by circulating
/// rejected drivers.
CruisingShare cruising_share(const NetworkFlows& flows, const StreetGraph& graph,
                             const std::vector<BlockFace>& blocks, const std::string& block_id);

int node_index(const StreetGraph& graph, const std::string& id);

} // namespace curbflow::net
