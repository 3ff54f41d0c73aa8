#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "curbflow/inversion.hpp"
#include "curbflow/network.hpp"

namespace curbflow::pricing {

/// Linear demand: posted price p maps to target occupancy 1 - alpha*p,
/// clamped into [0, kOccupancyCap].
struct ElasticityModel {
    double alpha = 0.0; // occupancy per dollar, > 0
    double p_min = 0.0;
    double p_max = 0.0;

    ElasticityModel() = default;
    ElasticityModel(double alpha_, double p_min_, double p_max_);
};

struct PricedBlock {
    net::BlockFace block;
    ElasticityModel model;
    std::optional<double> cap; // absent => unconstrained
    double weight = 1.0;       // objective weight (stall count by default)
};

enum class ObjectiveWeights { stalls, uniform };

struct PricingProblem {
    std::vector<PricedBlock> blocks;
    ObjectiveWeights weights = ObjectiveWeights::stalls;
};

struct PricingSolution {
    std::vector<std::string> ids;
    Eigen::VectorXd prices;      // projected-gradient solution
    Eigen::VectorXd floors;      // closed-form per-block feasibility floors
    Eigen::VectorXd occupancies; // U_i(p_i)
    Eigen::VectorXd rejections;  // g_i(p_i)
    std::vector<bool> binding;   // cap active at the solution
    double objective = 0.0;      // sum_i w_i * U_i(p_i)
    double kkt_residual = 0.0;   // max |projected-gradient price - floor|
    int iterations = 0;
};

struct ConvexityReport {
    int points = 0;
    double min_second_difference = 0.0; // of g over the price grid
    double min_certificate = 0.0;       // min convexity_margin over the grid
    bool passed = true;
    std::vector<std::string> violations;
};

/// Demand occupancy at price p. p must lie inside the model's price box.
double occupancy_of_price(const ElasticityModel& model, double p);

/// Rejection rate at price p: f(U(p)) - U(p)*k*mu, the arrival rate needed to
/// hold the demanded occupancy minus the carried part. Nonincreasing in p.
double rejection_of_price(const QueueParams& params, const ElasticityModel& model, double p);

/// Smallest price in the box whose rejection rate respects the cap, found by
/// bisection on the monotone price -> rejection map. Throws InfeasibleError
/// (naming block_id) when even p_max violates the cap.
double congestion_price_floor(const QueueParams& params, const ElasticityModel& model,
                              double cap, const std::string& block_id = {});

/// Occupancy-maximizing prices under per-block congestion caps. Runs the
/// projected-gradient iteration and cross-checks it against the closed-form
/// decoupled solution (each block at its congestion price floor).
PricingSolution optimize_prices(const PricingProblem& problem);

/// Numeric convexity check of the price -> rejection map over a price grid:
/// second differences of g and the implicit-derivative sign certificate.
ConvexityReport verify_convexity(const QueueParams& params, const ElasticityModel& model,
                                 const std::vector<double>& price_grid);

} // namespace curbflow::pricing
